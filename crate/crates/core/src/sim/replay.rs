//! Open-loop replay of recorded traffic on the 0.1 s grid.

use super::catalog::{match_vehicle_model, VehicleModel};
use super::AgentPose;
use crate::data::{grid_tick, TrajectoryDataset, VehicleTrack};
use crate::error::Result;
use crate::scenario::Scenario;

/// Non-ego tracks overlapping a scenario window, each paired with its catalog model.
#[derive(Debug, Clone)]
pub struct AgentReplayer<'a> {
    tracks: Vec<(&'a VehicleTrack, &'a VehicleModel)>,
}

impl<'a> AgentReplayer<'a> {
    pub fn new(scenario: &Scenario, dataset: &'a TrajectoryDataset, catalog: &'a [VehicleModel]) -> Result<Self> {
        let (lo, hi) = (grid_tick(scenario.start_time), grid_tick(scenario.deadline));
        let mut tracks = Vec::new();
        for track in dataset.tracks.values() {
            if track.id == scenario.ego_track_id {
                continue;
            }
            if grid_tick(track.end_time()) < lo || grid_tick(track.start_time()) > hi {
                continue;
            }
            let (model, _) = match_vehicle_model(track.length, track.width, catalog)?;
            tracks.push((track, model));
        }
        Ok(AgentReplayer { tracks })
    }

    /// Poses of every track that has a sample at `sim_time`, in track-id order.
    pub fn poses_at(&self, sim_time: f64) -> Vec<AgentPose> {
        let tick = grid_tick(sim_time);
        self.tracks
            .iter()
            .filter_map(|(track, model)| {
                track.sample_at_tick(tick).map(|s| AgentPose {
                    track_id: track.id,
                    x: s.x,
                    y: s.y,
                    yaw: s.yaw,
                    length: model.length,
                    width: model.width,
                    catalog_model: model.name.clone(),
                })
            })
            .collect()
    }
}

pub fn replay_agents(
    scenario: &Scenario,
    dataset: &TrajectoryDataset,
    catalog: &[VehicleModel],
    sim_time: f64,
) -> Result<Vec<AgentPose>> {
    Ok(AgentReplayer::new(scenario, dataset, catalog)?.poses_at(sim_time))
}
