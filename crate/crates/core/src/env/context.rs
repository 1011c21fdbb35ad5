//! A loaded suite with its maps, datasets, catalog and physics.

use std::collections::BTreeMap;
use std::path::Path;

use log::info;

use crate::data::{read_canonical, TrajectoryDataset};
use crate::error::{Error, Result};
use crate::map::{read_map, GateKind, RoadMap};
use crate::scenario::{read_suite, Maneuver, Scenario, ScenarioSet, Split};
use crate::sim::{default_catalog, PhysicsConfig, VehicleModel};

/// Read-only episode resources shared by every worker and connection.
#[derive(Debug, Clone)]
pub struct SuiteContext {
    pub set: ScenarioSet,
    pub maps: BTreeMap<String, RoadMap>,
    pub datasets: BTreeMap<String, TrajectoryDataset>,
    pub catalog: Vec<VehicleModel>,
    pub physics: PhysicsConfig,
}

impl SuiteContext {
    pub fn load(path: &Path, physics: PhysicsConfig, catalog: Option<Vec<VehicleModel>>) -> Result<Self> {
        let suite = read_suite(path)?;
        let maps = suite
            .maps
            .iter()
            .map(|(_, p)| read_map(p))
            .collect::<Result<Vec<_>>>()?;
        let datasets = suite
            .datasets
            .iter()
            .map(|(_, p)| read_canonical(p))
            .collect::<Result<Vec<_>>>()?;
        let ctx = Self::from_parts(suite.set, maps, datasets, physics, catalog)?;
        info!(
            "loaded suite {}: {} train / {} validation scenarios",
            path.display(),
            ctx.set.count(Split::Train),
            ctx.set.count(Split::Validation)
        );
        Ok(ctx)
    }

    /// Checks that every scenario's map, recording, lanes and gates exist.
    pub fn from_parts(
        set: ScenarioSet,
        maps: Vec<RoadMap>,
        datasets: Vec<TrajectoryDataset>,
        physics: PhysicsConfig,
        catalog: Option<Vec<VehicleModel>>,
    ) -> Result<Self> {
        physics.check()?;
        let maps: BTreeMap<_, _> = maps.into_iter().map(|m| (m.map_id.clone(), m)).collect();
        let datasets: BTreeMap<_, _> = datasets.into_iter().map(|d| (d.recording_id.clone(), d)).collect();
        let ctx = SuiteContext {
            set,
            maps,
            datasets,
            catalog: catalog.unwrap_or_else(default_catalog),
            physics,
        };
        for s in &ctx.set.scenarios {
            ctx.check_scenario(s)?;
        }
        Ok(ctx)
    }

    fn check_scenario(&self, s: &Scenario) -> Result<()> {
        let missing = |what: String| Error::Lookup(format!("scenario {}: {what}", s.scenario_id));
        let map = self
            .maps
            .get(&s.map_id)
            .ok_or_else(|| missing(format!("map `{}` not loaded", s.map_id)))?;
        let ds = self
            .datasets
            .get(&s.recording_id)
            .ok_or_else(|| missing(format!("recording `{}` not loaded", s.recording_id)))?;
        if ds.track(s.ego_track_id).is_none() {
            return Err(missing(format!("ego track {} not in recording", s.ego_track_id)));
        }
        match &s.maneuver {
            Maneuver::LaneChange(g) => {
                for id in [g.start_lane_id, g.target_lane_id] {
                    if map.lane(id).is_none() {
                        return Err(missing(format!("lane {id} not in map")));
                    }
                }
            }
            Maneuver::Roundabout(g) => {
                let entry = map.gate(g.entry_gate_id).map(|x| x.kind);
                let exit = map.gate(g.target_exit_gate_id).map(|x| x.kind);
                if entry != Some(GateKind::RoundaboutEntry) || exit != Some(GateKind::RoundaboutExit) {
                    return Err(missing(format!(
                        "gates {} / {} missing or of the wrong kind",
                        g.entry_gate_id, g.target_exit_gate_id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn map_for(&self, s: &Scenario) -> &RoadMap {
        &self.maps[&s.map_id]
    }

    pub fn dataset_for(&self, s: &Scenario) -> &TrajectoryDataset {
        &self.datasets[&s.recording_id]
    }

    /// Scenarios of one split (or all when `None`) in suite order.
    pub fn scenarios(&self, split: Option<Split>) -> Vec<&Scenario> {
        self.set
            .scenarios
            .iter()
            .filter(|s| split.is_none_or(|sp| s.split == sp))
            .collect()
    }
}
