//! Mining lane-change and roundabout-crossing events from canonical datasets.

use rayon::prelude::*;
use serde::Serialize;

use super::{
    scenario_id, LaneChangeDirection, LaneChangeGoal, Maneuver, RefSample, ReferenceTrajectory, RoundaboutGoal,
    Scenario, Split,
};
use crate::data::{grid_tick, tick_time, TrajectoryDataset, VehicleTrack, GRID_RATE};
use crate::geometry::{line_crossing_parameter, Polyline, Vec2};
use crate::map::{gate_crossed, lateral_offset, GateKind, GateSegment, RoadMap};

/// History required before a lane-change event, seconds.
pub const LANE_CHANGE_HISTORY: f64 = 5.0;
/// Lane-change episode length, seconds.
pub const LANE_CHANGE_TIMEOUT: f64 = 10.0;
/// Arc length driven before the roundabout entry when the scenario starts, meters.
pub const ROUNDABOUT_APPROACH: f64 = 20.0;
pub const ROUNDABOUT_TIMEOUT_FACTOR: f64 = 1.5;
/// Exit gates farther than this from the reference drive are not considered passed.
pub const PASSED_EXIT_RADIUS: f64 = 15.0;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExtractionReport {
    pub tracks_scanned: usize,
    pub events: usize,
    pub scenarios: usize,
    /// (track id, reason) for every skipped event or track.
    pub skipped: Vec<(i64, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub scenarios: Vec<Scenario>,
    pub report: ExtractionReport,
}

impl Extraction {
    fn merge(per_track: Vec<(Vec<Scenario>, usize, Vec<(i64, String)>)>) -> Self {
        let mut out = Extraction {
            scenarios: Vec::new(),
            report: ExtractionReport {
                tracks_scanned: per_track.len(),
                ..Default::default()
            },
        };
        for (scenarios, events, skipped) in per_track {
            out.report.events += events;
            out.scenarios.extend(scenarios);
            out.report.skipped.extend(skipped);
        }
        out.report.scenarios = out.scenarios.len();
        out
    }
}

fn reference_from(track: &VehicleTrack, start_index: usize) -> Option<ReferenceTrajectory> {
    ReferenceTrajectory::new(track.samples[start_index..].iter().map(RefSample::from).collect()).ok()
}

/// One scenario per lane-id change with at least five seconds of prior history.
pub fn extract_lane_changes(dataset: &TrajectoryDataset, map: &RoadMap) -> Extraction {
    let history_ticks = (LANE_CHANGE_HISTORY * GRID_RATE).round() as i64;
    let timeout_ticks = (LANE_CHANGE_TIMEOUT * GRID_RATE).round() as i64;
    let tracks: Vec<&VehicleTrack> = dataset.tracks.values().collect();

    let per_track = tracks
        .par_iter()
        .map(|track| {
            let mut scenarios = Vec::new();
            let mut skipped = Vec::new();
            let mut events = 0;
            let lanes: Vec<Option<i64>> = track
                .samples
                .iter()
                .map(|s| s.lane_id.or_else(|| map.lane_at(Vec2::new(s.x, s.y))))
                .collect();
            let first_tick = grid_tick(track.start_time());
            for i in 1..track.samples.len() {
                let (Some(from), Some(to)) = (lanes[i - 1], lanes[i]) else {
                    continue;
                };
                if from == to {
                    continue;
                }
                events += 1;
                let event_tick = grid_tick(track.samples[i].t);
                let start_tick = event_tick - history_ticks;
                if start_tick < first_tick {
                    skipped.push((
                        track.id,
                        format!("event at t={} lacks 5 s history", tick_time(event_tick)),
                    ));
                    continue;
                }
                let (Some(start_lane), Some(target_lane)) = (map.lane(from), map.lane(to)) else {
                    skipped.push((track.id, format!("lanes {from}->{to} not in map")));
                    continue;
                };
                let here = Vec2::new(track.samples[i].x, track.samples[i].y);
                let target_foot = target_lane.centerline.project(here).foot;
                let side = lateral_offset(target_foot, start_lane);
                let direction = if side > 0.0 {
                    LaneChangeDirection::Left
                } else if side < 0.0 {
                    LaneChangeDirection::Right
                } else {
                    skipped.push((track.id, format!("lanes {from} and {to} overlap")));
                    continue;
                };
                let start_index = (start_tick - first_tick) as usize;
                let Some(reference) = reference_from(track, start_index) else {
                    skipped.push((track.id, "degenerate reference".into()));
                    continue;
                };
                scenarios.push(Scenario {
                    scenario_id: scenario_id(&dataset.recording_id, track.id, event_tick, "lane_change"),
                    dataset: dataset.source,
                    recording_id: dataset.recording_id.clone(),
                    map_id: map.map_id.clone(),
                    ego_track_id: track.id,
                    start_time: tick_time(start_tick),
                    deadline: tick_time(start_tick + timeout_ticks),
                    maneuver: Maneuver::LaneChange(LaneChangeGoal {
                        start_lane_id: from,
                        target_lane_id: to,
                        direction,
                    }),
                    reference,
                    split: Split::Train,
                });
            }
            (scenarios, events, skipped)
        })
        .collect();
    Extraction::merge(per_track)
}

struct Crossing<'a> {
    gate: &'a GateSegment,
    /// Index of the sample before the crossing.
    index: usize,
    /// Arc length along the track at the crossing point.
    arc: f64,
}

fn crossings<'a>(track: &VehicleTrack, cumulative: &[f64], gates: &'a [GateSegment]) -> Vec<Crossing<'a>> {
    let mut out = Vec::new();
    for (i, w) in track.samples.windows(2).enumerate() {
        let (a, b) = (Vec2::new(w[0].x, w[0].y), Vec2::new(w[1].x, w[1].y));
        for gate in gates {
            if gate_crossed(a, b, gate) {
                let u = line_crossing_parameter(a, b, gate.endpoints[0], gate.endpoints[1])
                    .unwrap_or(0.0)
                    .clamp(0.0, 1.0);
                out.push(Crossing {
                    gate,
                    index: i,
                    arc: cumulative[i] + u * (cumulative[i + 1] - cumulative[i]),
                });
            }
        }
    }
    out
}

/// One scenario per track that crosses an entry gate and later an exit gate.
pub fn extract_roundabout_crossings(dataset: &TrajectoryDataset, map: &RoadMap) -> Extraction {
    let tracks: Vec<&VehicleTrack> = dataset.tracks.values().collect();
    let per_track = tracks
        .par_iter()
        .map(|track| match roundabout_scenario(dataset, map, track) {
            Ok(s) => (vec![s], 1, Vec::new()),
            Err((events, reason)) => (Vec::new(), events, vec![(track.id, reason)]),
        })
        .collect();
    Extraction::merge(per_track)
}

fn roundabout_scenario(
    dataset: &TrajectoryDataset,
    map: &RoadMap,
    track: &VehicleTrack,
) -> Result<Scenario, (usize, String)> {
    let points: Vec<Vec2> = track.samples.iter().map(|s| Vec2::new(s.x, s.y)).collect();
    let path = Polyline::new(points).ok_or((0, "track too short".to_string()))?;
    let cumulative = path.cumulative();
    let all = crossings(track, cumulative, &map.gates);

    let entry = all
        .iter()
        .find(|c| c.gate.kind == GateKind::RoundaboutEntry)
        .ok_or((0, "never crosses an entry gate".to_string()))?;
    let exit = all
        .iter()
        .find(|c| c.gate.kind == GateKind::RoundaboutExit && c.index >= entry.index && c.arc >= entry.arc)
        .ok_or((1, "enters but never crosses an exit gate".to_string()))?;

    // Latest sample still at least the approach distance before the entry crossing.
    let start_index = cumulative
        .iter()
        .rposition(|&s| entry.arc - s >= ROUNDABOUT_APPROACH)
        .unwrap_or(0);
    let start_tick = grid_tick(track.samples[start_index].t);
    let exit_tick = grid_tick(track.samples[exit.index + 1].t);
    let duration = tick_time(exit_tick - start_tick);
    let start_time = tick_time(start_tick);
    let deadline = start_time + ROUNDABOUT_TIMEOUT_FACTOR * duration;

    let base = cumulative[start_index];
    let entry_arc = entry.arc - base;
    let target_arc = exit.arc - base;
    let ring = Polyline::new(
        track.samples[entry.index..=exit.index + 1]
            .iter()
            .map(|s| Vec2::new(s.x, s.y))
            .collect(),
    )
    .ok_or((1, "degenerate crossing path".to_string()))?;
    let ring_base = cumulative[entry.index] - base;
    let last_prior_exit_arc = map
        .gates_of(GateKind::RoundaboutExit)
        .filter(|g| g.gate_id != exit.gate.gate_id)
        .filter_map(|g| {
            let p = ring.project(g.midpoint());
            let s = ring_base + p.s;
            (p.distance <= PASSED_EXIT_RADIUS && s > entry_arc && s < target_arc).then_some(s)
        })
        .fold(entry_arc, f64::max);

    let reference = reference_from(track, start_index).ok_or((1, "degenerate reference".to_string()))?;
    let entry_tick = grid_tick(track.samples[entry.index + 1].t);
    Ok(Scenario {
        scenario_id: scenario_id(&dataset.recording_id, track.id, entry_tick, "roundabout"),
        dataset: dataset.source,
        recording_id: dataset.recording_id.clone(),
        map_id: map.map_id.clone(),
        ego_track_id: track.id,
        start_time,
        deadline,
        maneuver: Maneuver::Roundabout(RoundaboutGoal {
            entry_gate_id: entry.gate.gate_id,
            target_exit_gate_id: exit.gate.gate_id,
            last_prior_exit_arc,
        }),
        reference,
        split: Split::Train,
    })
}
