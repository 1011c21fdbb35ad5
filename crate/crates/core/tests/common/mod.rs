#![allow(dead_code)]

use std::path::PathBuf;

use crts_core::env::SuiteContext;
use crts_core::sim::PhysicsConfig;
use crts_core::synthetic::{generate, SyntheticOptions};

/// A reduced synthetic suite built in memory.
pub fn small_suite() -> SuiteContext {
    let suite = generate(&SyntheticOptions {
        seed: 11,
        lane_change_slots: 8,
        roundabout_vehicles: 10,
    })
    .expect("synthetic generation");
    SuiteContext::from_parts(suite.set, suite.maps, suite.datasets, PhysicsConfig::default(), None)
        .expect("consistent suite")
}

pub fn bundled_suite_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets/synthetic/suite.crts")
}

pub fn bundled_suite() -> SuiteContext {
    SuiteContext::load(&bundled_suite_path(), PhysicsConfig::default(), None).expect("bundled suite loads")
}

use crts_core::data::DataSource;
use crts_core::geometry::Vec2;
use crts_core::map::{GateKind, GateSegment, LaneGeometry, RoadMap};
use crts_core::scenario::{
    LaneChangeDirection, LaneChangeGoal, Maneuver, RefSample, ReferenceTrajectory, RoundaboutGoal, Scenario, Split,
};
use crts_core::sim::{EgoState, NavCommand, WorldState};

pub fn straight_reference(length: f64, speed: f64) -> ReferenceTrajectory {
    let n = (length / (speed * 0.1)).round() as usize;
    ReferenceTrajectory::new(
        (0..=n)
            .map(|k| RefSample {
                t: k as f64 * 0.1,
                x: k as f64 * speed * 0.1,
                y: 0.0,
                yaw: 0.0,
                speed,
            })
            .collect(),
    )
    .unwrap()
}

fn scenario(maneuver: Maneuver, deadline: f64, reference: ReferenceTrajectory) -> Scenario {
    Scenario {
        scenario_id: "fixture".into(),
        dataset: DataSource::Canonical,
        recording_id: "rec".into(),
        map_id: "fixture".into(),
        ego_track_id: 1,
        start_time: 0.0,
        deadline,
        maneuver,
        reference,
        split: Split::Validation,
    }
}

/// Two lanes along +x: lane 1 at y = 0 and lane 2 (target, to the left) at y = 3.5.
pub fn lane_change_fixture() -> (Scenario, RoadMap) {
    let lane = |id: i64, y: f64| LaneGeometry::new(id, vec![Vec2::new(-50.0, y), Vec2::new(500.0, y)], 3.5).unwrap();
    let map = RoadMap::new("fixture", vec![lane(1, 0.0), lane(2, 3.5)], vec![]).unwrap();
    let goal = LaneChangeGoal {
        start_lane_id: 1,
        target_lane_id: 2,
        direction: LaneChangeDirection::Left,
    };
    (
        scenario(Maneuver::LaneChange(goal), 10.0, straight_reference(150.0, 10.0)),
        map,
    )
}

/// Straight reference along +x with the target exit gate across it at x = 50
/// and another exit gate at x = 30 beside the path (y from 4 to 8).
pub fn roundabout_fixture() -> (Scenario, RoadMap) {
    let gates = vec![
        GateSegment::new(
            1,
            GateKind::RoundaboutEntry,
            Vec2::new(5.0, -2.0),
            Vec2::new(5.0, 2.0),
            Vec2::new(1.0, 0.0),
        )
        .unwrap(),
        GateSegment::new(
            2,
            GateKind::RoundaboutExit,
            Vec2::new(30.0, 4.0),
            Vec2::new(30.0, 8.0),
            Vec2::new(1.0, 0.0),
        )
        .unwrap(),
        GateSegment::new(
            3,
            GateKind::RoundaboutExit,
            Vec2::new(50.0, -2.0),
            Vec2::new(50.0, 2.0),
            Vec2::new(1.0, 0.0),
        )
        .unwrap(),
    ];
    let lane = LaneGeometry::new(1, vec![Vec2::new(-10.0, 0.0), Vec2::new(200.0, 0.0)], 4.0).unwrap();
    let map = RoadMap::new("fixture", vec![lane], gates).unwrap();
    let goal = RoundaboutGoal {
        entry_gate_id: 1,
        target_exit_gate_id: 3,
        last_prior_exit_arc: 30.0,
    };
    (
        scenario(Maneuver::Roundabout(goal), 12.0, straight_reference(100.0, 10.0)),
        map,
    )
}

pub fn world_at(step_index: i64, x: f64, y: f64, yaw: f64, collision: bool) -> WorldState {
    WorldState {
        step_index,
        sim_time: step_index as f64 * 0.1,
        ego: EgoState::new(x, y, yaw, 5.0, &crts_core::sim::PhysicsConfig::default()),
        agents: vec![],
        collision,
        command: NavCommand::LaneFollow,
    }
}
