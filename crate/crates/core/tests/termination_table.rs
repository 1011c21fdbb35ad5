mod common;

use common::{lane_change_fixture, roundabout_fixture, world_at};
use crts_core::sim::{evaluate_termination, EpisodeState, FailureReason, TerminationStatus};

fn dwell(first_step: i64, n: usize, y: f64, yaw_deg: f64) -> Vec<crts_core::sim::WorldState> {
    (0..n as i64)
        .map(|i| world_at(first_step + i, 10.0 + i as f64, y, yaw_deg.to_radians(), false))
        .collect()
}

#[test]
fn lane_change_table() {
    let (sc, map) = lane_change_fixture();
    let failure = TerminationStatus::failure;
    let cases: Vec<(&str, Vec<crts_core::sim::WorldState>, TerminationStatus)> = vec![
        (
            "inside both limits for 10 steps",
            dwell(20, 10, 3.5 + 0.29, 9.9),
            TerminationStatus::SUCCESS,
        ),
        (
            "inside limits, right of centerline",
            dwell(20, 10, 3.5 - 0.29, -9.9),
            TerminationStatus::SUCCESS,
        ),
        (
            "only 9 steps",
            dwell(20, 9, 3.5 + 0.29, 0.0),
            TerminationStatus::RUNNING,
        ),
        (
            "offset 0.31",
            dwell(20, 10, 3.5 + 0.31, 0.0),
            TerminationStatus::RUNNING,
        ),
        ("yaw 10.1 degrees", dwell(20, 10, 3.5, 10.1), TerminationStatus::RUNNING),
        (
            "still in start lane",
            dwell(20, 10, 0.0, 0.0),
            TerminationStatus::RUNNING,
        ),
        (
            "right of both lanes",
            dwell(20, 1, -1.76, 0.0),
            failure(FailureReason::LeftBothLanes),
        ),
        (
            "left of both lanes",
            dwell(20, 1, 5.26, 0.0),
            failure(FailureReason::LeftBothLanes),
        ),
        (
            "on the outer boundary",
            dwell(20, 1, 5.25, 0.0),
            TerminationStatus::RUNNING,
        ),
        (
            "one step before deadline",
            dwell(99, 1, 0.0, 0.0),
            TerminationStatus::RUNNING,
        ),
        (
            "at the deadline",
            dwell(100, 1, 0.0, 0.0),
            failure(FailureReason::Timeout),
        ),
        (
            "success on the deadline tick",
            dwell(91, 10, 3.5, 0.0),
            TerminationStatus::SUCCESS,
        ),
    ];
    for (name, history, expected) in cases {
        assert_eq!(evaluate_termination(&sc, &history, &map), expected, "{name}");
    }
}

#[test]
fn collision_takes_precedence() {
    let (sc, map) = lane_change_fixture();
    let mut on_deadline = dwell(100, 1, 0.0, 0.0);
    on_deadline[0].collision = true;
    assert_eq!(
        evaluate_termination(&sc, &on_deadline, &map),
        TerminationStatus::failure(FailureReason::Collision)
    );
    let mut aligned = dwell(20, 10, 3.5, 0.0);
    aligned[9].collision = true;
    assert_eq!(
        evaluate_termination(&sc, &aligned, &map).failure_reason,
        Some(FailureReason::Collision)
    );
}

#[test]
fn roundabout_table() {
    let (sc, map) = roundabout_fixture();
    let pair = |step: i64, from: (f64, f64), to: (f64, f64)| {
        vec![
            world_at(step - 1, from.0, from.1, 0.0, false),
            world_at(step, to.0, to.1, 0.0, false),
        ]
    };
    let failure = TerminationStatus::failure;
    let cases = vec![
        (
            "on the path",
            pair(10, (20.0, 0.0), (21.0, 0.0)),
            TerminationStatus::RUNNING,
        ),
        (
            "deviation 2.99",
            pair(10, (20.0, 0.0), (21.0, 2.99)),
            TerminationStatus::RUNNING,
        ),
        (
            "deviation 3.00",
            pair(10, (20.0, 0.0), (21.0, 3.0)),
            TerminationStatus::RUNNING,
        ),
        (
            "deviation 3.01",
            pair(10, (20.0, 0.0), (21.0, 3.01)),
            failure(FailureReason::DeviationExceeded),
        ),
        (
            "target exit crossed",
            pair(10, (49.5, 0.0), (50.5, 0.0)),
            TerminationStatus::SUCCESS,
        ),
        (
            "target exit crossed backwards",
            pair(10, (50.5, 0.0), (49.5, 0.0)),
            TerminationStatus::RUNNING,
        ),
        (
            "other exit crossed",
            pair(10, (29.5, 5.0), (30.5, 5.0)),
            failure(FailureReason::WrongExit),
        ),
        (
            "at the deadline",
            pair(120, (20.0, 0.0), (21.0, 0.0)),
            failure(FailureReason::Timeout),
        ),
        (
            "exit on the deadline tick",
            pair(120, (49.5, 0.0), (50.5, 0.0)),
            TerminationStatus::SUCCESS,
        ),
        (
            "deviation beats timeout",
            pair(120, (20.0, 0.0), (21.0, 3.5)),
            failure(FailureReason::DeviationExceeded),
        ),
    ];
    for (name, history, expected) in cases {
        assert_eq!(evaluate_termination(&sc, &history, &map), expected, "{name}");
    }
}

#[test]
fn statuses_report_done() {
    assert!(!TerminationStatus::RUNNING.is_done());
    assert!(TerminationStatus::SUCCESS.is_done());
    let f = TerminationStatus::failure(FailureReason::Timeout);
    assert_eq!(f.state, EpisodeState::Failure);
    assert!(f.is_done());
}
