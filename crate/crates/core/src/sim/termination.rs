//! Navigation commands and episode termination.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{EgoState, WorldState};
use crate::geometry::wrap_angle;
use crate::map::{gate_crossed, lane_heading_at, lateral_offset, point_in_lane, GateKind, RoadMap};
use crate::scenario::{LaneChangeDirection, Maneuver, Scenario};

/// Lane-change success: lateral distance to the target centerline must stay below this.
pub const LANE_OFFSET_LIMIT: f64 = 0.30;
/// Lane-change success: heading error relative to the target lane, degrees.
pub const YAW_LIMIT_DEG: f64 = 10.0;
/// Consecutive 0.1 s steps the lane-change success geometry must hold.
pub const DWELL_STEPS: usize = 10;
/// Roundabout failure: distance from the reference drive, meters.
pub const DEVIATION_LIMIT: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NavCommand {
    LaneFollow,
    LaneChangeLeft,
    LaneChangeRight,
    TurnLeft,
    TurnRight,
    GoStraight,
}

impl NavCommand {
    pub fn as_str(self) -> &'static str {
        match self {
            NavCommand::LaneFollow => "LANE_FOLLOW",
            NavCommand::LaneChangeLeft => "LANE_CHANGE_LEFT",
            NavCommand::LaneChangeRight => "LANE_CHANGE_RIGHT",
            NavCommand::TurnLeft => "TURN_LEFT",
            NavCommand::TurnRight => "TURN_RIGHT",
            NavCommand::GoStraight => "GO_STRAIGHT",
        }
    }
}

impl fmt::Display for NavCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Unlatched command for the current ego pose.
pub fn current_command(scenario: &Scenario, ego: &EgoState, map: &RoadMap) -> NavCommand {
    match &scenario.maneuver {
        Maneuver::LaneChange(goal) => {
            let on_start = map
                .lane(goal.start_lane_id)
                .is_some_and(|lane| point_in_lane(ego.position(), lane));
            match (on_start, goal.direction) {
                (true, LaneChangeDirection::Left) => NavCommand::LaneChangeLeft,
                (true, LaneChangeDirection::Right) => NavCommand::LaneChangeRight,
                (false, _) => NavCommand::LaneFollow,
            }
        }
        Maneuver::Roundabout(goal) => {
            if scenario.reference.project(ego.position()).s > goal.last_prior_exit_arc {
                NavCommand::TurnRight
            } else {
                NavCommand::LaneFollow
            }
        }
    }
}

/// Latches TURN_RIGHT once issued in a roundabout episode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CommandTracker {
    turned: bool,
}

impl CommandTracker {
    pub fn update(&mut self, scenario: &Scenario, ego: &EgoState, map: &RoadMap) -> NavCommand {
        if self.turned {
            return NavCommand::TurnRight;
        }
        let cmd = current_command(scenario, ego, map);
        self.turned = cmd == NavCommand::TurnRight;
        cmd
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeState {
    Running,
    Success,
    Failure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    Collision,
    LeftBothLanes,
    DeviationExceeded,
    WrongExit,
    Timeout,
}

impl FailureReason {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureReason::Collision => "collision",
            FailureReason::LeftBothLanes => "left_both_lanes",
            FailureReason::DeviationExceeded => "deviation_exceeded",
            FailureReason::WrongExit => "wrong_exit",
            FailureReason::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminationStatus {
    pub state: EpisodeState,
    pub failure_reason: Option<FailureReason>,
}

impl TerminationStatus {
    pub const RUNNING: TerminationStatus = TerminationStatus {
        state: EpisodeState::Running,
        failure_reason: None,
    };
    pub const SUCCESS: TerminationStatus = TerminationStatus {
        state: EpisodeState::Success,
        failure_reason: None,
    };

    pub fn failure(reason: FailureReason) -> Self {
        TerminationStatus {
            state: EpisodeState::Failure,
            failure_reason: Some(reason),
        }
    }

    pub fn is_done(&self) -> bool {
        self.state != EpisodeState::Running
    }
}

fn lane_change_aligned(ego: &EgoState, map: &RoadMap, target_lane: i64) -> bool {
    let Some(lane) = map.lane(target_lane) else {
        return false;
    };
    let p = ego.position();
    lateral_offset(p, lane).abs() < LANE_OFFSET_LIMIT
        && wrap_angle(ego.yaw - lane_heading_at(p, lane)).abs() < YAW_LIMIT_DEG.to_radians()
}

/// Status after the newest state in `history` (oldest first).
///
/// Precedence: collision, then success, then the remaining failures, then timeout.
pub fn evaluate_termination(scenario: &Scenario, history: &[WorldState], map: &RoadMap) -> TerminationStatus {
    let Some(now) = history.last() else {
        return TerminationStatus::RUNNING;
    };
    if now.collision {
        return TerminationStatus::failure(FailureReason::Collision);
    }
    let timed_out = now.step_index >= scenario.deadline_steps();
    let pos = now.ego.position();

    match &scenario.maneuver {
        Maneuver::LaneChange(goal) => {
            if history.len() >= DWELL_STEPS
                && history[history.len() - DWELL_STEPS..]
                    .iter()
                    .all(|w| lane_change_aligned(&w.ego, map, goal.target_lane_id))
            {
                return TerminationStatus::SUCCESS;
            }
            let in_lane = |id| map.lane(id).is_some_and(|l| point_in_lane(pos, l));
            if !in_lane(goal.start_lane_id) && !in_lane(goal.target_lane_id) {
                return TerminationStatus::failure(FailureReason::LeftBothLanes);
            }
        }
        Maneuver::Roundabout(goal) => {
            if let Some(prev) = history.len().checked_sub(2).map(|i| &history[i]) {
                let from = prev.ego.position();
                let mut wrong = false;
                for gate in map.gates_of(GateKind::RoundaboutExit) {
                    if gate_crossed(from, pos, gate) {
                        if gate.gate_id == goal.target_exit_gate_id {
                            return TerminationStatus::SUCCESS;
                        }
                        wrong = true;
                    }
                }
                if wrong {
                    return TerminationStatus::failure(FailureReason::WrongExit);
                }
            }
            if scenario.reference.project(pos).distance > DEVIATION_LIMIT {
                return TerminationStatus::failure(FailureReason::DeviationExceeded);
            }
        }
    }
    if timed_out {
        return TerminationStatus::failure(FailureReason::Timeout);
    }
    TerminationStatus::RUNNING
}
