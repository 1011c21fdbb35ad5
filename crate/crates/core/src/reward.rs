//! Step and terminal rewards for the dense, sparse and no-failure-penalty schemes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{line_crossing_parameter, Polyline};
use crate::map::{gate_crossed, lateral_offset, GateSegment, RoadMap};
use crate::scenario::{Maneuver, Scenario};
use crate::sim::{EpisodeState, TerminationStatus, WorldState};

/// Number of shaping segments.
pub const SEGMENTS: i64 = 10;
/// Reward per segment gained (or lost, for lane changes).
pub const SEGMENT_REWARD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardScheme {
    #[default]
    Dense,
    Sparse,
    NoFailurePenalty,
}

impl RewardScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            RewardScheme::Dense => "dense",
            RewardScheme::Sparse => "sparse",
            RewardScheme::NoFailurePenalty => "no-failure",
        }
    }
}

impl fmt::Display for RewardScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RewardScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(RewardScheme::Dense),
            "sparse" => Ok(RewardScheme::Sparse),
            "no-failure" | "no_failure" | "no_failure_penalty" => Ok(RewardScheme::NoFailurePenalty),
            _ => Err(Error::Argument(format!("unknown reward scheme `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardState {
    /// `d0 == 0` collapses all bins: shaping is always zero.
    LaneChange {
        d0: f64,
        current_bin: i64,
    },
    Roundabout {
        total_length: f64,
        segments_passed: i64,
    },
}

/// One step's reward split into its parts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardOutcome {
    pub reward: f64,
    pub shaping: f64,
    /// Signed number of segments rewarded this step (shaping = 0.1 · bins).
    pub shaping_bins: i64,
    pub terminal: f64,
}

/// `clamp(⌈10·d/d0⌉, 0, 10)`; zero when `d0` is zero.
pub fn lane_change_bin(d: f64, d0: f64) -> i64 {
    if d0 <= 0.0 {
        return 0;
    }
    ((SEGMENTS as f64 * d / d0).ceil() as i64).clamp(0, SEGMENTS)
}

/// `min(10, ⌊10·s/S⌋)`.
pub fn roundabout_segment(s: f64, total_length: f64) -> i64 {
    ((SEGMENTS as f64 * s / total_length).floor() as i64).clamp(0, SEGMENTS)
}

/// Arc length along `path` where it first crosses `gate` in the gate direction.
pub fn gate_crossing_arc(path: &Polyline, gate: &GateSegment) -> Option<f64> {
    let pts = path.points();
    let cum = path.cumulative();
    (0..pts.len() - 1).find_map(|i| {
        gate_crossed(pts[i], pts[i + 1], gate).then(|| {
            let u = line_crossing_parameter(pts[i], pts[i + 1], gate.endpoints[0], gate.endpoints[1])
                .unwrap_or(0.0)
                .clamp(0.0, 1.0);
            cum[i] + u * (cum[i + 1] - cum[i])
        })
    })
}

fn lane_distance(map: &RoadMap, world: &WorldState, target: i64) -> f64 {
    map.lane(target)
        .map_or(0.0, |lane| lateral_offset(world.ego.position(), lane).abs())
}

/// Lane change: `d0` is the initial distance to the target centerline, bin 10.
/// Roundabout: `S` is the reference arc length up to the target exit crossing
/// (the whole reference if it never crosses), no segment passed.
pub fn init_reward_state(scenario: &Scenario, world: &WorldState, map: &RoadMap) -> RewardState {
    match &scenario.maneuver {
        Maneuver::LaneChange(goal) => {
            let d0 = lane_distance(map, world, goal.target_lane_id);
            RewardState::LaneChange {
                d0,
                current_bin: if d0 > 0.0 { SEGMENTS } else { 0 },
            }
        }
        Maneuver::Roundabout(goal) => {
            let path = scenario.reference.polyline();
            let total_length = map
                .gate(goal.target_exit_gate_id)
                .and_then(|g| gate_crossing_arc(path, g))
                .filter(|s| *s > 0.0)
                .unwrap_or(path.length());
            RewardState::Roundabout {
                total_length,
                segments_passed: 0,
            }
        }
    }
}

/// Reward for the step that produced `world` with status `termination`.
pub fn step_reward(
    state: &RewardState,
    scheme: RewardScheme,
    scenario: &Scenario,
    map: &RoadMap,
    world: &WorldState,
    termination: TerminationStatus,
) -> (RewardOutcome, RewardState) {
    let (bins, next) = match (*state, &scenario.maneuver) {
        (RewardState::LaneChange { d0, current_bin }, Maneuver::LaneChange(goal)) => {
            let bin = if d0 > 0.0 {
                lane_change_bin(lane_distance(map, world, goal.target_lane_id), d0)
            } else {
                current_bin
            };
            (current_bin - bin, RewardState::LaneChange { d0, current_bin: bin })
        }
        (
            RewardState::Roundabout {
                total_length,
                segments_passed,
            },
            Maneuver::Roundabout(_),
        ) => {
            let s = scenario.reference.project(world.ego.position()).s;
            let k = roundabout_segment(s, total_length);
            let passed = segments_passed.max(k);
            (
                passed - segments_passed,
                RewardState::Roundabout {
                    total_length,
                    segments_passed: passed,
                },
            )
        }
        _ => (0, *state),
    };
    let shaping_bins = if scheme == RewardScheme::Sparse { 0 } else { bins };
    let shaping = SEGMENT_REWARD * shaping_bins as f64;
    let terminal = match (termination.state, scheme) {
        (EpisodeState::Success, _) => 1.0,
        (EpisodeState::Failure, RewardScheme::NoFailurePenalty) => 0.0,
        (EpisodeState::Failure, _) => -1.0,
        (EpisodeState::Running, _) => 0.0,
    };
    (
        RewardOutcome {
            reward: shaping + terminal,
            shaping,
            shaping_bins,
            terminal,
        },
        next,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bin_arithmetic() {
        assert_eq!(lane_change_bin(3.5, 3.5), 10);
        assert_eq!(lane_change_bin(0.0, 3.5), 0);
        assert_eq!(lane_change_bin(0.34, 3.5), 1);
        assert_eq!(lane_change_bin(0.36, 3.5), 2);
        assert_eq!(lane_change_bin(9.0, 3.5), 10);
        assert_eq!(lane_change_bin(1.0, 0.0), 0);
    }

    #[test]
    fn segment_arithmetic() {
        assert_eq!(roundabout_segment(7.9, 80.0), 0);
        assert_eq!(roundabout_segment(8.0, 80.0), 1);
        assert_eq!(roundabout_segment(80.0, 80.0), 10);
        assert_eq!(roundabout_segment(95.0, 80.0), 10);
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!(
            "no-failure".parse::<RewardScheme>().unwrap(),
            RewardScheme::NoFailurePenalty
        );
        assert!("bogus".parse::<RewardScheme>().is_err());
    }
}
