//! Baseline policies.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::wrap_angle;
use crate::scenario::Scenario;
use crate::sim::{Action, PhysicsConfig, WorldState};

/// Minimum pure-pursuit lookahead, meters.
pub const MIN_LOOKAHEAD: f64 = 3.0;
/// Lookahead per unit speed, seconds.
pub const LOOKAHEAD_GAIN: f64 = 0.5;

/// Pure pursuit along the reference drive with the recorded speed as set-point.
///
/// The lookahead point lies `L = max(3 m, 0.5·v)` beyond the ego's arc projection.
/// Curvature `κ = 2·sin(α)/L` becomes a wheel angle `atan(κ·wheelbase)`;
/// positive steer turns left. Past the end of the reference the policy holds still.
pub fn policy_replay_follower(scenario: &Scenario, world: &WorldState, physics: &PhysicsConfig) -> Action {
    let reference = &scenario.reference;
    let ego = &world.ego;
    let proj = reference.project(ego.position());
    if proj.s >= reference.length() {
        return Action::new(0.0, 0.0);
    }
    let lookahead = MIN_LOOKAHEAD.max(LOOKAHEAD_GAIN * ego.speed);
    let target = reference.polyline().point_at(proj.s + lookahead);
    let to_target = target - ego.position();
    let alpha = wrap_angle(to_target.angle() - ego.yaw);
    let curvature = 2.0 * alpha.sin() / lookahead;
    let wheel = (curvature * ego.wheelbase).atan();
    let steer = (wheel / physics.max_wheel_angle()).clamp(-1.0, 1.0);
    Action::new(steer, reference.at_arc(proj.s).speed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NamedPolicy {
    ReplayFollower,
    /// Steer 0, target speed 0.
    Idle,
    Constant {
        steer: f64,
        target_speed: f64,
    },
}

impl NamedPolicy {
    pub fn act(&self, scenario: &Scenario, world: &WorldState, physics: &PhysicsConfig) -> Action {
        match *self {
            NamedPolicy::ReplayFollower => policy_replay_follower(scenario, world, physics),
            NamedPolicy::Idle => Action::new(0.0, 0.0),
            NamedPolicy::Constant { steer, target_speed } => Action::new(steer, target_speed),
        }
    }
}

impl fmt::Display for NamedPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedPolicy::ReplayFollower => f.write_str("replay-follower"),
            NamedPolicy::Idle => f.write_str("idle"),
            NamedPolicy::Constant { steer, target_speed } => write!(f, "constant:{steer},{target_speed}"),
        }
    }
}

impl FromStr for NamedPolicy {
    type Err = Error;

    /// `replay-follower`, `idle` or `constant:<steer>,<target_speed>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "replay-follower" | "replay_follower" => return Ok(NamedPolicy::ReplayFollower),
            "idle" => return Ok(NamedPolicy::Idle),
            _ => {}
        }
        let bad = || Error::Argument(format!("unknown policy `{s}`"));
        let args = s.strip_prefix("constant:").ok_or_else(bad)?;
        let (a, b) = args.split_once(',').ok_or_else(bad)?;
        let steer: f64 = a.trim().parse().map_err(|_| bad())?;
        let target_speed: f64 = b.trim().parse().map_err(|_| bad())?;
        Ok(NamedPolicy::Constant { steer, target_speed })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DataSource;
    use crate::scenario::{LaneChangeDirection, LaneChangeGoal, Maneuver, RefSample, ReferenceTrajectory, Split};
    use crate::sim::{EgoState, NavCommand};

    fn straight() -> Scenario {
        Scenario {
            scenario_id: "s".into(),
            dataset: DataSource::Canonical,
            recording_id: "r".into(),
            map_id: "m".into(),
            ego_track_id: 1,
            start_time: 0.0,
            deadline: 10.0,
            maneuver: Maneuver::LaneChange(LaneChangeGoal {
                start_lane_id: 1,
                target_lane_id: 2,
                direction: LaneChangeDirection::Left,
            }),
            reference: ReferenceTrajectory::new(
                (0..=100)
                    .map(|k| RefSample {
                        t: k as f64 / 10.0,
                        x: k as f64,
                        y: 0.0,
                        yaw: 0.0,
                        speed: 10.0,
                    })
                    .collect(),
            )
            .unwrap(),
            split: Split::Train,
        }
    }

    fn world_at(x: f64, y: f64) -> WorldState {
        WorldState {
            step_index: 0,
            sim_time: 0.0,
            ego: EgoState::new(x, y, 0.0, 10.0, &PhysicsConfig::default()),
            agents: vec![],
            collision: false,
            command: NavCommand::LaneFollow,
        }
    }

    #[test]
    fn aligned_pursuit_goes_straight() {
        let a = policy_replay_follower(&straight(), &world_at(10.0, 0.0), &PhysicsConfig::default());
        assert_eq!(a.steer, 0.0);
        assert_eq!(a.target_speed, 10.0);
    }

    #[test]
    fn steers_back_toward_reference() {
        let a = policy_replay_follower(&straight(), &world_at(10.0, 0.5), &PhysicsConfig::default());
        assert!(a.steer < 0.0, "ego left of the path must turn right: {a:?}");
        let b = policy_replay_follower(&straight(), &world_at(10.0, -0.5), &PhysicsConfig::default());
        assert!(b.steer > 0.0);
    }

    #[test]
    fn holds_at_end_of_reference() {
        let a = policy_replay_follower(&straight(), &world_at(105.0, 0.0), &PhysicsConfig::default());
        assert_eq!((a.steer, a.target_speed), (0.0, 0.0));
    }

    #[test]
    fn parses_names() {
        assert_eq!("idle".parse::<NamedPolicy>().unwrap(), NamedPolicy::Idle);
        assert_eq!(
            "constant:0.1,5".parse::<NamedPolicy>().unwrap(),
            NamedPolicy::Constant {
                steer: 0.1,
                target_speed: 5.0
            }
        );
        assert!("constant:x".parse::<NamedPolicy>().is_err());
    }
}
