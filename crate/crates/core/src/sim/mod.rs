//! The closed-loop world: ego kinematics, replayed traffic, collisions,
//! navigation commands and termination.

use serde::{Deserialize, Serialize};

use crate::geometry::{OrientedRect, Vec2};

pub mod catalog;
pub mod replay;
pub mod termination;
pub mod vehicle;

pub use catalog::{default_catalog, match_vehicle_model, read_catalog, VehicleModel};
pub use replay::{replay_agents, AgentReplayer};
pub use termination::{
    current_command, evaluate_termination, CommandTracker, EpisodeState, FailureReason, NavCommand, TerminationStatus,
    DEVIATION_LIMIT, DWELL_STEPS, LANE_OFFSET_LIMIT, YAW_LIMIT_DEG,
};
pub use vehicle::{ego_step, Action, EgoState, PhysicsConfig, PidMemory};

/// Control and replay period, seconds.
pub const SIM_DT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentPose {
    pub track_id: i64,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub length: f64,
    pub width: f64,
    pub catalog_model: String,
}

impl AgentPose {
    pub fn footprint(&self) -> OrientedRect {
        OrientedRect::new(Vec2::new(self.x, self.y), self.yaw, self.length, self.width)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub step_index: i64,
    pub sim_time: f64,
    pub ego: EgoState,
    pub agents: Vec<AgentPose>,
    pub collision: bool,
    pub command: NavCommand,
}

/// Closed separating-axis test of the ego footprint against every agent.
pub fn check_collision(ego: &EgoState, agents: &[AgentPose]) -> bool {
    let fp = ego.footprint();
    agents.iter().any(|a| fp.overlaps(&a.footprint()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agent(x: f64, y: f64, yaw: f64, length: f64, width: f64) -> AgentPose {
        AgentPose {
            track_id: 1,
            x,
            y,
            yaw,
            length,
            width,
            catalog_model: "m".into(),
        }
    }

    fn ego(length: f64, width: f64) -> EgoState {
        let mut e = EgoState::new(0.0, 0.0, 0.0, 0.0, &PhysicsConfig::default());
        e.length = length;
        e.width = width;
        e
    }

    #[test]
    fn collision_examples() {
        let e = ego(4.0, 2.0);
        assert!(!check_collision(&e, &[agent(100.0, 0.0, 0.0, 4.0, 2.0)]));
        assert!(check_collision(&e, &[agent(0.0, 0.0, 0.0, 4.0, 2.0)]));
        assert!(!check_collision(&e, &[agent(0.0, 2.1, 0.0, 4.0, 2.0)]));
        assert!(check_collision(&e, &[agent(0.0, 1.9, 0.0, 4.0, 2.0)]));
        assert!(check_collision(&e, &[agent(0.0, 2.0, 0.0, 4.0, 2.0)]));
        assert!(!check_collision(&e, &[]));
    }
}
