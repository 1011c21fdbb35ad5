//! Scenarios mined from recordings: maneuver goals, reference drives and splits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{DataSource, TrackSample};
use crate::error::{Error, Result};
use crate::geometry::{Polyline, Projection, Vec2};

pub mod extract;
pub mod split;
pub mod suite;

pub use extract::{
    extract_lane_changes, extract_roundabout_crossings, Extraction, ExtractionReport, LANE_CHANGE_HISTORY,
    LANE_CHANGE_TIMEOUT, ROUNDABOUT_APPROACH, ROUNDABOUT_TIMEOUT_FACTOR,
};
pub use split::{assign_split, assign_split_by_recording, train_count, ScenarioSet, SplitMode};
pub use suite::{read_suite, write_suite, SuiteFile, SUITE_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" | "val" | "test" => Ok(Split::Validation),
            _ => Err(Error::Argument(format!("unknown split `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaneChangeDirection {
    Left,
    Right,
}

impl LaneChangeDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            LaneChangeDirection::Left => "left",
            LaneChangeDirection::Right => "right",
        }
    }
}

impl FromStr for LaneChangeDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(LaneChangeDirection::Left),
            "right" => Ok(LaneChangeDirection::Right),
            _ => Err(Error::Argument(format!("unknown direction `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneChangeGoal {
    pub start_lane_id: i64,
    pub target_lane_id: i64,
    pub direction: LaneChangeDirection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundaboutGoal {
    pub entry_gate_id: i64,
    pub target_exit_gate_id: i64,
    /// Arc position on the reference drive after which the exit command is issued.
    pub last_prior_exit_arc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Maneuver {
    LaneChange(LaneChangeGoal),
    Roundabout(RoundaboutGoal),
}

impl Maneuver {
    pub fn kind(&self) -> &'static str {
        match self {
            Maneuver::LaneChange(_) => "lane_change",
            Maneuver::Roundabout(_) => "roundabout",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub speed: f64,
}

impl RefSample {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

impl From<&TrackSample> for RefSample {
    fn from(s: &TrackSample) -> Self {
        RefSample {
            t: s.t,
            x: s.x,
            y: s.y,
            yaw: s.yaw,
            speed: s.speed,
        }
    }
}

/// The recorded drive of the vehicle the ego replaces, with a cached polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    samples: Vec<RefSample>,
    polyline: Polyline,
}

impl ReferenceTrajectory {
    pub fn new(samples: Vec<RefSample>) -> Result<Self> {
        let polyline = Polyline::new(samples.iter().map(RefSample::position).collect())
            .ok_or_else(|| Error::Argument("reference trajectory needs at least 2 finite samples".into()))?;
        Ok(ReferenceTrajectory { samples, polyline })
    }

    pub fn samples(&self) -> &[RefSample] {
        &self.samples
    }

    pub fn polyline(&self) -> &Polyline {
        &self.polyline
    }

    pub fn length(&self) -> f64 {
        self.polyline.length()
    }

    pub fn first(&self) -> &RefSample {
        &self.samples[0]
    }

    pub fn project(&self, p: Vec2) -> Projection {
        self.polyline.project(p)
    }

    /// Sample fields interpolated at arc length `s` (clamped to the ends).
    pub fn at_arc(&self, s: f64) -> RefSample {
        let (i, u) = self.polyline.locate(s);
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        RefSample {
            t: a.t + (b.t - a.t) * u,
            x: a.x + (b.x - a.x) * u,
            y: a.y + (b.y - a.y) * u,
            yaw: a.yaw + crate::geometry::wrap_angle(b.yaw - a.yaw) * u,
            speed: a.speed + (b.speed - a.speed) * u,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub scenario_id: String,
    pub dataset: DataSource,
    pub recording_id: String,
    pub map_id: String,
    pub ego_track_id: i64,
    pub start_time: f64,
    pub deadline: f64,
    pub maneuver: Maneuver,
    pub reference: ReferenceTrajectory,
    pub split: Split,
}

impl Scenario {
    /// Number of 0.1 s ticks until the deadline is reached.
    pub fn deadline_steps(&self) -> i64 {
        ((self.deadline - self.start_time) * crate::data::GRID_RATE - 1e-6).ceil() as i64
    }

    pub fn lane_change(&self) -> Option<&LaneChangeGoal> {
        match &self.maneuver {
            Maneuver::LaneChange(g) => Some(g),
            _ => None,
        }
    }

    pub fn roundabout(&self) -> Option<&RoundaboutGoal> {
        match &self.maneuver {
            Maneuver::Roundabout(g) => Some(g),
            _ => None,
        }
    }
}

/// Stable content hash used as scenario id.
pub fn scenario_id(recording_id: &str, ego: i64, event_tick: i64, kind: &str) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(format!("{recording_id}/{ego}/{event_tick}/{kind}").as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_id_is_stable() {
        let a = scenario_id("rec", 12, 120, "lane_change");
        assert_eq!(a, scenario_id("rec", 12, 120, "lane_change"));
        assert_ne!(a, scenario_id("rec", 12, 121, "lane_change"));
        assert_eq!(a.len(), 16);
    }

    #[test]
    fn reference_interpolates_by_arc() {
        let r = ReferenceTrajectory::new(vec![
            RefSample {
                t: 0.0,
                x: 0.0,
                y: 0.0,
                yaw: 0.0,
                speed: 10.0,
            },
            RefSample {
                t: 0.1,
                x: 1.0,
                y: 0.0,
                yaw: 0.0,
                speed: 12.0,
            },
        ])
        .unwrap();
        let m = r.at_arc(0.5);
        assert!((m.t - 0.05).abs() < 1e-12);
        assert!((m.speed - 11.0).abs() < 1e-12);
        assert_eq!(r.at_arc(5.0).speed, 12.0);
    }
}
