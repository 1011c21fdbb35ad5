//! Closed-loop driving scenarios replayed from bird's-eye trajectory recordings.
//!
//! The crate turns tabular recordings into canonical 10 Hz tracks, mines
//! lane-change and roundabout scenarios from them, simulates a kinematic ego
//! vehicle among replayed traffic, scores the maneuver and renders
//! bird's-eye observations. Episodes are driven in-process or over TCP.

pub mod bev;
pub mod data;
pub mod env;
pub mod error;
pub mod geometry;
pub mod map;
pub mod reward;
pub mod scenario;
pub mod sim;
pub mod synthetic;

pub use error::{Error, Result};
