//! Trajectory datasets: ingestion of tabular recordings into canonical 10 Hz tracks.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod canonical;
pub mod preprocess;
pub mod tabular;

pub use canonical::{parse_canonical, read_canonical, to_canonical_string, write_canonical, CANONICAL_VERSION};
pub use preprocess::{
    derive_yaw, remap_reference_point, resample_to_grid, smooth_positions, validate_track, TrackReport,
};
pub use tabular::{ingest, parse_tabular_tracks, ColumnMapping, IngestOptions, LengthUnit, ReferencePoint, TimeUnit};

/// Canonical sample spacing in seconds.
pub const GRID_DT: f64 = 0.1;
/// Canonical sample rate in Hz.
pub const GRID_RATE: f64 = 10.0;

/// Index of the 0.1 s grid tick nearest to `t`.
pub fn grid_tick(t: f64) -> i64 {
    (t * GRID_RATE).round() as i64
}

/// Time of grid tick `k`.
pub fn tick_time(k: i64) -> f64 {
    k as f64 / GRID_RATE
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub speed: f64,
    pub lane_id: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleClass {
    Car,
    Truck,
    Motorcycle,
    Other,
}

impl VehicleClass {
    pub fn as_str(self) -> &'static str {
        match self {
            VehicleClass::Car => "car",
            VehicleClass::Truck => "truck",
            VehicleClass::Motorcycle => "motorcycle",
            VehicleClass::Other => "other",
        }
    }

    /// Lenient mapping used for dataset class columns (names or NGSIM numeric codes).
    pub fn from_label(label: &str) -> VehicleClass {
        match label.trim().to_ascii_lowercase().as_str() {
            "car" | "auto" | "2" | "van" => VehicleClass::Car,
            "truck" | "bus" | "3" | "heavy_vehicle" | "trailer" => VehicleClass::Truck,
            "motorcycle" | "motorbike" | "1" => VehicleClass::Motorcycle,
            _ => VehicleClass::Other,
        }
    }
}

impl fmt::Display for VehicleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VehicleClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "car" => Ok(VehicleClass::Car),
            "truck" => Ok(VehicleClass::Truck),
            "motorcycle" => Ok(VehicleClass::Motorcycle),
            "other" => Ok(VehicleClass::Other),
            _ => Err(Error::Argument(format!("unknown vehicle class `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleTrack {
    pub id: i64,
    pub class: VehicleClass,
    pub length: f64,
    pub width: f64,
    pub samples: Vec<TrackSample>,
}

impl VehicleTrack {
    pub fn start_time(&self) -> f64 {
        self.samples.first().map_or(0.0, |s| s.t)
    }

    pub fn end_time(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    /// Sample whose time lies on grid tick `tick`, assuming the track is on the canonical grid.
    pub fn sample_at_tick(&self, tick: i64) -> Option<&TrackSample> {
        let first = grid_tick(self.samples.first()?.t);
        let idx = tick - first;
        if idx < 0 {
            return None;
        }
        let s = self.samples.get(idx as usize)?;
        (grid_tick(s.t) == tick).then_some(s)
    }

    /// Checks the structural invariants of a track.
    pub fn check(&self) -> Result<()> {
        if !(self.length > 0.0 && self.width > 0.0) {
            return Err(Error::Data {
                vehicle: self.id,
                message: format!("non-positive dimensions {} x {}", self.length, self.width),
            });
        }
        if self.samples.len() < 2 {
            return Err(Error::TooShort {
                track: self.id,
                message: format!("{} sample(s), need at least 2", self.samples.len()),
            });
        }
        for w in self.samples.windows(2) {
            if w[1].t <= w[0].t {
                return Err(Error::Data {
                    vehicle: self.id,
                    message: format!("timestamps not strictly increasing ({} then {})", w[0].t, w[1].t),
                });
            }
        }
        Ok(())
    }

    /// True when every consecutive spacing is 0.1 s within 1e-9.
    pub fn is_on_grid(&self) -> bool {
        self.samples
            .iter()
            .all(|s| (s.t - tick_time(grid_tick(s.t))).abs() <= 1e-9)
            && self
                .samples
                .windows(2)
                .all(|w| grid_tick(w[1].t) - grid_tick(w[0].t) == 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Ngsim,
    Opendd,
    Canonical,
}

impl DataSource {
    pub fn as_str(self) -> &'static str {
        match self {
            DataSource::Ngsim => "ngsim",
            DataSource::Opendd => "opendd",
            DataSource::Canonical => "canonical",
        }
    }
}

impl fmt::Display for DataSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DataSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ngsim" => Ok(DataSource::Ngsim),
            "opendd" => Ok(DataSource::Opendd),
            "canonical" => Ok(DataSource::Canonical),
            _ => Err(Error::Argument(format!("unknown data source `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDataset {
    pub source: DataSource,
    pub recording_id: String,
    pub map_id: String,
    pub tracks: BTreeMap<i64, VehicleTrack>,
}

impl TrajectoryDataset {
    pub fn new(source: DataSource, recording_id: impl Into<String>, map_id: impl Into<String>) -> Self {
        TrajectoryDataset {
            source,
            recording_id: recording_id.into(),
            map_id: map_id.into(),
            tracks: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, track: VehicleTrack) {
        self.tracks.insert(track.id, track);
    }

    pub fn track(&self, id: i64) -> Option<&VehicleTrack> {
        self.tracks.get(&id)
    }

    pub fn sample_count(&self) -> usize {
        self.tracks.values().map(|t| t.samples.len()).sum()
    }
}
