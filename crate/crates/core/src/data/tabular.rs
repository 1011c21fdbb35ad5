//! Delimiter-separated trajectory tables driven by an explicit column mapping.

use std::collections::BTreeMap;
use std::path::Path;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::preprocess::{derive_yaw, remap_reference_point, resample_to_grid, smooth_positions};
use super::{DataSource, TrackSample, TrajectoryDataset, VehicleClass, VehicleTrack, GRID_RATE};
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Vec2};

pub const FEET_TO_METERS: f64 = 0.3048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthUnit {
    Feet,
    Meters,
}

impl LengthUnit {
    pub fn to_meters(self) -> f64 {
        match self {
            LengthUnit::Feet => FEET_TO_METERS,
            LengthUnit::Meters => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    Seconds,
    Milliseconds,
    /// Frame counter at the mapping's source rate.
    Frames,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferencePoint {
    FrontBumper,
    Center,
    RearAxle,
}

impl ReferencePoint {
    /// Signed longitudinal position of this reference point relative to the vehicle center.
    pub fn offset_from_center(self, length: f64, rear_axle_fraction: f64) -> f64 {
        match self {
            ReferencePoint::FrontBumper => length / 2.0,
            ReferencePoint::Center => 0.0,
            ReferencePoint::RearAxle => -rear_axle_fraction * length / 2.0,
        }
    }
}

fn default_delimiter() -> char {
    ','
}

/// Maps dataset columns onto track fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub source: DataSource,
    pub vehicle_id: String,
    pub time: String,
    pub x: String,
    pub y: String,
    pub length: String,
    pub width: String,
    #[serde(default)]
    pub heading: Option<String>,
    #[serde(default)]
    pub speed: Option<String>,
    #[serde(default)]
    pub lane_id: Option<String>,
    #[serde(default)]
    pub class: Option<String>,
    pub unit: LengthUnit,
    /// Source sample rate in Hz.
    pub rate: f64,
    pub time_unit: TimeUnit,
    pub reference: ReferencePoint,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    /// Negate y (and heading) to turn a left-handed source frame into the map frame.
    #[serde(default)]
    pub flip_y: bool,
}

impl ColumnMapping {
    /// NGSIM US-101 / I-80 trajectory tables.
    pub fn ngsim() -> Self {
        ColumnMapping {
            source: DataSource::Ngsim,
            vehicle_id: "Vehicle_ID".into(),
            time: "Frame_ID".into(),
            // Local_Y runs along the road, Local_X across it (increasing to the right).
            x: "Local_Y".into(),
            y: "Local_X".into(),
            length: "v_Length".into(),
            width: "v_Width".into(),
            heading: None,
            speed: Some("v_Vel".into()),
            lane_id: Some("Lane_ID".into()),
            class: Some("v_Class".into()),
            unit: LengthUnit::Feet,
            rate: 10.0,
            time_unit: TimeUnit::Frames,
            reference: ReferencePoint::FrontBumper,
            delimiter: ',',
            flip_y: true,
        }
    }

    /// openDD roundabout trajectory tables.
    pub fn opendd() -> Self {
        ColumnMapping {
            source: DataSource::Opendd,
            vehicle_id: "OBJID".into(),
            time: "TIMESTAMP".into(),
            x: "UTM_X".into(),
            y: "UTM_Y".into(),
            length: "LENGTH".into(),
            width: "WIDTH".into(),
            heading: Some("UTM_ANGLE".into()),
            speed: Some("V".into()),
            lane_id: None,
            class: Some("CLASS".into()),
            unit: LengthUnit::Meters,
            rate: 30.0,
            time_unit: TimeUnit::Seconds,
            reference: ReferencePoint::Center,
            delimiter: ',',
            flip_y: false,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "ngsim" => Some(Self::ngsim()),
            "opendd" => Some(Self::opendd()),
            _ => None,
        }
    }

    /// Loads a preset by name or a TOML mapping file.
    pub fn load(spec: &str) -> Result<Self> {
        if let Some(m) = Self::preset(spec) {
            return Ok(m);
        }
        let text = std::fs::read_to_string(spec).map_err(|e| Error::io(spec, e))?;
        let mapping: ColumnMapping = toml::from_str(&text).map_err(|e| Error::Config(format!("{spec}: {e}")))?;
        mapping.check()?;
        Ok(mapping)
    }

    pub fn check(&self) -> Result<()> {
        if ![10.0, 25.0, 30.0].contains(&self.rate) {
            return Err(Error::Config(format!(
                "source rate {} Hz not supported (10, 25 or 30)",
                self.rate
            )));
        }
        for (field, col) in [
            ("vehicle_id", &self.vehicle_id),
            ("time", &self.time),
            ("x", &self.x),
            ("y", &self.y),
            ("length", &self.length),
            ("width", &self.width),
        ] {
            if col.trim().is_empty() {
                return Err(Error::Config(format!("mandatory field `{field}` is not mapped")));
            }
        }
        Ok(())
    }

    fn time_divisor(&self) -> f64 {
        match self.time_unit {
            TimeUnit::Seconds => 1.0,
            TimeUnit::Milliseconds => 1000.0,
            TimeUnit::Frames => self.rate,
        }
    }
}

struct Columns {
    id: usize,
    time: usize,
    x: usize,
    y: usize,
    length: usize,
    width: usize,
    heading: Option<usize>,
    speed: Option<usize>,
    lane: Option<usize>,
    class: Option<usize>,
}

impl Columns {
    fn resolve(headers: &csv::StringRecord, mapping: &ColumnMapping) -> Result<Self> {
        let find = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Schema {
                    column: name.to_string(),
                })
        };
        let opt = |name: &Option<String>| name.as_deref().map(find).transpose();
        Ok(Columns {
            id: find(&mapping.vehicle_id)?,
            time: find(&mapping.time)?,
            x: find(&mapping.x)?,
            y: find(&mapping.y)?,
            length: find(&mapping.length)?,
            width: find(&mapping.width)?,
            heading: opt(&mapping.heading)?,
            speed: opt(&mapping.speed)?,
            lane: opt(&mapping.lane_id)?,
            class: opt(&mapping.class)?,
        })
    }
}

struct RawRow {
    time: f64,
    x: f64,
    y: f64,
    heading: Option<f64>,
    speed: Option<f64>,
    lane: Option<i64>,
    length: f64,
    width: f64,
    class: VehicleClass,
}

fn field_f64(record: &csv::StringRecord, idx: usize, line: usize, name: &str) -> Result<f64> {
    let raw = record
        .get(idx)
        .ok_or_else(|| Error::parse(line, format!("missing value for `{name}`")))?;
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("`{name}` is not a number: `{raw}`")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("`{name}` is not finite")));
    }
    Ok(v)
}

/// Parses a tabular trajectory file into unit-normalized (but not yet resampled) tracks.
///
/// Times are shifted so the earliest row of the file is at t = 0. Rows of one
/// vehicle must appear with strictly increasing timestamps.
pub fn parse_tabular_tracks(path: &Path, mapping: &ColumnMapping) -> Result<TrajectoryDataset> {
    mapping.check()?;
    let delimiter = u8::try_from(mapping.delimiter)
        .map_err(|_| Error::Config("delimiter must be a single ASCII character".into()))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::parse(0, format!("{other:?}")),
        })?;
    let headers = reader.headers().map_err(|e| Error::parse(1, e.to_string()))?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].trim().is_empty()) {
        return Err(Error::EmptyDataset);
    }
    let cols = Columns::resolve(&headers, mapping)?;
    let unit = mapping.unit.to_meters();
    let ysign = if mapping.flip_y { -1.0 } else { 1.0 };

    let mut groups: BTreeMap<i64, Vec<RawRow>> = BTreeMap::new();
    let mut min_time = f64::INFINITY;
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::parse(line, e.to_string()))?;
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let id = field_f64(&record, cols.id, line, &mapping.vehicle_id)? as i64;
        let time = field_f64(&record, cols.time, line, &mapping.time)?;
        let row = RawRow {
            time,
            x: field_f64(&record, cols.x, line, &mapping.x)? * unit,
            y: ysign * field_f64(&record, cols.y, line, &mapping.y)? * unit,
            heading: cols
                .heading
                .map(|c| field_f64(&record, c, line, "heading"))
                .transpose()?
                .map(|h| wrap_angle(ysign * h)),
            speed: cols
                .speed
                .map(|c| field_f64(&record, c, line, "speed"))
                .transpose()?
                .map(|v| (v * unit).max(0.0)),
            lane: cols
                .lane
                .map(|c| field_f64(&record, c, line, "lane_id"))
                .transpose()?
                .map(|v| v.round() as i64),
            length: field_f64(&record, cols.length, line, &mapping.length)? * unit,
            width: field_f64(&record, cols.width, line, &mapping.width)? * unit,
            class: cols
                .class
                .and_then(|c| record.get(c))
                .map_or(VehicleClass::Car, VehicleClass::from_label),
        };
        let rows = groups.entry(id).or_default();
        if let Some(prev) = rows.last() {
            if row.time <= prev.time {
                return Err(Error::Data {
                    vehicle: id,
                    message: format!(
                        "timestamps not strictly increasing at line {line} ({} after {})",
                        row.time, prev.time
                    ),
                });
            }
        }
        min_time = min_time.min(time);
        rows.push(row);
    }
    if groups.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let recording_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut dataset = TrajectoryDataset::new(mapping.source, recording_id, "");
    let divisor = mapping.time_divisor();
    for (id, rows) in groups {
        if rows.len() < 2 {
            warn!("vehicle {id}: single row, skipped");
            continue;
        }
        let first = &rows[0];
        let (length, width, class) = (first.length, first.width, first.class);
        if !(length > 0.0 && width > 0.0) {
            return Err(Error::Data {
                vehicle: id,
                message: format!("non-positive dimensions {length} x {width}"),
            });
        }
        let mut samples: Vec<TrackSample> = rows
            .iter()
            .map(|r| TrackSample {
                t: (r.time - min_time) / divisor,
                x: r.x,
                y: r.y,
                yaw: r.heading.unwrap_or(0.0),
                speed: r.speed.unwrap_or(0.0),
                lane_id: r.lane,
            })
            .collect();
        if cols.heading.is_none() {
            derive_yaw(&mut samples);
        }
        if cols.speed.is_none() {
            derive_speed(&mut samples);
        }
        dataset.insert(VehicleTrack {
            id,
            class,
            length,
            width,
            samples,
        });
    }
    debug!(
        "parsed {} tracks ({} samples) from {}",
        dataset.tracks.len(),
        dataset.sample_count(),
        path.display()
    );
    Ok(dataset)
}

/// Forward-difference speed; the last sample repeats the previous value.
fn derive_speed(samples: &mut [TrackSample]) {
    let n = samples.len();
    for i in 0..n {
        let (a, b) = if i + 1 < n { (i, i + 1) } else { (i - 1, i) };
        let d = Vec2::new(samples[b].x - samples[a].x, samples[b].y - samples[a].y);
        samples[i].speed = d.norm() / (samples[b].t - samples[a].t);
    }
}

/// Options for the full ingestion pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestOptions {
    pub map_id: String,
    pub recording_id: Option<String>,
    /// Smoothing window in seconds; `None` uses the source default
    /// (1.5 s for NGSIM, disabled otherwise).
    pub smoothing_window: Option<f64>,
    pub rear_axle_fraction: f64,
}

impl IngestOptions {
    pub fn new(map_id: impl Into<String>) -> Self {
        IngestOptions {
            map_id: map_id.into(),
            recording_id: None,
            smoothing_window: None,
            rear_axle_fraction: 0.5,
        }
    }
}

/// Parse, smooth, remap to vehicle centers and resample onto the 10 Hz grid.
///
/// Smoothing runs before resampling for 10 Hz sources and after it for faster
/// sources, so the window always covers the same number of canonical samples.
pub fn ingest(path: &Path, mapping: &ColumnMapping, options: &IngestOptions) -> Result<TrajectoryDataset> {
    let raw = parse_tabular_tracks(path, mapping)?;
    let window = options.smoothing_window.unwrap_or(match mapping.source {
        DataSource::Ngsim => 1.5,
        _ => 0.0,
    });
    let mut dataset = TrajectoryDataset::new(
        mapping.source,
        options.recording_id.clone().unwrap_or(raw.recording_id),
        options.map_id.clone(),
    );
    for track in raw.tracks.into_values() {
        let processed = if mapping.rate == GRID_RATE {
            let smoothed = smooth_positions(&track, window);
            let centered = remap_reference_point(
                &smoothed,
                mapping.reference,
                ReferencePoint::Center,
                options.rear_axle_fraction,
            );
            resample_to_grid(&centered, mapping.rate)
        } else {
            resample_to_grid(&track, mapping.rate).map(|resampled| {
                let smoothed = smooth_positions(&resampled, window);
                remap_reference_point(
                    &smoothed,
                    mapping.reference,
                    ReferencePoint::Center,
                    options.rear_axle_fraction,
                )
            })
        };
        match processed {
            Ok(mut t) => {
                if mapping.speed.is_none() {
                    derive_speed(&mut t.samples);
                }
                dataset.insert(t);
            }
            Err(Error::TooShort { track, message }) => {
                warn!("vehicle {track}: {message}, skipped");
            }
            Err(e) => return Err(e),
        }
    }
    if dataset.tracks.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(dataset)
}
