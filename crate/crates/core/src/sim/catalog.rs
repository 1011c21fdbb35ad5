//! Vehicle model catalog and Jaccard footprint matching.
//!
//! Catalog files hold one `name length width` entry per line; `#` starts a comment.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleModel {
    pub name: String,
    pub length: f64,
    pub width: f64,
}

impl VehicleModel {
    pub fn new(name: impl Into<String>, length: f64, width: f64) -> Self {
        VehicleModel {
            name: name.into(),
            length,
            width,
        }
    }
}

const DEFAULT_CATALOG: &str = "\
# name        length  width
microcar      2.45    1.55
city_car      3.55    1.63
hatchback     3.83    1.67
compact       4.26    1.80
sedan         4.72    1.85
estate        4.90    1.86
suv           4.80    1.94
van           5.10    2.00
pickup        5.36    2.03
box_truck     7.20    2.45
bus          11.00    2.55
motorcycle    2.20    0.80
";

pub fn default_catalog() -> Vec<VehicleModel> {
    parse_catalog(DEFAULT_CATALOG).expect("built-in catalog is valid")
}

pub fn parse_catalog(text: &str) -> Result<Vec<VehicleModel>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let [name, l, w] = toks[..] else {
            return Err(Error::parse(i + 1, "expected `name length width`"));
        };
        let dim = |v: &str| {
            v.parse::<f64>()
                .ok()
                .filter(|d| *d > 0.0 && d.is_finite())
                .ok_or_else(|| Error::parse(i + 1, format!("invalid dimension `{v}`")))
        };
        out.push(VehicleModel::new(name, dim(l)?, dim(w)?));
    }
    if out.is_empty() {
        return Err(Error::Argument("vehicle catalog is empty".into()));
    }
    Ok(out)
}

pub fn read_catalog(path: &Path) -> Result<Vec<VehicleModel>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_catalog(&text)
}

/// Intersection over union of two center-aligned, axis-aligned footprints.
pub fn footprint_jaccard(l1: f64, w1: f64, l2: f64, w2: f64) -> f64 {
    let inter = l1.min(l2) * w1.min(w2);
    inter / (l1 * w1 + l2 * w2 - inter)
}

/// Catalog entry with the highest footprint Jaccard index; the earliest entry wins ties.
pub fn match_vehicle_model(length: f64, width: f64, catalog: &[VehicleModel]) -> Result<(&VehicleModel, f64)> {
    if !(length > 0.0 && width > 0.0) {
        return Err(Error::Argument(format!(
            "vehicle dimensions must be positive, got {length} x {width}"
        )));
    }
    let mut best: Option<(&VehicleModel, f64)> = None;
    for m in catalog {
        let j = footprint_jaccard(length, width, m.length, m.width);
        if best.is_none_or(|(_, bj)| j > bj) {
            best = Some((m, j));
        }
    }
    best.ok_or_else(|| Error::Argument("vehicle catalog is empty".into()))
}
