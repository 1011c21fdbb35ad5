//! Road geometry: lanes, centerlines and roundabout gates, plus the geometric
//! queries used by extraction, termination checks and rendering.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{segments_intersect, Polyline, Vec2};

pub mod format;

pub use format::{read_map, write_map, MAP_VERSION};

#[derive(Debug, Clone, PartialEq)]
pub struct LaneGeometry {
    pub lane_id: i64,
    pub centerline: Polyline,
    pub width: f64,
}

impl LaneGeometry {
    pub fn new(lane_id: i64, points: Vec<Vec2>, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::Argument(format!("lane {lane_id}: width must be positive")));
        }
        if points.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Argument(format!(
                "lane {lane_id}: consecutive centerline points must be distinct"
            )));
        }
        let centerline = Polyline::new(points)
            .ok_or_else(|| Error::Argument(format!("lane {lane_id}: centerline needs at least 2 finite points")))?;
        Ok(LaneGeometry {
            lane_id,
            centerline,
            width,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    RoundaboutEntry,
    RoundaboutExit,
}

impl GateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GateKind::RoundaboutEntry => "entry",
            GateKind::RoundaboutExit => "exit",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entry" | "roundabout_entry" => Ok(GateKind::RoundaboutEntry),
            "exit" | "roundabout_exit" => Ok(GateKind::RoundaboutExit),
            _ => Err(Error::Argument(format!("unknown gate kind `{s}`"))),
        }
    }
}

/// Directed segment whose crossing marks a roundabout entry or exit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateSegment {
    pub gate_id: i64,
    pub kind: GateKind,
    pub endpoints: [Vec2; 2],
    pub crossing_direction: Vec2,
}

impl GateSegment {
    /// Normalizes `direction`; fails on coincident endpoints or a zero direction.
    pub fn new(gate_id: i64, kind: GateKind, a: Vec2, b: Vec2, direction: Vec2) -> Result<Self> {
        if a == b || !a.is_finite() || !b.is_finite() {
            return Err(Error::Argument(format!("gate {gate_id}: endpoints must be distinct")));
        }
        let crossing_direction = direction
            .normalized()
            .ok_or_else(|| Error::Argument(format!("gate {gate_id}: zero crossing direction")))?;
        Ok(GateSegment {
            gate_id,
            kind,
            endpoints: [a, b],
            crossing_direction,
        })
    }

    pub fn midpoint(&self) -> Vec2 {
        self.endpoints[0].lerp(self.endpoints[1], 0.5)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadMap {
    pub map_id: String,
    pub lanes: Vec<LaneGeometry>,
    pub gates: Vec<GateSegment>,
}

impl RoadMap {
    pub fn new(map_id: impl Into<String>, lanes: Vec<LaneGeometry>, gates: Vec<GateSegment>) -> Result<Self> {
        let map = RoadMap {
            map_id: map_id.into(),
            lanes,
            gates,
        };
        for (i, l) in map.lanes.iter().enumerate() {
            if map.lanes[..i].iter().any(|o| o.lane_id == l.lane_id) {
                return Err(Error::Argument(format!("duplicate lane id {}", l.lane_id)));
            }
        }
        for (i, g) in map.gates.iter().enumerate() {
            if map.gates[..i].iter().any(|o| o.gate_id == g.gate_id) {
                return Err(Error::Argument(format!("duplicate gate id {}", g.gate_id)));
            }
        }
        Ok(map)
    }

    pub fn lane(&self, id: i64) -> Option<&LaneGeometry> {
        self.lanes.iter().find(|l| l.lane_id == id)
    }

    pub fn gate(&self, id: i64) -> Option<&GateSegment> {
        self.gates.iter().find(|g| g.gate_id == id)
    }

    pub fn gates_of(&self, kind: GateKind) -> impl Iterator<Item = &GateSegment> {
        self.gates.iter().filter(move |g| g.kind == kind)
    }

    /// Lane whose corridor contains `point`, preferring the smallest |lateral offset|
    /// and then the lower lane id.
    pub fn lane_at(&self, point: Vec2) -> Option<i64> {
        let mut best: Option<(f64, i64)> = None;
        for lane in &self.lanes {
            if point_in_lane(point, lane) {
                let off = lateral_offset(point, lane).abs();
                let better = match best {
                    None => true,
                    Some((bo, bid)) => off < bo || (off == bo && lane.lane_id < bid),
                };
                if better {
                    best = Some((off, lane.lane_id));
                }
            }
        }
        best.map(|(_, id)| id)
    }

    /// Union of all lane corridors (distance to a centerline within half the lane width).
    pub fn on_road(&self, point: Vec2) -> bool {
        self.lanes
            .iter()
            .any(|l| l.centerline.project(point).distance <= l.width / 2.0)
    }
}

/// Signed perpendicular distance to the nearest centerline segment, left of travel positive.
pub fn lateral_offset(point: Vec2, lane: &LaneGeometry) -> f64 {
    lane.centerline.project(point).signed_distance
}

/// Heading of the centerline segment nearest to `point`.
pub fn lane_heading_at(point: Vec2, lane: &LaneGeometry) -> f64 {
    let proj = lane.centerline.project(point);
    lane.centerline.segment_heading(proj.segment)
}

/// Arc length of the closest polyline point and the distance to it.
pub fn arc_length_projection(point: Vec2, polyline: &Polyline) -> (f64, f64) {
    let p = polyline.project(point);
    (p.s, p.distance)
}

/// True iff the motion `prev`→`curr` intersects the gate and moves along its crossing direction.
pub fn gate_crossed(prev: Vec2, curr: Vec2, gate: &GateSegment) -> bool {
    (curr - prev).dot(gate.crossing_direction) > 0.0
        && segments_intersect(prev, curr, gate.endpoints[0], gate.endpoints[1])
}

/// Closed lateral bound, open at the lane ends.
pub fn point_in_lane(point: Vec2, lane: &LaneGeometry) -> bool {
    let p = lane.centerline.project(point);
    p.distance <= lane.width / 2.0 && p.s > 0.0 && p.s < lane.centerline.length()
}
