//! Ego-centric bird's-eye rasters.
//!
//! A frame is `rows × cols × channels` bytes, row-major with channels
//! innermost. Row 0 is farthest ahead of the ego; cells are 0 or 255.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{OrientedRect, Vec2};
use crate::map::RoadMap;
use crate::sim::WorldState;

pub mod raster;

use raster::Plane;

pub const DEFAULT_ROWS: usize = 186;
pub const DEFAULT_COLS: usize = 150;
pub const DEFAULT_RESOLUTION: f64 = 0.25;
pub const ANCHOR_ROW: f64 = 124.0;
pub const ANCHOR_COL: f64 = 75.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Road,
    Lanes,
    Centerlines,
    Vehicles,
    Ego,
}

impl Channel {
    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Road => "road",
            Channel::Lanes => "lanes",
            Channel::Centerlines => "centerlines",
            Channel::Vehicles => "vehicles",
            Channel::Ego => "ego",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Full,
    FrontOnly,
    NoCenterline,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::FrontOnly => "front_only",
            Variant::NoCenterline => "no_centerline",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Variant::Full),
            "front_only" | "front-only" => Ok(Variant::FrontOnly),
            "no_centerline" | "no-centerline" => Ok(Variant::NoCenterline),
            _ => Err(Error::Argument(format!("unknown observation variant `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BevSpec {
    pub rows: usize,
    pub cols: usize,
    /// Meters per pixel.
    pub resolution: f64,
    pub anchor_row: f64,
    pub anchor_col: f64,
    pub variant: Variant,
    pub stack_depth: usize,
}

impl Default for BevSpec {
    fn default() -> Self {
        BevSpec {
            rows: DEFAULT_ROWS,
            cols: DEFAULT_COLS,
            resolution: DEFAULT_RESOLUTION,
            anchor_row: ANCHOR_ROW,
            anchor_col: ANCHOR_COL,
            variant: Variant::Full,
            stack_depth: 1,
        }
    }
}

impl BevSpec {
    pub fn with_variant(variant: Variant, stack_depth: usize) -> Self {
        BevSpec {
            variant,
            stack_depth,
            ..Default::default()
        }
    }

    pub fn channels(&self) -> Vec<Channel> {
        let mut ch = vec![
            Channel::Road,
            Channel::Lanes,
            Channel::Centerlines,
            Channel::Vehicles,
            Channel::Ego,
        ];
        if self.variant == Variant::NoCenterline {
            ch.retain(|c| *c != Channel::Centerlines);
        }
        ch
    }

    /// Shape of the stacked observation.
    pub fn observation_shape(&self) -> [usize; 3] {
        [self.rows, self.cols, self.channels().len() * self.stack_depth]
    }

    pub fn check(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || self.stack_depth == 0 || !(self.resolution > 0.0) {
            return Err(Error::Argument(
                "observation spec needs positive sizes and stack depth".into(),
            ));
        }
        Ok(())
    }

    /// Distance from the anchor to the farthest view corner, meters.
    fn view_radius(&self) -> f64 {
        let fwd = self.anchor_row.max(self.rows as f64 - self.anchor_row);
        let side = self.anchor_col.max(self.cols as f64 - self.anchor_col);
        (fwd * fwd + side * side).sqrt() * self.resolution
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BevFrame {
    pub rows: usize,
    pub cols: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

const RAW_MAGIC: &[u8; 4] = b"CRTB";

impl BevFrame {
    pub fn zeros(rows: usize, cols: usize, channels: usize) -> Self {
        BevFrame {
            rows,
            cols,
            channels,
            data: vec![0; rows * cols * channels],
        }
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.rows, self.cols, self.channels]
    }

    pub fn get(&self, r: usize, c: usize, k: usize) -> u8 {
        self.data[(r * self.cols + c) * self.channels + k]
    }

    pub fn channel(&self, k: usize) -> Plane {
        let mut p = Plane::new(self.rows, self.cols);
        for (i, v) in p.data.iter_mut().enumerate() {
            *v = self.data[i * self.channels + k];
        }
        p
    }

    fn from_planes(planes: &[Plane]) -> Self {
        let (rows, cols) = (planes[0].rows, planes[0].cols);
        let n = planes.len();
        let mut data = vec![0; rows * cols * n];
        for (k, p) in planes.iter().enumerate() {
            for (i, &v) in p.data.iter().enumerate() {
                data[i * n + k] = v;
            }
        }
        BevFrame {
            rows,
            cols,
            channels: n,
            data,
        }
    }

    /// `CRTB` followed by rows, cols, channels as big-endian u32, then the bytes.
    pub fn to_raw(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.data.len());
        out.extend_from_slice(RAW_MAGIC);
        for d in self.shape() {
            out.extend_from_slice(&(d as u32).to_be_bytes());
        }
        out.extend_from_slice(&self.data);
        out
    }

    pub fn from_raw(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..4] != RAW_MAGIC {
            return Err(Error::Argument("not a raw frame".into()));
        }
        let dim = |i: usize| u32::from_be_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
        let (rows, cols, channels) = (dim(0), dim(1), dim(2));
        let data = bytes[16..].to_vec();
        if data.len() != rows * cols * channels {
            return Err(Error::Argument(format!(
                "frame payload has {} bytes, shape needs {}",
                data.len(),
                rows * cols * channels
            )));
        }
        Ok(BevFrame {
            rows,
            cols,
            channels,
            data,
        })
    }

    /// Writes one grayscale PNG per channel as `<stem>_<index>.png`.
    pub fn write_pngs(&self, dir: &Path, stem: &str, names: &[Channel]) -> Result<Vec<std::path::PathBuf>> {
        let mut paths = Vec::new();
        for k in 0..self.channels {
            let name = names.get(k % names.len().max(1)).map_or("ch", |c| c.as_str());
            let path = dir.join(format!("{stem}_{k}_{name}.png"));
            let plane = self.channel(k);
            image::save_buffer(
                &path,
                &plane.data,
                self.cols as u32,
                self.rows as u32,
                image::ExtendedColorType::L8,
            )
            .map_err(|e| Error::Argument(format!("{}: {e}", path.display())))?;
            paths.push(path);
        }
        Ok(paths)
    }
}

/// World → continuous pixel coordinates in the ego frame.
struct EgoFrame {
    origin: Vec2,
    forward: Vec2,
    left: Vec2,
    spec_res: f64,
    anchor: (f64, f64),
}

impl EgoFrame {
    fn new(world: &WorldState, spec: &BevSpec) -> Self {
        let forward = Vec2::from_angle(world.ego.yaw);
        EgoFrame {
            origin: world.ego.position(),
            forward,
            left: forward.perp(),
            spec_res: spec.resolution,
            anchor: (spec.anchor_row, spec.anchor_col),
        }
    }

    /// Ego-frame coordinates are snapped to a 1 µm grid before conversion so that
    /// rigidly moving the whole scene reproduces the frame bit for bit.
    fn px(&self, p: Vec2) -> (f64, f64) {
        let snap = |v: f64| (v * 1e6).round() / 1e6;
        let d = p - self.origin;
        let f = snap(d.dot(self.forward));
        let l = snap(d.dot(self.left));
        (self.anchor.0 - f / self.spec_res, self.anchor.1 - l / self.spec_res)
    }

    fn rect(&self, r: &OrientedRect) -> [(f64, f64); 4] {
        r.corners().map(|c| self.px(c))
    }
}

/// Renders one frame of the world according to `spec`.
pub fn render(world: &WorldState, map: &RoadMap, spec: &BevSpec) -> BevFrame {
    let frame = EgoFrame::new(world, spec);
    let channels = spec.channels();
    let mut planes: Vec<Plane> = channels.iter().map(|_| Plane::new(spec.rows, spec.cols)).collect();
    let index = |c: Channel| channels.iter().position(|x| *x == c);
    let reach = spec.view_radius();
    let ego_pos = world.ego.position();

    for lane in &map.lanes {
        let half = lane.width / 2.0;
        let pts = lane.centerline.points();
        let mut prev_offsets: Option<(Vec2, Vec2)> = None;
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let Some(dir) = (b - a).normalized() else {
                continue;
            };
            let near = crate::geometry::segment_parameter(ego_pos, a, b);
            if ego_pos.distance(a.lerp(b, near)) > reach + half {
                prev_offsets = None;
                continue;
            }
            let n = dir.perp() * half;
            let (pa, pb) = (frame.px(a), frame.px(b));
            if let Some(k) = index(Channel::Road) {
                planes[k].fill_capsule(pa, pb, half / spec.resolution);
            }
            if let Some(k) = index(Channel::Lanes) {
                planes[k].draw_line(frame.px(a + n), frame.px(b + n));
                planes[k].draw_line(frame.px(a - n), frame.px(b - n));
                if let Some((pl, pr)) = prev_offsets {
                    planes[k].draw_line(frame.px(pl), frame.px(a + n));
                    planes[k].draw_line(frame.px(pr), frame.px(a - n));
                }
            }
            if let Some(k) = index(Channel::Centerlines) {
                planes[k].draw_line(pa, pb);
            }
            prev_offsets = Some((b + n, b - n));
        }
    }

    if let Some(k) = index(Channel::Vehicles) {
        for agent in &world.agents {
            let fp = agent.footprint();
            if fp.center.distance(ego_pos) <= reach + fp.length + fp.width {
                planes[k].fill_convex(&frame.rect(&fp));
            }
        }
    }
    if let Some(k) = index(Channel::Ego) {
        planes[k].fill_convex(&frame.rect(&world.ego.footprint()));
    }

    if spec.variant == Variant::FrontOnly {
        let first = (spec.anchor_row.ceil().max(0.0) as usize).min(spec.rows);
        for p in &mut planes {
            p.data[first * spec.cols..].fill(0);
        }
    }
    BevFrame::from_planes(&planes)
}

/// Ring of the most recent frames, read out channel-wise oldest → newest.
#[derive(Debug, Clone)]
pub struct FrameStack {
    depth: usize,
    frames: VecDeque<BevFrame>,
}

impl FrameStack {
    pub fn new(depth: usize) -> Self {
        FrameStack {
            depth: depth.max(1),
            frames: VecDeque::with_capacity(depth.max(1)),
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn clear(&mut self) {
        self.frames.clear();
    }

    pub fn push(&mut self, frame: BevFrame) -> Result<()> {
        if let Some(first) = self.frames.front() {
            if first.shape() != frame.shape() {
                return Err(Error::Argument(format!(
                    "frame shape {:?} does not match stack shape {:?}",
                    frame.shape(),
                    first.shape()
                )));
            }
        }
        if self.frames.len() == self.depth {
            self.frames.pop_front();
        }
        self.frames.push_back(frame);
        Ok(())
    }

    /// Missing slots repeat the oldest frame. `None` before the first push.
    pub fn tensor(&self) -> Option<BevFrame> {
        let oldest = self.frames.front()?;
        if self.depth == 1 {
            return Some(oldest.clone());
        }
        let missing = self.depth - self.frames.len();
        let blocks: Vec<&BevFrame> = std::iter::repeat_n(oldest, missing).chain(self.frames.iter()).collect();
        let ch = oldest.channels;
        let total = ch * self.depth;
        let pixels = oldest.rows * oldest.cols;
        let mut data = vec![0; pixels * total];
        for i in 0..pixels {
            for (b, frame) in blocks.iter().enumerate() {
                data[i * total + b * ch..i * total + (b + 1) * ch].copy_from_slice(&frame.data[i * ch..(i + 1) * ch]);
            }
        }
        Some(BevFrame {
            rows: oldest.rows,
            cols: oldest.cols,
            channels: total,
            data,
        })
    }

    /// Pushes `frame` and returns the stacked tensor.
    pub fn stack(&mut self, frame: BevFrame) -> Result<BevFrame> {
        self.push(frame)?;
        Ok(self.tensor().expect("stack holds a frame"))
    }
}
