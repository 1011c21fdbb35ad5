//! Scripted traffic for the bundled synthetic suite.
//!
//! Two recordings are generated: a three-lane highway where one vehicle per slot
//! changes lanes between replayed neighbours, and a four-arm roundabout where
//! vehicles enter, circulate and leave by one of the other three arms. The
//! scenarios are then mined with the regular extraction pipeline.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};

use log::info;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{
    grid_tick, tick_time, write_canonical, DataSource, TrackSample, TrajectoryDataset, VehicleClass, VehicleTrack,
};
use crate::error::{Error, Result};
use crate::geometry::{OrientedRect, Polyline, Vec2};
use crate::map::{write_map, GateKind, GateSegment, LaneGeometry, RoadMap};
use crate::scenario::{
    assign_split, extract_lane_changes, extract_roundabout_crossings, write_suite, ExtractionReport, ScenarioSet,
    SuiteFile,
};

pub const HIGHWAY_ID: &str = "synth-highway";
pub const ROUNDABOUT_ID: &str = "synth-roundabout";
pub const SUITE_FILE: &str = "suite.crts";

pub const LANE_WIDTH: f64 = 3.5;
/// Longitudinal spacing between independent lane-change slots, meters.
pub const SLOT_SPACING: f64 = 250.0;
const HIGHWAY_SECONDS: f64 = 20.0;

pub const RING_RADIUS: f64 = 20.0;
const RING_LANE_WIDTH: f64 = 4.5;
const ARM_LANE_WIDTH: f64 = 4.0;
/// Lateral offset of arm lanes from the arm axis.
const ARM_OFFSET: f64 = 2.0;
/// Radius where the straight arm lanes end and the connectors begin.
const ARM_INNER: f64 = 27.0;
const ARM_OUTER: f64 = 100.0;
const GATE_RADIUS: f64 = 30.0;
/// Ring angle between an arm axis and the point where its connectors join the ring.
const JOIN_ANGLE: f64 = 35f64.to_radians();
const BEZIER_HANDLE: f64 = 6.0;
/// Extra clearance kept between scheduled roundabout vehicles, meters.
const LONGITUDINAL_MARGIN: f64 = 5.0;
const LATERAL_MARGIN: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticOptions {
    pub seed: u64,
    pub lane_change_slots: usize,
    pub roundabout_vehicles: usize,
}

impl Default for SyntheticOptions {
    fn default() -> Self {
        SyntheticOptions {
            seed: 2021,
            lane_change_slots: 48,
            roundabout_vehicles: 56,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSuite {
    pub maps: Vec<RoadMap>,
    pub datasets: Vec<TrajectoryDataset>,
    pub set: ScenarioSet,
    pub reports: Vec<ExtractionReport>,
}

fn car(rng: &mut ChaCha8Rng) -> (f64, f64) {
    (rng.gen_range(4.2..4.9), rng.gen_range(1.75..1.9))
}

fn make_track(
    id: i64,
    (length, width): (f64, f64),
    ticks: std::ops::RangeInclusive<i64>,
    map: &RoadMap,
    pose: impl Fn(f64) -> (Vec2, f64, f64),
) -> VehicleTrack {
    let samples = ticks
        .map(|k| {
            let t = tick_time(k);
            let (p, yaw, speed) = pose(t);
            TrackSample {
                t,
                x: p.x,
                y: p.y,
                yaw,
                speed,
                lane_id: map.lane_at(p),
            }
        })
        .collect();
    VehicleTrack {
        id,
        class: VehicleClass::Car,
        length,
        width,
        samples,
    }
}

fn lane_y(lane: i64) -> f64 {
    -((lane - 1) as f64) * LANE_WIDTH
}

pub fn highway_map(slots: usize) -> Result<RoadMap> {
    let end = slots as f64 * SLOT_SPACING + 600.0;
    let lanes = (1..=3)
        .map(|id| {
            LaneGeometry::new(
                id,
                vec![Vec2::new(-100.0, lane_y(id)), Vec2::new(end, lane_y(id))],
                LANE_WIDTH,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    RoadMap::new(HIGHWAY_ID, lanes, vec![])
}

/// One lane change per slot with neighbours placed around the gap in the target lane.
pub fn highway(options: &SyntheticOptions) -> Result<(RoadMap, TrajectoryDataset)> {
    let map = highway_map(options.lane_change_slots)?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut ds = TrajectoryDataset::new(DataSource::Canonical, HIGHWAY_ID, HIGHWAY_ID);
    let ticks = 0..=grid_tick(HIGHWAY_SECONDS);

    for slot in 0..options.lane_change_slots {
        let base = 100 * (slot as i64 + 1);
        let x0 = slot as f64 * SLOT_SPACING;
        let v: f64 = rng.gen_range(12.0..16.0);
        let start_lane: i64 = rng.gen_range(1..=3);
        let target_lane = match start_lane {
            2 if rng.gen_bool(0.5) => 1,
            2 => 3,
            _ => 2,
        };
        let change_at: f64 = rng.gen_range(6.5..8.0);
        let duration: f64 = rng.gen_range(4.0..6.0);
        let (ys, yt) = (lane_y(start_lane), lane_y(target_lane));

        let changer = move |t: f64| {
            let tau = ((t - change_at) / duration).clamp(0.0, 1.0);
            let y = ys + (yt - ys) * (1.0 - (PI * tau).cos()) / 2.0;
            let vy = if (0.0..1.0).contains(&tau) && tau > 0.0 {
                (yt - ys) * PI / (2.0 * duration) * (PI * tau).sin()
            } else {
                0.0
            };
            (Vec2::new(x0 + v * t, y), vy.atan2(v), v.hypot(vy))
        };
        ds.insert(make_track(base, car(&mut rng), ticks.clone(), &map, changer));

        let cruiser = |lane: i64, gap: f64| {
            let y = lane_y(lane);
            move |t: f64| (Vec2::new(x0 + gap + v * t, y), 0.0, v)
        };
        let mut others = vec![(target_lane, 25.0), (target_lane, -25.0), (start_lane, 35.0)];
        let opposite = 2 * start_lane - target_lane;
        if (1..=3).contains(&opposite) {
            others.push((opposite, 0.0));
        }
        for (i, (lane, gap)) in others.into_iter().enumerate() {
            ds.insert(make_track(
                base + 1 + i as i64,
                car(&mut rng),
                ticks.clone(),
                &map,
                cruiser(lane, gap),
            ));
        }
    }
    Ok((map, ds))
}

fn arm_axes(arm: usize) -> (Vec2, Vec2) {
    let u = Vec2::from_angle(arm as f64 * FRAC_PI_2);
    (u, u.perp())
}

fn ring_point(angle: f64) -> Vec2 {
    Vec2::from_angle(angle) * RING_RADIUS
}

fn ring_tangent(angle: f64) -> Vec2 {
    Vec2::from_angle(angle).perp()
}

fn bezier(p: [Vec2; 4], n: usize) -> Vec<Vec2> {
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let s = 1.0 - t;
            p[0] * (s * s * s) + p[1] * (3.0 * s * s * t) + p[2] * (3.0 * s * t * t) + p[3] * (t * t * t)
        })
        .collect()
}

fn straight(a: Vec2, b: Vec2, step: f64) -> Vec<Vec2> {
    let n = (a.distance(b) / step).ceil().max(1.0) as usize;
    (0..=n).map(|i| a.lerp(b, i as f64 / n as f64)).collect()
}

fn ring_arc(from: f64, to: f64) -> Vec<Vec2> {
    let n = ((to - from) / 2f64.to_radians()).ceil().max(1.0) as usize;
    (0..=n)
        .map(|i| ring_point(from + (to - from) * i as f64 / n as f64))
        .collect()
}

fn arm_angle(arm: usize) -> f64 {
    arm as f64 * FRAC_PI_2
}

/// Inbound lane: straight approach, then a connector merging into the ring.
fn entry_path(arm: usize) -> Vec<Vec2> {
    let (u, p) = arm_axes(arm);
    let a = u * ARM_INNER + p * ARM_OFFSET;
    let join = arm_angle(arm) + JOIN_ANGLE;
    let q = ring_point(join);
    let mut pts = straight(u * ARM_OUTER + p * ARM_OFFSET, a, 2.0);
    pts.pop();
    pts.extend(bezier(
        [a, a - u * BEZIER_HANDLE, q - ring_tangent(join) * BEZIER_HANDLE, q],
        24,
    ));
    pts
}

/// Outbound lane: connector leaving the ring, then a straight departure.
fn exit_path(arm: usize) -> Vec<Vec2> {
    let (u, p) = arm_axes(arm);
    let b = u * ARM_INNER - p * ARM_OFFSET;
    let leave = arm_angle(arm) - JOIN_ANGLE;
    let q = ring_point(leave);
    let mut pts = bezier(
        [q, q + ring_tangent(leave) * BEZIER_HANDLE, b - u * BEZIER_HANDLE, b],
        24,
    );
    pts.pop();
    pts.extend(straight(b, u * ARM_OUTER - p * ARM_OFFSET, 2.0));
    pts
}

pub fn roundabout_map() -> Result<RoadMap> {
    let mut ring: Vec<Vec2> = (0..72).map(|i| ring_point((i * 5) as f64 * PI / 180.0)).collect();
    ring.push(ring[0]);
    let mut lanes = vec![LaneGeometry::new(1, ring, RING_LANE_WIDTH)?];
    let mut gates = Vec::new();
    for arm in 0..4 {
        lanes.push(LaneGeometry::new(10 + arm as i64, entry_path(arm), ARM_LANE_WIDTH)?);
        lanes.push(LaneGeometry::new(20 + arm as i64, exit_path(arm), ARM_LANE_WIDTH)?);
        let (u, p) = arm_axes(arm);
        let (near, far) = (0.2, ARM_OFFSET + ARM_LANE_WIDTH / 2.0 + 0.2);
        gates.push(GateSegment::new(
            10 + arm as i64,
            GateKind::RoundaboutEntry,
            u * GATE_RADIUS + p * near,
            u * GATE_RADIUS + p * far,
            -u,
        )?);
        gates.push(GateSegment::new(
            20 + arm as i64,
            GateKind::RoundaboutExit,
            u * GATE_RADIUS - p * far,
            u * GATE_RADIUS - p * near,
            u,
        )?);
    }
    RoadMap::new(ROUNDABOUT_ID, lanes, gates)
}

/// Centerline drive from arm `from` to the arm `quarter_turns` further counterclockwise.
pub fn roundabout_route(from: usize, quarter_turns: usize) -> Polyline {
    let to = (from + quarter_turns) % 4;
    let mut pts = entry_path(from);
    let start = arm_angle(from) + JOIN_ANGLE;
    let end = arm_angle(from) + quarter_turns as f64 * FRAC_PI_2 - JOIN_ANGLE;
    pts.pop();
    pts.extend(ring_arc(start, end));
    pts.pop();
    pts.extend(exit_path(to));
    pts.dedup();
    Polyline::new(pts).expect("route has distinct finite points")
}

fn pose_on(path: &Polyline, s: f64) -> (Vec2, f64) {
    let (i, _) = path.locate(s);
    (path.point_at(s), path.segment_heading(i))
}

struct Scheduled {
    first_tick: i64,
    footprints: Vec<OrientedRect>,
}

impl Scheduled {
    fn at(&self, tick: i64) -> Option<&OrientedRect> {
        usize::try_from(tick - self.first_tick)
            .ok()
            .and_then(|i| self.footprints.get(i))
    }

    fn conflicts(&self, other: &Scheduled) -> bool {
        (0..self.footprints.len() as i64).any(|i| {
            let tick = self.first_tick + i;
            let (Some(a), Some(b)) = (self.at(tick), other.at(tick)) else {
                return false;
            };
            a.center.distance(b.center) < a.length + b.length && a.overlaps(b)
        })
    }
}

/// Vehicles enter at staggered times and are delayed until their inflated
/// footprints never touch any vehicle scheduled before them.
pub fn roundabout(options: &SyntheticOptions) -> Result<(RoadMap, TrajectoryDataset)> {
    let map = roundabout_map()?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed.wrapping_add(1));
    let mut ds = TrajectoryDataset::new(DataSource::Canonical, ROUNDABOUT_ID, ROUNDABOUT_ID);
    let mut scheduled: Vec<Scheduled> = Vec::new();
    let mut earliest = 0i64;

    for n in 0..options.roundabout_vehicles {
        let from = rng.gen_range(0..4usize);
        let turns = rng.gen_range(1..=3usize);
        let v: f64 = rng.gen_range(6.5..8.0);
        let dims = car(&mut rng);
        let path = roundabout_route(from, turns);
        let steps = (path.length() / v * 10.0).floor() as i64;
        let inflated: Vec<OrientedRect> = (0..=steps)
            .map(|k| {
                let (p, yaw) = pose_on(&path, v * tick_time(k));
                OrientedRect::new(p, yaw, dims.0 + LONGITUDINAL_MARGIN, dims.1 + LATERAL_MARGIN)
            })
            .collect();
        let mut first_tick = earliest + rng.gen_range(0..20);
        loop {
            let candidate = Scheduled {
                first_tick,
                footprints: inflated.clone(),
            };
            if scheduled.iter().all(|s| !candidate.conflicts(s)) {
                scheduled.push(candidate);
                break;
            }
            first_tick += 5;
        }
        earliest = first_tick;
        let track = make_track(n as i64 + 1, dims, first_tick..=first_tick + steps, &map, |t| {
            let (p, yaw) = pose_on(&path, v * (t - tick_time(first_tick)));
            (p, yaw, v)
        });
        ds.insert(track);
    }
    Ok((map, ds))
}

/// Generates both recordings, mines them and splits the scenarios.
pub fn generate(options: &SyntheticOptions) -> Result<SyntheticSuite> {
    let (hmap, hds) = highway(options)?;
    let (rmap, rds) = roundabout(options)?;
    let lane_changes = extract_lane_changes(&hds, &hmap);
    let crossings = extract_roundabout_crossings(&rds, &rmap);
    info!(
        "synthetic traffic: {} lane changes, {} roundabout crossings",
        lane_changes.scenarios.len(),
        crossings.scenarios.len()
    );
    let mut scenarios = lane_changes.scenarios;
    scenarios.extend(crossings.scenarios);
    Ok(SyntheticSuite {
        maps: vec![hmap, rmap],
        datasets: vec![hds, rds],
        set: assign_split(scenarios, options.seed),
        reports: vec![lane_changes.report, crossings.report],
    })
}

/// Writes maps, datasets and the suite file into `dir`; returns the suite path.
pub fn write_synthetic(suite: &SyntheticSuite, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut file = SuiteFile {
        set: suite.set.clone(),
        maps: Vec::new(),
        datasets: Vec::new(),
    };
    for map in &suite.maps {
        let name = format!("{}.crtm", map.map_id);
        write_map(map, &dir.join(&name))?;
        file.maps.push((map.map_id.clone(), PathBuf::from(name)));
    }
    for ds in &suite.datasets {
        let name = format!("{}.crtd", ds.recording_id);
        write_canonical(ds, &dir.join(&name))?;
        file.datasets.push((ds.recording_id.clone(), PathBuf::from(name)));
    }
    let path = dir.join(SUITE_FILE);
    write_suite(&file, &path)?;
    Ok(path)
}
