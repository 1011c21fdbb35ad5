//! Planar geometry primitives shared by the map, simulator and renderer.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Vec2::new(c, s)
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z component of the 3D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Rotated 90° counter-clockwise.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(Vec2::new(self.x / n, self.y / n))
        } else {
            None
        }
    }

    pub fn lerp(self, other: Vec2, t: f64) -> Vec2 {
        self + (other - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Closest point on segment `a`–`b` to `p`, returned as the segment parameter in [0, 1].
pub fn segment_parameter(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return 0.0;
    }
    ((p - a).dot(ab) / len2).clamp(0.0, 1.0)
}

fn orientation(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed segment intersection test (touching endpoints count).
pub fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = orientation(q1, q2, p1);
    let d2 = orientation(q1, q2, p2);
    let d3 = orientation(p1, p2, q1);
    let d4 = orientation(p1, p2, q2);

    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Parameter along `p1`→`p2` where it meets the line through `q1`–`q2`, if not parallel.
pub fn line_crossing_parameter(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> Option<f64> {
    let r = p2 - p1;
    let s = q2 - q1;
    let denom = r.cross(s);
    if denom == 0.0 {
        return None;
    }
    Some((q1 - p1).cross(s) / denom)
}

/// Result of projecting a point onto a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Arc length of the foot point from the polyline start.
    pub s: f64,
    /// Unsigned distance from the query point to the foot point.
    pub distance: f64,
    /// Signed distance, positive to the left of the travel direction.
    pub signed_distance: f64,
    pub segment: usize,
    pub foot: Vec2,
}

/// Polyline with cached cumulative arc lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Vec2>,
    cumulative: Vec<f64>,
}

impl Polyline {
    /// Requires at least two points; zero-length segments are allowed and skipped by queries.
    pub fn new(points: Vec<Vec2>) -> Option<Self> {
        if points.len() < 2 || points.iter().any(|p| !p.is_finite()) {
            return None;
        }
        let mut cumulative = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in points.windows(2) {
            acc += w[0].distance(w[1]);
            cumulative.push(acc);
        }
        Some(Polyline { points, cumulative })
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    pub fn segment_count(&self) -> usize {
        self.points.len() - 1
    }

    /// Closest point on the polyline. Ties go to the lower segment index.
    pub fn project(&self, p: Vec2) -> Projection {
        self.project_segments(p, 0, self.segment_count())
    }

    /// Closest point among the segments overlapping the arc interval `[s_lo, s_hi]`.
    pub fn project_within(&self, p: Vec2, s_lo: f64, s_hi: f64) -> Projection {
        let (first, _) = self.locate(s_lo);
        let (last, _) = self.locate(s_hi.max(s_lo));
        self.project_segments(p, first, last + 1)
    }

    fn project_segments(&self, p: Vec2, first: usize, end: usize) -> Projection {
        let mut best: Option<Projection> = None;
        for i in first..end {
            let (a, b) = (self.points[i], self.points[i + 1]);
            let seg_len = self.cumulative[i + 1] - self.cumulative[i];
            if seg_len == 0.0 && best.is_some() {
                continue;
            }
            let u = segment_parameter(p, a, b);
            let foot = a.lerp(b, u);
            let distance = p.distance(foot);
            if best.is_none_or(|bst| distance < bst.distance) {
                let side = (b - a).cross(p - a);
                let signed = if side < 0.0 { -distance } else { distance };
                best = Some(Projection {
                    s: self.cumulative[i] + u * seg_len,
                    distance,
                    signed_distance: signed,
                    segment: i,
                    foot,
                });
            }
        }
        best.expect("polyline has at least one segment")
    }

    /// Direction of segment `i`, falling back to neighbouring segments when degenerate.
    pub fn segment_heading(&self, i: usize) -> f64 {
        let n = self.segment_count();
        let seg = |k: usize| self.points[k + 1] - self.points[k];
        if seg(i).norm_squared() > 0.0 {
            return seg(i).angle();
        }
        for k in (i + 1..n).chain((0..i).rev()) {
            if seg(k).norm_squared() > 0.0 {
                return seg(k).angle();
            }
        }
        0.0
    }

    /// Point at arc length `s`, clamped to the polyline ends.
    pub fn point_at(&self, s: f64) -> Vec2 {
        let (i, u) = self.locate(s);
        self.points[i].lerp(self.points[i + 1], u)
    }

    /// Segment index and in-segment parameter for arc length `s` (clamped).
    pub fn locate(&self, s: f64) -> (usize, f64) {
        let total = self.length();
        let s = s.clamp(0.0, total);
        let idx = match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&s).expect("finite arc length"))
        {
            Ok(i) => i.min(self.points.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.points.len() - 2),
        };
        let seg_len = self.cumulative[idx + 1] - self.cumulative[idx];
        let u = if seg_len > 0.0 {
            ((s - self.cumulative[idx]) / seg_len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (idx, u)
    }
}

/// Oriented rectangle given by center, heading and full extents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedRect {
    pub center: Vec2,
    pub yaw: f64,
    pub length: f64,
    pub width: f64,
}

impl OrientedRect {
    pub fn new(center: Vec2, yaw: f64, length: f64, width: f64) -> Self {
        OrientedRect {
            center,
            yaw,
            length,
            width,
        }
    }

    pub fn axes(&self) -> (Vec2, Vec2) {
        let forward = Vec2::from_angle(self.yaw);
        (forward, forward.perp())
    }

    /// Corners in counter-clockwise order starting front-left.
    pub fn corners(&self) -> [Vec2; 4] {
        let (f, l) = self.axes();
        let hf = f * (self.length / 2.0);
        let hl = l * (self.width / 2.0);
        [
            self.center + hf + hl,
            self.center - hf + hl,
            self.center - hf - hl,
            self.center + hf - hl,
        ]
    }

    /// Closed containment test.
    pub fn contains(&self, p: Vec2) -> bool {
        let (f, l) = self.axes();
        let d = p - self.center;
        d.dot(f).abs() <= self.length / 2.0 && d.dot(l).abs() <= self.width / 2.0
    }

    /// Separating-axis overlap test. Touching rectangles overlap.
    pub fn overlaps(&self, other: &OrientedRect) -> bool {
        self.min_axis_overlap(other) >= 0.0
    }

    /// Smallest projected interval overlap over the four candidate axes.
    /// Negative values are the separation along the best separating axis.
    pub fn min_axis_overlap(&self, other: &OrientedRect) -> f64 {
        let (a0, a1) = self.axes();
        let (b0, b1) = other.axes();
        let ca = self.corners();
        let cb = other.corners();
        let mut min_overlap = f64::INFINITY;
        for axis in [a0, a1, b0, b1] {
            let (amin, amax) = project_interval(&ca, axis);
            let (bmin, bmax) = project_interval(&cb, axis);
            let overlap = amax.min(bmax) - amin.max(bmin);
            min_overlap = min_overlap.min(overlap);
        }
        min_overlap
    }
}

fn project_interval(corners: &[Vec2; 4], axis: Vec2) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in corners {
        let v = c.dot(axis);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(2.0 * PI + 0.1) - 0.1).abs() < 1e-12);
        assert!((wrap_angle(-2.0 * PI - 0.1) + 0.1).abs() < 1e-12);
    }

    #[test]
    fn segment_intersection_cases() {
        let a = Vec2::new(-1.0, 0.0);
        let b = Vec2::new(1.0, 0.0);
        assert!(segments_intersect(Vec2::new(0.0, -1.0), Vec2::new(0.0, 1.0), a, b));
        assert!(segments_intersect(Vec2::new(1.0, -1.0), Vec2::new(1.0, 0.0), a, b));
        assert!(!segments_intersect(Vec2::new(0.0, 1.0), Vec2::new(0.0, 2.0), a, b));
        assert!(!segments_intersect(Vec2::new(-1.0, 1.0), Vec2::new(1.0, 1.0), a, b));
    }

    #[test]
    fn polyline_locate_and_point_at() {
        let pl = Polyline::new(vec![Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0), Vec2::new(10.0, 10.0)]).unwrap();
        assert_eq!(pl.length(), 20.0);
        assert_eq!(pl.point_at(15.0), Vec2::new(10.0, 5.0));
        assert_eq!(pl.point_at(-3.0), Vec2::new(0.0, 0.0));
        assert_eq!(pl.point_at(99.0), Vec2::new(10.0, 10.0));
        assert_eq!(pl.point_at(10.0), Vec2::new(10.0, 0.0));
    }

    #[test]
    fn polyline_skips_duplicate_points() {
        let pl = Polyline::new(vec![Vec2::new(0.0, 0.0), Vec2::new(0.0, 0.0), Vec2::new(4.0, 0.0)]).unwrap();
        let proj = pl.project(Vec2::new(2.0, 1.0));
        assert_eq!(proj.s, 2.0);
        assert_eq!(proj.signed_distance, 1.0);
        assert_eq!(pl.segment_heading(0), 0.0);
    }

    #[test]
    fn rect_contains_is_closed() {
        let r = OrientedRect::new(Vec2::ZERO, 0.0, 4.0, 2.0);
        assert!(r.contains(Vec2::new(2.0, 1.0)));
        assert!(!r.contains(Vec2::new(2.0 + 1e-9, 0.0)));
    }
}
