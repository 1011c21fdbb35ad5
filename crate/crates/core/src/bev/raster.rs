//! Pixel-center rasterization primitives on a single byte plane.
//!
//! Coordinates are continuous pixel coordinates `(row, col)`: pixel `(r, c)`
//! covers `[r, r+1) × [c, c+1)` and its center is `(r + 0.5, c + 0.5)`.

pub const ON: u8 = 255;

/// Row-major byte plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plane {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u8>,
}

impl Plane {
    pub fn new(rows: usize, cols: usize) -> Self {
        Plane {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn set(&mut self, r: i64, c: i64) {
        if r >= 0 && c >= 0 && (r as usize) < self.rows && (c as usize) < self.cols {
            self.data[r as usize * self.cols + c as usize] = ON;
        }
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.data[r * self.cols + c]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    /// Inclusive pixel index range whose centers may lie in `[lo, hi]`, clipped to `n`.
    fn span(lo: f64, hi: f64, n: usize) -> Option<(usize, usize)> {
        let first = (lo - 0.5).ceil().max(0.0);
        let last = (hi - 0.5).floor().min(n as f64 - 1.0);
        (first <= last).then_some((first as usize, last as usize))
    }

    /// Sets every pixel whose center lies inside the convex polygon (closed boundary).
    /// Vertices may be in either winding.
    pub fn fill_convex(&mut self, poly: &[(f64, f64)]) {
        if poly.len() < 3 {
            return;
        }
        let (mut rlo, mut rhi, mut clo, mut chi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(r, c) in poly {
            rlo = rlo.min(r);
            rhi = rhi.max(r);
            clo = clo.min(c);
            chi = chi.max(c);
        }
        let (Some((r0, r1)), Some((c0, c1))) = (Self::span(rlo, rhi, self.rows), Self::span(clo, chi, self.cols))
        else {
            return;
        };
        let n = poly.len();
        for r in r0..=r1 {
            let pr = r as f64 + 0.5;
            for c in c0..=c1 {
                let pc = c as f64 + 0.5;
                let (mut pos, mut neg) = (false, false);
                for i in 0..n {
                    let (ar, ac) = poly[i];
                    let (br, bc) = poly[(i + 1) % n];
                    let cross = (br - ar) * (pc - ac) - (bc - ac) * (pr - ar);
                    pos |= cross > 0.0;
                    neg |= cross < 0.0;
                }
                if !(pos && neg) {
                    self.data[r * self.cols + c] = ON;
                }
            }
        }
    }

    /// Sets every pixel whose center is within `radius` of the segment `a`–`b`.
    pub fn fill_capsule(&mut self, a: (f64, f64), b: (f64, f64), radius: f64) {
        let (Some((r0, r1)), Some((c0, c1))) = (
            Self::span(a.0.min(b.0) - radius, a.0.max(b.0) + radius, self.rows),
            Self::span(a.1.min(b.1) - radius, a.1.max(b.1) + radius, self.cols),
        ) else {
            return;
        };
        let (dr, dc) = (b.0 - a.0, b.1 - a.1);
        let len2 = dr * dr + dc * dc;
        let r2 = radius * radius;
        for r in r0..=r1 {
            let pr = r as f64 + 0.5;
            for c in c0..=c1 {
                let pc = c as f64 + 0.5;
                let u = if len2 > 0.0 {
                    (((pr - a.0) * dr + (pc - a.1) * dc) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let (er, ec) = (pr - (a.0 + u * dr), pc - (a.1 + u * dc));
                if er * er + ec * ec <= r2 {
                    self.data[r * self.cols + c] = ON;
                }
            }
        }
    }

    /// 1-pixel Bresenham stroke of the segment after clipping it to the plane.
    pub fn draw_line(&mut self, a: (f64, f64), b: (f64, f64)) {
        let Some((a, b)) = clip_segment(a, b, self.rows as f64, self.cols as f64) else {
            return;
        };
        let (mut r, mut c) = (a.0.floor() as i64, a.1.floor() as i64);
        let (r1, c1) = (b.0.floor() as i64, b.1.floor() as i64);
        let dr = (r1 - r).abs();
        let dc = -(c1 - c).abs();
        let sr = if r < r1 { 1 } else { -1 };
        let sc = if c < c1 { 1 } else { -1 };
        let mut err = dr + dc;
        loop {
            self.set(r, c);
            if r == r1 && c == c1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dc {
                err += dc;
                r += sr;
            }
            if e2 <= dr {
                err += dr;
                c += sc;
            }
        }
    }
}

/// Liang–Barsky clipping of `a`–`b` to `[0, rows) × [0, cols)`.
pub fn clip_segment(a: (f64, f64), b: (f64, f64), rows: f64, cols: f64) -> Option<((f64, f64), (f64, f64))> {
    // Keep clipped endpoints strictly inside so flooring stays in range.
    let eps = 1e-9;
    let (rmax, cmax) = (rows - eps, cols - eps);
    let (dr, dc) = (b.0 - a.0, b.1 - a.1);
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    for (p, q) in [(-dr, a.0), (dr, rmax - a.0), (-dc, a.1), (dc, cmax - a.1)] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
    }
    if t0 > t1 {
        return None;
    }
    Some(((a.0 + t0 * dr, a.1 + t0 * dc), (a.0 + t1 * dr, a.1 + t1 * dc)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_aligned_rectangle_counts_centers() {
        let mut p = Plane::new(20, 20);
        p.fill_convex(&[(2.0, 2.0), (2.0, 6.0), (10.0, 6.0), (10.0, 2.0)]);
        assert_eq!(p.count(), 8 * 4);
        assert_eq!(p.get(2, 2), ON);
        assert_eq!(p.get(10, 2), 0);
    }

    #[test]
    fn closed_boundary_through_centers() {
        let mut p = Plane::new(10, 10);
        p.fill_convex(&[(1.5, 1.5), (1.5, 3.5), (3.5, 3.5), (3.5, 1.5)]);
        assert_eq!(p.count(), 9);
    }

    #[test]
    fn capsule_is_a_disc_for_a_point() {
        let mut p = Plane::new(21, 21);
        p.fill_capsule((10.5, 10.5), (10.5, 10.5), 2.0);
        assert_eq!(p.count(), 13);
    }

    #[test]
    fn line_is_connected_and_clipped() {
        let mut p = Plane::new(10, 10);
        p.draw_line((-5.0, 0.5), (15.0, 0.5));
        assert_eq!(p.count(), 10);
        let mut q = Plane::new(10, 10);
        q.draw_line((0.5, 0.5), (9.5, 9.5));
        assert_eq!(q.count(), 10);
        let mut e = Plane::new(10, 10);
        e.draw_line((-5.0, -5.0), (-1.0, 20.0));
        assert_eq!(e.count(), 0);
    }
}
