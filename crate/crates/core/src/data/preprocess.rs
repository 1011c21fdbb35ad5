//! Track preprocessing: resampling onto the 10 Hz grid, position smoothing,
//! reference-point remapping and heading derivation.

use serde::Serialize;

use super::tabular::ReferencePoint;
use super::{tick_time, TrackSample, VehicleTrack, GRID_DT, GRID_RATE};
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Vec2};

/// Displacements shorter than this keep the previous heading.
pub const MIN_HEADING_DISPLACEMENT: f64 = 0.01;

const GRID_EPS: f64 = 1e-9;

/// Recomputes every sample's yaw from its displacement to the next sample
/// (the last sample uses the preceding displacement).
pub fn derive_yaw(samples: &mut [TrackSample]) {
    let n = samples.len();
    if n < 2 {
        return;
    }
    let mut headings: Vec<Option<f64>> = vec![None; n];
    for (i, h) in headings.iter_mut().enumerate() {
        let (a, b) = if i + 1 < n { (i, i + 1) } else { (i - 1, i) };
        let d = Vec2::new(samples[b].x - samples[a].x, samples[b].y - samples[a].y);
        if d.norm() >= MIN_HEADING_DISPLACEMENT {
            *h = Some(wrap_angle(d.angle()));
        }
    }
    let Some(first_valid) = headings.iter().flatten().next().copied() else {
        return;
    };
    let mut prev = first_valid;
    for (s, h) in samples.iter_mut().zip(headings) {
        if let Some(h) = h {
            prev = h;
        }
        s.yaw = prev;
    }
}

fn interpolate(a: &TrackSample, b: &TrackSample, t: f64) -> TrackSample {
    let u = (t - a.t) / (b.t - a.t);
    let yaw = wrap_angle(a.yaw + wrap_angle(b.yaw - a.yaw) * u);
    TrackSample {
        t,
        x: a.x + (b.x - a.x) * u,
        y: a.y + (b.y - a.y) * u,
        yaw,
        speed: (a.speed + (b.speed - a.speed) * u).max(0.0),
        lane_id: if u < 0.5 { a.lane_id } else { b.lane_id },
    }
}

/// Resamples a track onto the canonical 0.1 s grid.
///
/// Positions and speed are interpolated linearly and yaw along the shorter arc.
/// Samples that already sit on a grid tick are copied unchanged, which makes the
/// operation idempotent.
pub fn resample_to_grid(track: &VehicleTrack, source_rate: f64) -> Result<VehicleTrack> {
    if !(source_rate >= GRID_RATE) {
        return Err(Error::Argument(format!(
            "source rate {source_rate} Hz is below the {GRID_RATE} Hz grid"
        )));
    }
    let too_short = |message: String| Error::TooShort {
        track: track.id,
        message,
    };
    let (Some(first), Some(last)) = (track.samples.first(), track.samples.last()) else {
        return Err(too_short("no samples".into()));
    };
    if last.t - first.t < GRID_DT - GRID_EPS {
        return Err(too_short(format!(
            "spans {:.3} s, shorter than one grid interval",
            last.t - first.t
        )));
    }

    let k_first = (first.t * GRID_RATE - 1e-6).ceil() as i64;
    let k_last = (last.t * GRID_RATE + 1e-6).floor() as i64;
    let mut out = Vec::with_capacity((k_last - k_first + 1).max(0) as usize);
    let mut j = 0usize;
    for k in k_first..=k_last {
        let t = tick_time(k);
        while j + 1 < track.samples.len() && track.samples[j + 1].t <= t + GRID_EPS {
            j += 1;
        }
        let a = &track.samples[j];
        if (a.t - t).abs() <= GRID_EPS {
            out.push(TrackSample { t, ..*a });
        } else if j + 1 < track.samples.len() && a.t < t {
            out.push(interpolate(a, &track.samples[j + 1], t));
        }
    }
    if out.len() < 2 {
        return Err(too_short(format!("{} grid sample(s) after resampling", out.len())));
    }
    Ok(VehicleTrack {
        samples: out,
        ..track.clone()
    })
}

/// Centered moving average of positions over `window` seconds, truncated at the
/// track ends. Yaw is re-derived from the smoothed displacements. A non-positive
/// window leaves the track unchanged.
pub fn smooth_positions(track: &VehicleTrack, window: f64) -> VehicleTrack {
    let n = track.samples.len();
    if window <= 0.0 || n < 2 {
        return track.clone();
    }
    let dt = (track.end_time() - track.start_time()) / (n - 1) as f64;
    let taps = ((window / dt).round() as usize).max(1);
    let half = taps / 2;

    let mut samples = track.samples.clone();
    for (i, s) in samples.iter_mut().enumerate() {
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(n - 1);
        let count = (hi - lo + 1) as f64;
        let (sx, sy) = track.samples[lo..=hi]
            .iter()
            .fold((0.0, 0.0), |(ax, ay), p| (ax + p.x, ay + p.y));
        s.x = sx / count;
        s.y = sy / count;
    }
    derive_yaw(&mut samples);
    VehicleTrack {
        samples,
        ..track.clone()
    }
}

/// Shifts every sample along its heading so positions refer to `to` instead of `from`.
/// `rear_axle_fraction` places the rear axle `fraction * length / 2` behind the center.
pub fn remap_reference_point(
    track: &VehicleTrack,
    from: ReferencePoint,
    to: ReferencePoint,
    rear_axle_fraction: f64,
) -> VehicleTrack {
    if from == to {
        return track.clone();
    }
    let shift = to.offset_from_center(track.length, rear_axle_fraction)
        - from.offset_from_center(track.length, rear_axle_fraction);
    let samples = track
        .samples
        .iter()
        .map(|s| {
            let (sin, cos) = s.yaw.sin_cos();
            TrackSample {
                x: s.x + shift * cos,
                y: s.y + shift * sin,
                ..*s
            }
        })
        .collect();
    VehicleTrack {
        samples,
        ..track.clone()
    }
}

/// Per-track sanity summary printed by `crts validate`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackReport {
    pub id: i64,
    pub samples: usize,
    pub duration: f64,
    pub on_grid: bool,
    pub max_speed_mismatch: f64,
    pub flagged_steps: usize,
    pub ok: bool,
}

/// Compares displacement-derived speed with the stored speed field.
pub fn validate_track(track: &VehicleTrack, tolerance: f64) -> TrackReport {
    let mut max_mismatch: f64 = 0.0;
    let mut flagged = 0;
    for w in track.samples.windows(2) {
        let dt = w[1].t - w[0].t;
        if dt <= 0.0 {
            flagged += 1;
            continue;
        }
        let v = Vec2::new(w[1].x - w[0].x, w[1].y - w[0].y).norm() / dt;
        let mismatch = (v - w[0].speed).abs();
        max_mismatch = max_mismatch.max(mismatch);
        if mismatch > tolerance {
            flagged += 1;
        }
    }
    let on_grid = track.is_on_grid();
    TrackReport {
        id: track.id,
        samples: track.samples.len(),
        duration: track.end_time() - track.start_time(),
        on_grid,
        max_speed_mismatch: max_mismatch,
        flagged_steps: flagged,
        ok: flagged == 0 && on_grid,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{grid_tick, VehicleClass};
    use std::f64::consts::FRAC_PI_2;

    fn track_from(points: &[(f64, f64, f64)], yaw: f64) -> VehicleTrack {
        VehicleTrack {
            id: 1,
            class: VehicleClass::Car,
            length: 4.0,
            width: 2.0,
            samples: points
                .iter()
                .map(|&(t, x, y)| TrackSample {
                    t,
                    x,
                    y,
                    yaw,
                    speed: 1.0,
                    lane_id: Some(1),
                })
                .collect(),
        }
    }

    #[test]
    fn downsample_30hz_second() {
        let pts: Vec<_> = (0..30).map(|i| (i as f64 / 30.0, i as f64 / 30.0, 0.0)).collect();
        let out = resample_to_grid(&track_from(&pts, 0.0), 30.0).unwrap();
        assert!((10..=11).contains(&out.samples.len()));
        assert!(out.is_on_grid());
    }

    #[test]
    fn linear_data_interpolates_exactly() {
        let pts: Vec<_> = (0..31).map(|i| (i as f64 / 30.0, i as f64 / 30.0, 0.0)).collect();
        let out = resample_to_grid(&track_from(&pts, 0.0), 30.0).unwrap();
        let s = out.samples.iter().find(|s| grid_tick(s.t) == 5).unwrap();
        assert_eq!(s.t, 0.5);
        assert!((s.x - 0.5).abs() < 1e-15);
    }

    #[test]
    fn on_grid_input_is_identity() {
        let pts: Vec<_> = (0..20).map(|i| (tick_time(i), i as f64 * 1.3, 0.5)).collect();
        let track = track_from(&pts, 0.2);
        assert_eq!(resample_to_grid(&track, 10.0).unwrap(), track);
    }

    #[test]
    fn resample_rejects_short_and_slow() {
        let short = track_from(&[(0.0, 0.0, 0.0), (0.05, 0.1, 0.0)], 0.0);
        assert!(matches!(resample_to_grid(&short, 30.0), Err(Error::TooShort { .. })));
        let ok = track_from(&[(0.0, 0.0, 0.0), (1.0, 0.1, 0.0)], 0.0);
        assert!(matches!(resample_to_grid(&ok, 5.0), Err(Error::Argument(_))));
    }

    #[test]
    fn yaw_interpolates_across_branch_cut() {
        let mut track = track_from(&[(0.0, 0.0, 0.0), (0.2, 0.0, 0.0)], 0.0);
        track.samples[0].yaw = 3.0;
        track.samples[1].yaw = -3.0;
        let out = resample_to_grid(&track, 10.0).unwrap();
        let mid = out.samples[1].yaw;
        assert!((mid.abs() - std::f64::consts::PI).abs() < 1e-9, "{mid}");
    }

    #[test]
    fn smoothing_zigzag_three_taps() {
        let pts: Vec<_> = [0.0, 1.0, 0.0, 1.0, 0.0]
            .iter()
            .enumerate()
            .map(|(i, &x)| (tick_time(i as i64), x, 0.0))
            .collect();
        let out = smooth_positions(&track_from(&pts, 0.0), 0.3);
        let xs: Vec<f64> = out.samples[1..4].iter().map(|s| s.x).collect();
        for (got, want) in xs.iter().zip([1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0]) {
            assert!((got - want).abs() < 1e-12, "{xs:?}");
        }
    }

    #[test]
    fn smoothing_constant_and_linear() {
        let constant: Vec<_> = (0..30).map(|i| (tick_time(i), 3.0, -2.0)).collect();
        let out = smooth_positions(&track_from(&constant, 0.0), 1.5);
        assert!(out.samples.iter().all(|s| s.x == 3.0 && s.y == -2.0));

        let linear: Vec<_> = (0..40)
            .map(|i| (tick_time(i), 1.5 * i as f64, 0.5 * i as f64))
            .collect();
        let track = track_from(&linear, 0.0);
        let out = smooth_positions(&track, 1.5);
        for i in 7..33 {
            assert!((out.samples[i].x - track.samples[i].x).abs() < 1e-9);
            assert!((out.samples[i].y - track.samples[i].y).abs() < 1e-9);
        }
        assert!((out.samples[20].yaw - (0.5f64).atan2(1.5)).abs() < 1e-9);
    }

    #[test]
    fn short_track_smooths_to_global_mean() {
        let pts = [(0.0, 0.0, 0.0), (0.1, 2.0, 0.0), (0.2, 4.0, 0.0)];
        let out = smooth_positions(&track_from(&pts, 0.0), 1.5);
        assert!(out.samples.iter().all(|s| (s.x - 2.0).abs() < 1e-12));
    }

    #[test]
    fn remap_front_bumper_to_center() {
        let track = track_from(&[(0.0, 10.0, 5.0), (0.1, 11.0, 5.0)], 0.0);
        let out = remap_reference_point(&track, ReferencePoint::FrontBumper, ReferencePoint::Center, 0.5);
        assert!((out.samples[0].x - 8.0).abs() < 1e-12);
        assert_eq!(out.samples[0].y, 5.0);

        let up = track_from(&[(0.0, 10.0, 5.0), (0.1, 10.0, 6.0)], FRAC_PI_2);
        let out = remap_reference_point(&up, ReferencePoint::FrontBumper, ReferencePoint::Center, 0.5);
        assert!((out.samples[0].y - 3.0).abs() < 1e-12);
        assert!((out.samples[0].x - 10.0).abs() < 1e-12);

        let same = remap_reference_point(&track, ReferencePoint::Center, ReferencePoint::Center, 0.5);
        assert_eq!(same, track);
    }

    #[test]
    fn remap_rear_axle_uses_fraction() {
        let track = track_from(&[(0.0, 0.0, 0.0), (0.1, 1.0, 0.0)], 0.0);
        let out = remap_reference_point(&track, ReferencePoint::RearAxle, ReferencePoint::Center, 0.6);
        assert!((out.samples[0].x - 0.6 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn derive_yaw_holds_heading_at_standstill() {
        let pts = [
            (0.0, 0.0, 0.0),
            (0.1, 0.0, 0.0),
            (0.2, 0.0, 1.0),
            (0.3, 0.0, 1.005),
            (0.4, -1.0, 1.005),
        ];
        let mut track = track_from(&pts, 9.0);
        derive_yaw(&mut track.samples);
        let yaws: Vec<f64> = track.samples.iter().map(|s| s.yaw).collect();
        assert!((yaws[0] - FRAC_PI_2).abs() < 1e-12, "{yaws:?}");
        assert!((yaws[1] - FRAC_PI_2).abs() < 1e-12);
        assert!((yaws[2] - FRAC_PI_2).abs() < 1e-12);
        assert!((yaws[3] - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn validator_flags_speed_mismatch() {
        let pts: Vec<_> = (0..10).map(|i| (tick_time(i), i as f64 * 0.1, 0.0)).collect();
        let report = validate_track(&track_from(&pts, 0.0), 2.0);
        assert!(report.ok);
        let fast: Vec<_> = (0..10).map(|i| (tick_time(i), i as f64 * 1.0, 0.0)).collect();
        let report = validate_track(&track_from(&fast, 0.0), 2.0);
        assert_eq!(report.flagged_steps, 9);
        assert!(!report.ok);
    }
}
