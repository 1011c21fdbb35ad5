//! Kinematic bicycle ego vehicle with a PID speed loop.

use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, OrientedRect, Vec2};

/// Physics constants. Every field can be overridden from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    pub max_wheel_angle_deg: f64,
    pub wheel_rate_deg_per_s: f64,
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub accel_min: f64,
    pub accel_max: f64,
    pub integral_limit: f64,
    pub substeps: u32,
    pub ego_length: f64,
    pub ego_width: f64,
    pub wheelbase: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig {
            max_wheel_angle_deg: 80.0,
            wheel_rate_deg_per_s: 60.0,
            kp: 2.0,
            ki: 0.05,
            kd: 0.0,
            accel_min: -6.0,
            accel_max: 3.0,
            integral_limit: 2.0,
            substeps: 10,
            ego_length: 3.83,
            ego_width: 1.67,
            wheelbase: 2.41,
        }
    }
}

impl PhysicsConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: PhysicsConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.check()?;
        Ok(config)
    }

    pub fn check(&self) -> Result<()> {
        let positive = [
            ("max_wheel_angle_deg", self.max_wheel_angle_deg),
            ("wheel_rate_deg_per_s", self.wheel_rate_deg_per_s),
            ("accel_max", self.accel_max),
            ("ego_length", self.ego_length),
            ("ego_width", self.ego_width),
            ("wheelbase", self.wheelbase),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("`{key}` must be positive, got {v}")));
            }
        }
        if !(self.accel_min < 0.0) || self.max_wheel_angle_deg >= 90.0 || self.substeps == 0 {
            return Err(Error::Config(
                "need accel_min < 0, max_wheel_angle_deg < 90 and substeps ≥ 1".into(),
            ));
        }
        Ok(())
    }

    pub fn max_wheel_angle(&self) -> f64 {
        self.max_wheel_angle_deg.to_radians()
    }
}

/// Normalized steering and a speed set-point for the PID loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub steer: f64,
    pub target_speed: f64,
}

impl Action {
    pub fn new(steer: f64, target_speed: f64) -> Self {
        Action { steer, target_speed }
    }

    /// Errors on non-finite values, clamps out-of-range ones with a warning.
    pub fn sanitized(self) -> Result<Action> {
        if !self.steer.is_finite() || !self.target_speed.is_finite() {
            return Err(Error::Argument(format!(
                "non-finite action (steer {}, target_speed {})",
                self.steer, self.target_speed
            )));
        }
        let steer = self.steer.clamp(-1.0, 1.0);
        let target_speed = self.target_speed.max(0.0);
        if steer != self.steer || target_speed != self.target_speed {
            warn!(
                "action clamped: steer {} -> {steer}, target_speed {} -> {target_speed}",
                self.steer, self.target_speed
            );
        }
        Ok(Action { steer, target_speed })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PidMemory {
    pub integral: f64,
    pub previous_error: Option<f64>,
}

/// Ego pose at its footprint center, plus actuator and controller state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoState {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub speed: f64,
    pub wheel_angle: f64,
    pub length: f64,
    pub width: f64,
    pub wheelbase: f64,
    pub pid: PidMemory,
}

impl EgoState {
    pub fn new(x: f64, y: f64, yaw: f64, speed: f64, config: &PhysicsConfig) -> Self {
        EgoState {
            x,
            y,
            yaw: wrap_angle(yaw),
            speed: speed.max(0.0),
            wheel_angle: 0.0,
            length: config.ego_length,
            width: config.ego_width,
            wheelbase: config.wheelbase,
            pid: PidMemory::default(),
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn footprint(&self) -> OrientedRect {
        OrientedRect::new(self.position(), self.yaw, self.length, self.width)
    }
}

fn pid_acceleration(pid: &mut PidMemory, error: f64, dt: f64, config: &PhysicsConfig) -> f64 {
    let derivative = pid.previous_error.map_or(0.0, |e| (error - e) / dt);
    pid.previous_error = Some(error);
    let integral = (pid.integral + error * dt).clamp(-config.integral_limit, config.integral_limit);
    let raw = config.kp * error + config.ki * integral + config.kd * derivative;
    let accel = raw.clamp(config.accel_min, config.accel_max);
    // Conditional integration: the integrator only advances while the output is unsaturated.
    if accel == raw {
        pid.integral = integral;
    }
    accel
}

/// Advances the ego by `dt` seconds in `config.substeps` equal sub-steps.
///
/// The wheel angle slews toward `steer · max_wheel_angle` at the configured rate.
/// Each sub-step follows the exact circular arc of the kinematic bicycle
/// (yaw rate `v·tan(δ)/L`) for the distance covered under constant acceleration.
pub fn ego_step(state: &EgoState, action: Action, dt: f64, config: &PhysicsConfig) -> Result<EgoState> {
    let action = action.sanitized()?;
    let mut s = *state;
    let n = config.substeps;
    let h = dt / n as f64;
    let max_wheel = config.max_wheel_angle();
    let wheel_target = action.steer * max_wheel;
    let max_slew = config.wheel_rate_deg_per_s.to_radians() * h;

    for _ in 0..n {
        let slew = (wheel_target - s.wheel_angle).clamp(-max_slew, max_slew);
        s.wheel_angle = (s.wheel_angle + slew).clamp(-max_wheel, max_wheel);

        let accel = pid_acceleration(&mut s.pid, action.target_speed - s.speed, h, config);
        let v_end = s.speed + accel * h;
        let distance = if v_end >= 0.0 {
            (s.speed + v_end) * 0.5 * h
        } else {
            // Stops within the sub-step: no reverse.
            s.speed * s.speed / (-2.0 * accel)
        };
        s.speed = v_end.max(0.0);

        // Chord of the arc: length 2R·sin(dyaw/2) along the mid-arc heading.
        let dyaw = distance * s.wheel_angle.tan() / s.wheelbase;
        let half = 0.5 * dyaw;
        let chord = if half == 0.0 {
            distance
        } else {
            distance * half.sin() / half
        };
        let heading = s.yaw + half;
        s.x += chord * heading.cos();
        s.y += chord * heading.sin();
        s.yaw = wrap_angle(s.yaw + dyaw);
    }
    Ok(s)
}
