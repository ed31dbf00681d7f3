//! Ground-truth physics: the walker's volitional motion, the motor and
//! roller dynamics (torque, slew, friction), and the no-slip coupling
//! that moves the body in the world.
//!
//! The walker is kinematic: a velocity source, not a force model. Under
//! the no-slip assumption the body's world velocity is the sum of the
//! intended velocity and the OVF surface velocity.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geom::Vec3;
use crate::kinematics::{acceleration_envelope, forward_ovf, RigConfig, RollerSpeeds};

/// One constant-target stretch of volitional walking.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSegment {
    /// Segment length, seconds (ramp time included).
    pub duration: f64,
    /// Target velocity in the X-Z plane, m/s.
    pub target: Vec3,
    /// Volitional acceleration used to reach the target, m/s².
    pub ramp: f64,
}

/// Second-order body sway about the ideal position, driven by OVF
/// acceleration through the center-of-gravity lever arm. A qualitative
/// hook; disabled by default.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwayParams {
    pub natural_freq_hz: f64,
    pub damping_ratio: f64,
    pub cog_height: f64,
}

impl Default for SwayParams {
    fn default() -> Self {
        SwayParams { natural_freq_hz: 1.5, damping_ratio: 0.3, cog_height: 1.0 }
    }
}

/// Piecewise-trapezoidal walker intent: within each segment the velocity
/// ramps linearly toward the target, then holds. After the final segment
/// the last velocity is held.
#[derive(Debug, Clone)]
pub struct WalkerProfile {
    segments: Vec<ProfileSegment>,
    pub sway: Option<SwayParams>,
    /// Velocity phases: `v(t) = v0 + a·(t - t0)` on `[t0, t1)`.
    phases: Vec<Phase>,
    total_duration: f64,
}

#[derive(Debug, Clone, Copy)]
struct Phase {
    t0: f64,
    v0: Vec3,
    a: Vec3,
    d0: Vec3,
}

impl WalkerProfile {
    pub fn new(segments: Vec<ProfileSegment>, sway: Option<SwayParams>) -> Result<Self, Error> {
        for s in &segments {
            if s.ramp <= 0.0 {
                return Err(Error::InvalidConfig("profile ramp must be positive".into()));
            }
            if s.duration < 0.0 {
                return Err(Error::InvalidConfig("profile duration must be non-negative".into()));
            }
            if s.target.y != 0.0 {
                return Err(Error::InvalidConfig("profile targets must lie in the X-Z plane".into()));
            }
            if !s.target.is_finite() {
                return Err(Error::InvalidConfig("profile targets must be finite".into()));
            }
        }
        let mut phases = Vec::new();
        let (mut t, mut v, mut d) = (0.0, Vec3::ZERO, Vec3::ZERO);
        for s in &segments {
            let dv = s.target - v;
            let ramp_time = dv.norm() / s.ramp;
            let t_ramp = ramp_time.min(s.duration);
            if t_ramp > 0.0 {
                let a = dv.scale(1.0 / ramp_time); // |a| = ramp
                phases.push(Phase { t0: t, v0: v, a, d0: d });
                d = d + v.scale(t_ramp) + a.scale(0.5 * t_ramp * t_ramp);
                v = v + a.scale(t_ramp);
                t += t_ramp;
            }
            let t_hold = s.duration - t_ramp;
            if t_hold > 0.0 {
                phases.push(Phase { t0: t, v0: v, a: Vec3::ZERO, d0: d });
                d = d + v.scale(t_hold);
                t += t_hold;
            }
        }
        // Terminal hold.
        phases.push(Phase { t0: t, v0: v, a: Vec3::ZERO, d0: d });
        Ok(WalkerProfile { segments, sway, phases, total_duration: t })
    }

    /// Intent that never moves.
    pub fn stationary() -> Self {
        WalkerProfile::new(Vec::new(), None).expect("empty profile is valid")
    }

    pub fn segments(&self) -> &[ProfileSegment] {
        &self.segments
    }

    /// Sum of segment durations, seconds.
    pub fn total_duration(&self) -> f64 {
        self.total_duration
    }

    fn phase_at(&self, t: f64) -> &Phase {
        let idx = self.phases.partition_point(|p| p.t0 <= t);
        &self.phases[idx.saturating_sub(1)]
    }

    /// Intended velocity at time `t` (continuous in `t`).
    pub fn velocity_at(&self, t: f64) -> Vec3 {
        if t <= 0.0 {
            return self.phases[0].v0;
        }
        let p = self.phase_at(t);
        p.v0 + p.a.scale(t - p.t0)
    }

    /// Cumulative intended distance `∫₀ᵗ v dt`, exact closed form.
    pub fn distance_at(&self, t: f64) -> Vec3 {
        if t <= 0.0 {
            return Vec3::ZERO;
        }
        let p = self.phase_at(t);
        let dt = t - p.t0;
        p.d0 + p.v0.scale(dt) + p.a.scale(0.5 * dt * dt)
    }
}

/// Intended velocity at time `t` under the profile's trapezoidal law.
pub fn intended_velocity(profile: &WalkerProfile, t: f64) -> Vec3 {
    profile.velocity_at(t)
}

/// One servo motor with its roller family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorState {
    /// Shaft speed, rad/s, in the roller +Z spin convention.
    pub shaft_speed: f64,
    /// Cumulative encoder revolutions. The encoder counts positive in the
    /// positive-feed direction, opposite the +Z shaft spin.
    pub revolutions: f64,
    /// Latest commanded shaft speed, rad/s.
    pub commanded_speed: f64,
    /// Drive acceleration limit at the shaft, rad/s².
    pub accel_limit: f64,
}

impl MotorState {
    pub fn at_rest(accel_limit: f64) -> Self {
        MotorState { shaft_speed: 0.0, revolutions: 0.0, commanded_speed: 0.0, accel_limit }
    }
}

/// Steps both motors toward commanded shaft speeds for `dt` seconds.
///
/// The realized acceleration is the smaller of the drive slew limit and
/// the torque-feasible acceleration; friction opposes motion, so it
/// subtracts when speeding up and adds when braking. Revolutions
/// integrate the (trapezoidal) speed exactly.
pub fn step_motors(motors: &mut [MotorState; 2], commanded: &RollerSpeeds, cfg: &RigConfig, dt: f64) {
    let env = acceleration_envelope(cfg, 0.0);
    let to_shaft = cfg.lambda / cfg.roller_radius();
    let start_accel = (env.unloaded_start * to_shaft).max(0.0);
    let brake_accel = (env.unloaded_brake * to_shaft).max(0.0);
    let rated = cfg.rated_shaft_speed();
    let (c1, c2) = commanded.scalars();
    for (m, cmd) in motors.iter_mut().zip([c1, c2]) {
        let target = cmd.clamp(-rated, rated);
        m.commanded_speed = target;
        let speeding_up =
            m.shaft_speed == 0.0 || (target - m.shaft_speed).signum() == m.shaft_speed.signum();
        let a = if speeding_up { start_accel } else { brake_accel }.min(m.accel_limit);
        let dv = (target - m.shaft_speed).clamp(-a * dt, a * dt);
        let next = m.shaft_speed + dv;
        m.revolutions -= (m.shaft_speed + next) * 0.5 * dt / std::f64::consts::TAU;
        m.shaft_speed = next;
    }
}

/// Sway oscillator state (planar deflection about the ideal position).
#[derive(Debug, Clone, Copy, Default)]
pub struct SwayState {
    pub offset: Vec3,
    pub velocity: Vec3,
}

/// Ground-truth world state stepped at the plant rate.
#[derive(Debug, Clone)]
pub struct PlantState {
    /// Body-center world position; Y stays at the walking-plane height.
    pub body: Vec3,
    pub motors: [MotorState; 2],
    pub sway: SwayState,
    pub t: f64,
}

impl PlantState {
    pub fn new(start: Vec3, accel_limit_shaft: f64) -> Self {
        PlantState {
            body: start,
            motors: [MotorState::at_rest(accel_limit_shaft), MotorState::at_rest(accel_limit_shaft)],
            sway: SwayState::default(),
            t: 0.0,
        }
    }

    /// OVF surface velocity realized by the current roller speeds.
    pub fn ovf_velocity(&self, cfg: &RigConfig) -> Vec3 {
        let rollers = RollerSpeeds::new(
            self.motors[0].shaft_speed / cfg.lambda,
            self.motors[1].shaft_speed / cfg.lambda,
        );
        forward_ovf(&rollers, cfg).expect("roller axes are well-formed")
    }

    /// Advances motors and body by `dt` under the no-slip coupling:
    /// world velocity = intended velocity + OVF surface velocity.
    /// Returns the boundary fault time if the body leaves the active
    /// radius.
    pub fn step(
        &mut self,
        profile: &WalkerProfile,
        commanded: &RollerSpeeds,
        cfg: &RigConfig,
        dt: f64,
    ) -> Result<(), Error> {
        let v_ovf_0 = self.ovf_velocity(cfg);
        step_motors(&mut self.motors, commanded, cfg, dt);
        let v_ovf_1 = self.ovf_velocity(cfg);
        let v_int_0 = profile.velocity_at(self.t);
        let v_int_1 = profile.velocity_at(self.t + dt);
        // Trapezoid; exact while both velocities are linear in the step.
        let delta = (v_int_0 + v_ovf_0 + v_int_1 + v_ovf_1).scale(0.5 * dt);
        self.body = self.body + delta;

        if let Some(sway) = &profile.sway {
            let omega = std::f64::consts::TAU * sway.natural_freq_hz;
            let zeta = sway.damping_ratio;
            let a_ovf = (v_ovf_1 - v_ovf_0).scale(1.0 / dt);
            // Static deflection scale h/g; semi-implicit Euler is stable
            // at the plant rate for the default parameters.
            let drive = a_ovf.scale(-sway.cog_height / 9.81);
            let accel = (drive - self.sway.offset).scale(omega * omega)
                - self.sway.velocity.scale(2.0 * zeta * omega);
            self.sway.velocity = self.sway.velocity + accel.scale(dt);
            self.sway.offset = self.sway.offset + self.sway.velocity.scale(dt);
        }

        self.t += dt;
        let effective = self.effective_body();
        if effective.norm_xz() > cfg.active_radius {
            return Err(Error::BoundaryFault { t: self.t });
        }
        Ok(())
    }

    /// Body position including the sway perturbation.
    pub fn effective_body(&self) -> Vec3 {
        self.body + self.sway.offset.project_xz()
    }
}
