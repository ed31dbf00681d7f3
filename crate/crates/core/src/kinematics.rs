//! Forward and inverse kinematics of the omnidirectional velocity field
//! (OVF) built from mirror-symmetrical spiral rollers carrying free
//! wheels at ±45°, plus distance reconstruction from encoder revolutions
//! and the platform performance envelope.
//!
//! Each powered roller spins about Z; its surface velocity lies along X.
//! The free wheels cancel the component across their axis, so only the
//! axial component survives. The two roller families retain mutually
//! perpendicular components, and their sum composes a surface velocity
//! in any planar direction.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geom::Vec3;

/// All mechanical and electrical constants of the platform.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RigConfig {
    /// Roller diameter, meters.
    pub d_r: f64,
    /// Wheel angle on roller family 1, radians.
    pub theta_r1: f64,
    /// Wheel angle on roller family 2, radians.
    pub theta_r2: f64,
    /// Gear reduction ratio between motor shaft and roller.
    pub lambda: f64,
    /// Rated motor speed, rev/min.
    pub motor_rated_speed: f64,
    /// Rated torque per motor, N·m.
    pub motor_rated_torque: f64,
    /// Motors driving each roller family (two families total).
    pub motors_per_axis: u32,
    /// Total rotating moment of inertia, kg·m².
    pub i_rot: f64,
    /// Transmission efficiency, fraction of motor torque reaching the rollers.
    pub eta: f64,
    /// Friction torque referred to the roller side, N·m, total over both families.
    pub tau_fric: f64,
    /// Radius of the usable walking surface, meters.
    pub active_radius: f64,
    /// Controller deadzone radius, meters.
    pub d_th: f64,
    /// Proportional gain, 1/s.
    pub k_p: f64,
    /// Control period, seconds.
    pub control_period: f64,
}

impl Default for RigConfig {
    fn default() -> Self {
        RigConfig {
            d_r: 0.0342,
            theta_r1: std::f64::consts::FRAC_PI_4,
            theta_r2: -std::f64::consts::FRAC_PI_4,
            lambda: 3.0,
            motor_rated_speed: 3000.0,
            motor_rated_torque: 1.9,
            motors_per_axis: 1,
            i_rot: 0.007,
            eta: 0.88,
            tau_fric: 2.5,
            active_radius: 0.575,
            d_th: 0.08,
            k_p: 2.0,
            control_period: 0.05,
        }
    }
}

impl RigConfig {
    /// Roller radius, meters.
    pub fn roller_radius(&self) -> f64 {
        self.d_r / 2.0
    }

    /// Rated roller angular speed, rad/s (motor rating through the reduction).
    pub fn rated_roller_speed(&self) -> f64 {
        self.motor_rated_speed / self.lambda * std::f64::consts::TAU / 60.0
    }

    /// Rated motor shaft speed, rad/s.
    pub fn rated_shaft_speed(&self) -> f64 {
        self.motor_rated_speed * std::f64::consts::TAU / 60.0
    }

    /// Total drive torque referred to the roller side, N·m, both families.
    pub fn total_drive_torque(&self) -> f64 {
        2.0 * self.motors_per_axis as f64 * self.motor_rated_torque * self.lambda
    }

    /// Effective translating mass of the rotating parts, kg.
    pub fn effective_belt_mass(&self) -> f64 {
        let r = self.roller_radius();
        self.i_rot / (r * r)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.d_r <= 0.0 {
            return Err(Error::InvalidConfig("roller diameter must be positive".into()));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidConfig("transmission efficiency must be in (0, 1]".into()));
        }
        if self.lambda < 1.0 {
            return Err(Error::InvalidConfig("gear ratio must be >= 1".into()));
        }
        if ((self.theta_r1 - self.theta_r2).abs() - std::f64::consts::FRAC_PI_2).abs() > 1e-9 {
            return Err(Error::InvalidConfig(
                "wheel angles must be mirror-symmetric: |theta_r1 - theta_r2| = pi/2".into(),
            ));
        }
        if self.k_p <= 0.0 {
            return Err(Error::InvalidConfig("proportional gain must be positive".into()));
        }
        if self.d_th < 0.0 {
            return Err(Error::InvalidConfig("deadzone must be non-negative".into()));
        }
        if self.control_period <= 0.0 {
            return Err(Error::InvalidConfig("control period must be positive".into()));
        }
        if self.i_rot <= 0.0 || self.tau_fric < 0.0 {
            return Err(Error::InvalidConfig("inertia must be positive, friction non-negative".into()));
        }
        if self.active_radius <= 0.0 {
            return Err(Error::InvalidConfig("active radius must be positive".into()));
        }
        if self.motor_rated_speed <= 0.0 || self.motor_rated_torque <= 0.0 || self.motors_per_axis == 0 {
            return Err(Error::InvalidConfig("motor ratings must be positive".into()));
        }
        Ok(())
    }
}

/// Angular velocities of the two roller families. Rotation axes are
/// along Z, so the x and y components are always exactly 0.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RollerSpeeds {
    pub w_r1: Vec3,
    pub w_r2: Vec3,
}

impl RollerSpeeds {
    pub fn new(w1: f64, w2: f64) -> Self {
        RollerSpeeds { w_r1: Vec3::new(0.0, 0.0, w1), w_r2: Vec3::new(0.0, 0.0, w2) }
    }

    /// Scalar z components `(w1, w2)`.
    pub fn scalars(&self) -> (f64, f64) {
        (self.w_r1.z, self.w_r2.z)
    }
}

/// A desired OVF surface velocity: direction `theta_star` in the X-Z
/// plane and non-negative amplitude `alpha` in m/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityCommand {
    pub theta_star: f64,
    pub alpha: f64,
}

impl VelocityCommand {
    pub const ZERO: VelocityCommand = VelocityCommand { theta_star: 0.0, alpha: 0.0 };

    pub fn new(theta_star: f64, alpha: f64) -> Self {
        debug_assert!(alpha >= 0.0);
        VelocityCommand { theta_star, alpha }
    }

    /// Builds the command from a planar velocity vector. Zero vectors map
    /// to the zero command with `theta_star = 0`.
    pub fn from_vec(v: Vec3) -> Self {
        let alpha = v.norm_xz();
        if alpha == 0.0 {
            VelocityCommand::ZERO
        } else {
            VelocityCommand { theta_star: v.z.atan2(v.x), alpha }
        }
    }

    /// The equivalent planar vector `(α·cosθ*, 0, α·sinθ*)`.
    pub fn as_vec3(&self) -> Vec3 {
        Vec3::planar(self.alpha * self.theta_star.cos(), self.alpha * self.theta_star.sin())
    }
}

/// Linear surface velocity of a roller spinning at `w` about Z:
/// `w × (0, d_r/2, 0)`. The result lies along X.
pub fn surface_velocity(w: Vec3, cfg: &RigConfig) -> Result<Vec3, Error> {
    if w.x != 0.0 || w.y != 0.0 {
        return Err(Error::RollerAxisViolation);
    }
    Ok(w.cross(Vec3::new(0.0, cfg.d_r / 2.0, 0.0)))
}

/// Component of `v` retained by a free wheel whose axis sits at `theta`
/// in the X-Z plane: the projection `⟨u, v⟩·u` with `u = (cosθ, 0, sinθ)`.
pub fn retained_velocity(v: Vec3, theta: f64) -> Vec3 {
    let u = Vec3::planar(theta.cos(), theta.sin());
    u.scale(u.dot(v))
}

/// Composition of the two retained velocities. Torque from the
/// non-coincident action points is ignored.
pub fn compose_ovf(v1: Vec3, v2: Vec3) -> Vec3 {
    v1 + v2
}

/// Runs the full forward pipeline for a pair of roller speeds.
pub fn forward_ovf(speeds: &RollerSpeeds, cfg: &RigConfig) -> Result<Vec3, Error> {
    let v1 = retained_velocity(surface_velocity(speeds.w_r1, cfg)?, cfg.theta_r1);
    let v2 = retained_velocity(surface_velocity(speeds.w_r2, cfg)?, cfg.theta_r2);
    Ok(compose_ovf(v1, v2))
}

/// Roller angular velocities realizing a commanded surface velocity:
///
/// `w_ri = -(2α/d_r)·cosθ* - (2α/d_r)·sinθ*·tanθ_ri`
///
/// The forward pipeline applied to the result recovers the command.
pub fn inverse_kinematics(cmd: &VelocityCommand, cfg: &RigConfig) -> Result<RollerSpeeds, Error> {
    let t1 = cfg.theta_r1.tan();
    let t2 = cfg.theta_r2.tan();
    // tan of the f64 nearest ±π/2 is finite but ~1.6e16; both cases make
    // the wheel axis parallel to the roller axis and the system singular.
    if !t1.is_finite() || !t2.is_finite() || t1.abs() > 1e12 || t2.abs() > 1e12 {
        return Err(Error::DegenerateWheelAngle);
    }
    let v = cmd.as_vec3();
    let k = -2.0 / cfg.d_r;
    Ok(RollerSpeeds::new(k * (v.x + v.z * t1), k * (v.x + v.z * t2)))
}

/// OVF displacement reconstructed from motor encoder revolutions:
///
/// ```text
/// x = d_r·π·(n1·cos²θ_r1 + n2·cos²θ_r2) / λ
/// z = d_r·π·(n1·cosθ_r1·sinθ_r1 + n2·cosθ_r2·sinθ_r2) / λ
/// ```
///
/// Encoders count positive in the motor direction that produces positive
/// retained surface velocity along the wheel axis.
pub fn ovf_distance_from_revs(n1: f64, n2: f64, cfg: &RigConfig) -> Vec3 {
    let k = cfg.d_r * std::f64::consts::PI / cfg.lambda;
    let (c1, s1) = (cfg.theta_r1.cos(), cfg.theta_r1.sin());
    let (c2, s2) = (cfg.theta_r2.cos(), cfg.theta_r2.sin());
    Vec3::planar(
        k * (n1 * c1 * c1 + n2 * c2 * c2),
        k * (n1 * c1 * s1 + n2 * c2 * s2),
    )
}

/// Largest amplitude in direction `theta_star` for which neither roller
/// exceeds the rated speed. The envelope is a square with vertices on
/// the axes: a diagonal command loads one roller with both terms.
pub fn max_speed_envelope(cfg: &RigConfig, theta_star: f64) -> f64 {
    let w_max = cfg.rated_roller_speed();
    let t1 = cfg.theta_r1.tan();
    let t2 = cfg.theta_r2.tan();
    let (c, s) = (theta_star.cos(), theta_star.sin());
    // |w_ri| = (2α/d_r)·|c + s·tanθ_ri|; the binding roller decides.
    let g = (c + s * t1).abs().max((c + s * t2).abs());
    if g == 0.0 {
        return f64::INFINITY;
    }
    w_max * cfg.d_r / (2.0 * g)
}

/// Acceleration figures for the OVF surface, m/s².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccelEnvelope {
    /// Start from rest, friction opposing: `(η·τ_tot - τ_fric)·r / I_rot`.
    pub unloaded_start: f64,
    /// Braking, friction assisting: `(η·τ_tot + τ_fric)·r / I_rot`.
    pub unloaded_brake: f64,
    /// Accelerating the belt plus a user mass, friction ignored:
    /// `η·τ_tot/r / (I_rot/r² + m_user)`.
    pub loaded: f64,
}

/// Acceleration envelope for a given user mass.
pub fn acceleration_envelope(cfg: &RigConfig, user_mass: f64) -> AccelEnvelope {
    let r = cfg.roller_radius();
    let tau = cfg.total_drive_torque();
    let force = cfg.eta * tau / r;
    let fric_force = cfg.tau_fric / r;
    let m_eff = cfg.effective_belt_mass();
    AccelEnvelope {
        unloaded_start: (force - fric_force) / m_eff,
        unloaded_brake: (force + fric_force) / m_eff,
        loaded: force / (m_eff + user_mass),
    }
}
