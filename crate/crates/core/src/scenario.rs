//! Scenario configuration: everything one simulation run needs, loadable
//! from a single JSON document. Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geom::Vec3;
use crate::kinematics::RigConfig;
use crate::locomotion::{SlipModel, VeMapping};
use crate::plant::{ProfileSegment, SwayParams, WalkerProfile};

/// Measurement and communication latency budget.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatencyParams {
    /// Positioning measurement latency, seconds.
    pub t_rm: f64,
    /// Motor measurement (bus transaction) latency, seconds.
    pub t_ovf: f64,
    /// Serial communication latency to the computing host, seconds.
    pub t_c: f64,
}

impl Default for LatencyParams {
    fn default() -> Self {
        LatencyParams { t_rm: 0.022, t_ovf: 0.008, t_c: 0.001 }
    }
}

impl LatencyParams {
    pub const ZERO: LatencyParams = LatencyParams { t_rm: 0.0, t_ovf: 0.0, t_c: 0.0 };

    /// Total measurement latency: the two measurements run in parallel,
    /// so the slower one decides.
    pub fn t_m(&self) -> f64 {
        self.t_rm.max(self.t_ovf)
    }

    /// Worst-case system latency between the world and the computed
    /// locomotion: `t_m + t_c`.
    pub fn t_s(&self) -> f64 {
        self.t_m() + self.t_c
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.t_rm < 0.0 || self.t_ovf < 0.0 || self.t_c < 0.0 {
            return Err(Error::InvalidConfig("latencies must be non-negative".into()));
        }
        Ok(())
    }
}

/// Tracker settings carried by a scenario. The measurement latency lives
/// in [`LatencyParams`] so the budget has a single source.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Body-center offset in the tracker frame, meters.
    pub p_utrl: Vec3,
    /// Position noise standard deviation, meters.
    pub noise_sigma: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig { p_utrl: Vec3::new(0.0, -0.1, 0.0), noise_sigma: 0.0 }
    }
}

/// Walker settings: intent profile, start position, optional sway.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkerConfig {
    pub profile: Vec<ProfileSegment>,
    pub sway: Option<SwayParams>,
    /// Body-center height above the surface, meters.
    pub center_height: f64,
    /// Start position in the X-Z plane, meters from the platform center.
    pub start: Vec3,
}

impl Default for WalkerConfig {
    fn default() -> Self {
        WalkerConfig {
            profile: Vec::new(),
            sway: None,
            center_height: 1.0,
            start: Vec3::ZERO,
        }
    }
}

/// Controller selection and parameters. `K_p` and `D_th` live in the rig
/// config; this chooses the law and its acceleration limit.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControllerConfig {
    /// The proportional deadzone law.
    Proportional {
        /// Surface acceleration limit sent to the drives, m/s².
        accel_limit: f64,
    },
    /// Open-loop command schedule (acceleration experiments).
    Scripted {
        schedule: Vec<crate::control::ScheduleEntry>,
        accel_limit: f64,
    },
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig::Proportional { accel_limit: 12.0 }
    }
}

impl ControllerConfig {
    pub fn accel_limit(&self) -> f64 {
        match self {
            ControllerConfig::Proportional { accel_limit } => *accel_limit,
            ControllerConfig::Scripted { accel_limit, .. } => *accel_limit,
        }
    }
}

/// Locomotion gains applied in the physical-distance reconstruction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Gains {
    pub beta1: f64,
    pub beta2: f64,
}

impl Default for Gains {
    fn default() -> Self {
        Gains { beta1: 1.0, beta2: 1.0 }
    }
}

/// A complete, validated description of one simulation run.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub rig: RigConfig,
    pub tracker: TrackerConfig,
    pub latency: LatencyParams,
    pub walker: WalkerConfig,
    pub controller: ControllerConfig,
    pub gains: Gains,
    pub slip: SlipModel,
    pub ve_mapping: VeMapping,
    /// Reference point the controller centers on, X-Z plane.
    pub p_ref: Vec3,
    /// Run length, seconds.
    pub duration: f64,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Builds the walker profile, revalidating its segments.
    pub fn build_profile(&self) -> Result<WalkerProfile, Error> {
        WalkerProfile::new(self.walker.profile.clone(), self.walker.sway)
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.rig.validate()?;
        self.latency.validate()?;
        if self.tracker.noise_sigma < 0.0 {
            return Err(Error::InvalidConfig("tracker noise must be non-negative".into()));
        }
        if self.duration < 0.0 || !self.duration.is_finite() {
            return Err(Error::InvalidConfig("duration must be finite and non-negative".into()));
        }
        if self.p_ref.y != 0.0 {
            return Err(Error::InvalidConfig("reference point must lie in the X-Z plane".into()));
        }
        if self.walker.start.y != 0.0 {
            return Err(Error::InvalidConfig("start position must lie in the X-Z plane".into()));
        }
        if self.walker.center_height <= 0.0 {
            return Err(Error::InvalidConfig("center height must be positive".into()));
        }
        if self.controller.accel_limit() <= 0.0 {
            return Err(Error::InvalidConfig("acceleration limit must be positive".into()));
        }
        if let SlipModel::Scalar { factor } = self.slip {
            if !(factor.is_finite() && factor > 0.0) {
                return Err(Error::InvalidConfig("slip factor must be positive".into()));
            }
        }
        match self.gains {
            Gains { beta1, beta2 } if beta1.is_finite() && beta2.is_finite() => {}
            _ => return Err(Error::InvalidConfig("gains must be finite".into())),
        }
        self.build_profile()?;
        Ok(())
    }
}
