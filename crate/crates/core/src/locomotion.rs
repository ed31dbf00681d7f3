//! Locomotion reconstruction: combines the OVF offset distance (from
//! motor telemetry) with the local remaining distance (from the tracker)
//! into the physical locomotion distance, applies gains, and maps the
//! result into virtual-environment locomotion.
//!
//! With matched gains the carry-back after a stop cancels exactly and
//! the virtual scene holds still; mismatched gains leak carry-back
//! motion into the scene.

use serde::{Deserialize, Serialize};

use crate::geom::Vec3;

/// Slip applied to the OVF velocity during accumulation. The default is
/// the no-slip identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SlipModel {
    Identity,
    /// Uniform scalar slip: the surface carries `factor` of the commanded
    /// velocity.
    Scalar { factor: f64 },
}

impl Default for SlipModel {
    fn default() -> Self {
        SlipModel::Identity
    }
}

impl SlipModel {
    pub fn apply(&self, v: Vec3) -> Vec3 {
        match self {
            SlipModel::Identity => v,
            SlipModel::Scalar { factor } => v.scale(*factor),
        }
    }
}

/// Mapping from physical to virtual-environment locomotion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VeMapping {
    /// 1:1 mapping; returns its input bitwise.
    Identity,
    UniformGain { gain: f64 },
    /// Right-handed rotation about +Y by `angle` radians.
    Rotation { angle: f64 },
    /// Code-level hook for mappings the data kinds cannot express.
    #[serde(skip)]
    Custom(fn(Vec3) -> Vec3),
}

impl Default for VeMapping {
    fn default() -> Self {
        VeMapping::Identity
    }
}

/// Accumulated locomotion signals for one run.
#[derive(Debug, Clone, Copy)]
pub struct LocomotionState {
    /// OVF offset distance, accumulated from motor telemetry.
    pub d_ovf: Vec3,
    /// Local remaining distance from the tracker.
    pub d_rm: Vec3,
    /// Reconstructed physical locomotion distance.
    pub d_pe: Vec3,
    /// Mapped virtual-environment locomotion distance.
    pub d_ve: Vec3,
    pub beta1: f64,
    pub beta2: f64,
}

impl LocomotionState {
    pub fn new(beta1: f64, beta2: f64) -> Self {
        LocomotionState {
            d_ovf: Vec3::ZERO,
            d_rm: Vec3::ZERO,
            d_pe: Vec3::ZERO,
            d_ve: Vec3::ZERO,
            beta1,
            beta2,
        }
    }

    /// Updates every accumulator from one tick's delivered measurements.
    pub fn update(&mut self, ovf_rate: Vec3, slip: &SlipModel, dt: f64, p_ug: Vec3, p_ref: Vec3, mapping: &VeMapping) {
        self.d_ovf = accumulate_ovf(ovf_rate, slip, dt, self.d_ovf);
        self.d_rm = remaining_distance(p_ug, p_ref);
        self.d_pe = physical_distance(self.d_ovf, self.d_rm, self.beta1, self.beta2);
        self.d_ve = map_to_ve(self.d_pe, mapping);
    }
}

/// Local remaining distance: the X-Z projection of `p_ug - p_ref`.
pub fn remaining_distance(p_ug: Vec3, p_ref: Vec3) -> Vec3 {
    (p_ug - p_ref).project_xz()
}

/// One integration step of the OVF offset distance: `acc + S_L·v·dt`.
pub fn accumulate_ovf(v_ovf: Vec3, slip: &SlipModel, dt: f64, acc: Vec3) -> Vec3 {
    acc + slip.apply(v_ovf).scale(dt)
}

/// Physical locomotion distance `-β1·D_ovf + β2·D_rm`. Matched unit
/// gains recover the plain sum decomposition.
pub fn physical_distance(d_ovf: Vec3, d_rm: Vec3, beta1: f64, beta2: f64) -> Vec3 {
    d_rm.scale(beta2) - d_ovf.scale(beta1)
}

/// Applies the VE mapping.
pub fn map_to_ve(d_pe: Vec3, mapping: &VeMapping) -> Vec3 {
    match mapping {
        VeMapping::Identity => d_pe,
        VeMapping::UniformGain { gain } => d_pe.scale(*gain),
        VeMapping::Rotation { angle } => {
            let (s, c) = angle.sin_cos();
            Vec3::new(d_pe.x * c + d_pe.z * s, d_pe.y, -d_pe.x * s + d_pe.z * c)
        }
        VeMapping::Custom(f) => f(d_pe),
    }
}
