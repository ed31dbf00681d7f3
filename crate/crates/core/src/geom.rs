//! Minimal 3-vector and unit-quaternion algebra.
//!
//! Coordinate convention used everywhere in this crate: Y is vertical
//! ("up"), the platform surface is the X-Z plane. Quaternions are stored
//! as `(w, x, y, z)` and rotations are active (they rotate the vector).

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// A 3-vector of `f64` components. Positions are meters, velocities m/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    /// A vector in the walking plane (y = 0).
    pub const fn planar(x: f64, z: f64) -> Self {
        Vec3 { x, y: 0.0, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3 {
            x: self.y * other.z - self.z * other.y,
            y: self.z * other.x - self.x * other.z,
            z: self.x * other.y - self.y * other.x,
        }
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Euclidean norm of the X-Z components only.
    pub fn norm_xz(self) -> f64 {
        (self.x * self.x + self.z * self.z).sqrt()
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    /// Projects onto the walking plane: zeroes the Y component.
    pub fn project_xz(self) -> Vec3 {
        Vec3::planar(self.x, self.z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, rhs: f64) -> Vec3 {
        self.scale(rhs)
    }
}

/// A unit quaternion `(w, x, y, z)`. Constructors renormalize, so the
/// norm stays within 1e-9 of 1 after any product or inverse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitQuat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UnitQuat {
    pub const IDENTITY: UnitQuat = UnitQuat { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    /// Builds a unit quaternion from raw components, renormalizing.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self, Error> {
        if !(w.is_finite() && x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::NonFiniteOperand);
        }
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NonFiniteOperand);
        }
        Ok(UnitQuat { w: w / n, x: x / n, y: y / n, z: z / n })
    }

    /// Rotation of `angle` radians about the given axis (right-handed).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Self, Error> {
        if !axis.is_finite() || !angle.is_finite() {
            return Err(Error::NonFiniteOperand);
        }
        let half = angle * 0.5;
        let s = half.sin() / axis.norm();
        UnitQuat::new(half.cos(), axis.x * s, axis.y * s, axis.z * s)
    }

    /// Pure yaw rotation about +Y.
    pub fn yaw(angle: f64) -> Result<Self, Error> {
        UnitQuat::from_axis_angle(Vec3::new(0.0, 1.0, 0.0), angle)
    }

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Hamilton product `self ⊗ rhs`, renormalized.
    pub fn mul(self, rhs: UnitQuat) -> UnitQuat {
        let (w1, x1, y1, z1) = (self.w, self.x, self.y, self.z);
        let (w2, x2, y2, z2) = (rhs.w, rhs.x, rhs.y, rhs.z);
        let q = UnitQuat {
            w: w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            x: w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            y: w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            z: w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        };
        let n = q.norm();
        UnitQuat { w: q.w / n, x: q.x / n, y: q.y / n, z: q.z / n }
    }
}

/// Rotates `v` by `q` via the sandwich product `q * (0, v) * q⁻¹`.
///
/// Norm-preserving and linear in `v` to 1e-9.
pub fn quat_rotate(q: UnitQuat, v: Vec3) -> Result<Vec3, Error> {
    if !v.is_finite() || !q.norm().is_finite() {
        return Err(Error::NonFiniteOperand);
    }
    // Expanded sandwich product; q is unit-norm so no division is needed.
    let UnitQuat { w, x, y, z } = q;
    let tx = 2.0 * (y * v.z - z * v.y);
    let ty = 2.0 * (z * v.x - x * v.z);
    let tz = 2.0 * (x * v.y - y * v.x);
    Ok(Vec3::new(
        v.x + w * tx + (y * tz - z * ty),
        v.y + w * ty + (z * tx - x * tz),
        v.z + w * tz + (x * ty - y * tx),
    ))
}

/// Inverse rotation. For a unit quaternion this is the conjugate.
pub fn quat_inverse(q: UnitQuat) -> Result<UnitQuat, Error> {
    if !q.norm().is_finite() {
        return Err(Error::NonFiniteOperand);
    }
    Ok(UnitQuat { w: q.w, x: -q.x, y: -q.y, z: -q.z })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const SQRT2_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn assert_vec_eq(a: Vec3, b: Vec3, tol: f64) {
        assert_abs_diff_eq!(a.x, b.x, epsilon = tol);
        assert_abs_diff_eq!(a.y, b.y, epsilon = tol);
        assert_abs_diff_eq!(a.z, b.z, epsilon = tol);
    }

    #[test]
    fn identity_rotation_is_identity() {
        let v = Vec3::new(0.0, -0.1, 0.0);
        assert_eq!(quat_rotate(UnitQuat::IDENTITY, v).unwrap(), v);
    }

    #[test]
    fn quarter_turn_about_z_maps_x_to_y() {
        let q = UnitQuat::new(SQRT2_2, 0.0, 0.0, SQRT2_2).unwrap();
        let r = quat_rotate(q, Vec3::new(0.1, 0.0, 0.0)).unwrap();
        assert_vec_eq(r, Vec3::new(0.0, 0.1, 0.0), 1e-12);
    }

    #[test]
    fn rotation_about_axis_parallel_to_vector_is_identity() {
        let q = UnitQuat::new(SQRT2_2, 0.0, SQRT2_2, 0.0).unwrap();
        let v = Vec3::new(0.0, -0.1, 0.0);
        assert_vec_eq(quat_rotate(q, v).unwrap(), v, 1e-12);
    }

    #[test]
    fn inverse_of_identity_is_identity() {
        assert_eq!(quat_inverse(UnitQuat::IDENTITY).unwrap(), UnitQuat::IDENTITY);
    }

    #[test]
    fn inverse_is_conjugate() {
        let q = UnitQuat::new(SQRT2_2, 0.0, 0.0, SQRT2_2).unwrap();
        let inv = quat_inverse(q).unwrap();
        assert_abs_diff_eq!(inv.w, SQRT2_2, epsilon = 1e-15);
        assert_abs_diff_eq!(inv.z, -SQRT2_2, epsilon = 1e-15);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let q = UnitQuat::IDENTITY;
        assert!(matches!(
            quat_rotate(q, Vec3::new(f64::NAN, 0.0, 0.0)),
            Err(Error::NonFiniteOperand)
        ));
        assert!(UnitQuat::new(f64::INFINITY, 0.0, 0.0, 0.0).is_err());
        assert!(UnitQuat::new(0.0, 0.0, 0.0, 0.0).is_err());
    }

    fn arb_unit_quat() -> impl Strategy<Value = UnitQuat> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
            .prop_filter("non-degenerate", |(w, x, y, z)| {
                (w * w + x * x + y * y + z * z) > 1e-3
            })
            .prop_map(|(w, x, y, z)| UnitQuat::new(w, x, y, z).unwrap())
    }

    fn arb_vec() -> impl Strategy<Value = Vec3> {
        (-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn rotation_preserves_norm(q in arb_unit_quat(), v in arb_vec()) {
            let r = quat_rotate(q, v).unwrap();
            prop_assert!((r.norm() - v.norm()).abs() < 1e-9);
        }

        #[test]
        fn rotation_round_trips_through_inverse(q in arb_unit_quat()) {
            let v = Vec3::new(1.0, 2.0, 3.0);
            let there = quat_rotate(q, v).unwrap();
            let back = quat_rotate(quat_inverse(q).unwrap(), there).unwrap();
            prop_assert!((back - v).norm() < 1e-9);
        }

        #[test]
        fn rotation_is_linear(q in arb_unit_quat(), a in arb_vec(), b in arb_vec(), s in -3.0f64..3.0) {
            let lhs = quat_rotate(q, a.scale(s) + b).unwrap();
            let rhs = quat_rotate(q, a).unwrap().scale(s) + quat_rotate(q, b).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-9);
        }

        #[test]
        fn composition_matches_product(q1 in arb_unit_quat(), q2 in arb_unit_quat(), v in arb_vec()) {
            let via_product = quat_rotate(q1.mul(q2), v).unwrap();
            let via_stacked = quat_rotate(q1, quat_rotate(q2, v).unwrap()).unwrap();
            prop_assert!((via_product - via_stacked).norm() < 1e-9);
        }

        #[test]
        fn products_stay_unit_norm(q1 in arb_unit_quat(), q2 in arb_unit_quat()) {
            prop_assert!((q1.mul(q2).norm() - 1.0).abs() < 1e-9);
        }
    }
}
