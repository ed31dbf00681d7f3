//! Deterministic digital twin of a driven omnidirectional treadmill
//! built from mirror-symmetrical 45° spiral rollers.
//!
//! The crate models the full closed loop at desk scale: the
//! omnidirectional velocity field kinematics ([`kinematics`]), the
//! waist-tracker positioning ([`tracking`]), the proportional centering
//! controller ([`control`]), the ground-truth plant ([`plant`]), the
//! locomotion reconstruction with gains and VE mapping ([`locomotion`]),
//! a bit-exact Modbus-RTU drive bus ([`drivebus`]), and a two-rate
//! engine with latency injection ([`engine`]). Runs are deterministic:
//! the same scenario and seed always produce the same trace.

pub mod control;
pub mod drivebus;
pub mod engine;
pub mod error;
pub mod geom;
pub mod kinematics;
pub mod locomotion;
pub mod metrics;
pub mod plant;
pub mod scenario;
pub mod tracking;

pub use engine::{run, Stage, Trace, TraceRecord, PLANT_DT};
pub use error::Error;
pub use geom::{quat_inverse, quat_rotate, UnitQuat, Vec3};
pub use kinematics::{RigConfig, RollerSpeeds, VelocityCommand};
pub use scenario::{LatencyParams, ScenarioConfig};
