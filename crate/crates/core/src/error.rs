//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite operand")]
    NonFiniteOperand,
    #[error("roller axis violation")]
    RollerAxisViolation,
    #[error("degenerate wheel angle")]
    DegenerateWheelAngle,
    #[error("pose attitude invalid")]
    PoseAttitudeInvalid,
    #[error("insufficient motion")]
    InsufficientMotion,
    #[error("no stop event")]
    NoStopEvent,
    #[error("boundary fault at t={t}s: body left the active radius")]
    BoundaryFault { t: f64 },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}
