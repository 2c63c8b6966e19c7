use thiserror::Error;

use crate::modes::Axis;

/// Failure modes shared by every layer of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("root refinement did not converge in [{lo}, {hi}]: {reason}")]
    NonConvergence { lo: f64, hi: f64, reason: String },

    #[error("symmetry class {0} is not defined for this geometry")]
    InvalidSymmetry(String),

    #[error("point ({}, {}, {}) lies outside the cell", .0[0], .0[1], .0[2])]
    OutOfDomain([f64; 3]),

    #[error("bases are defined on different cell geometries")]
    GeometryMismatch,

    #[error("probe axis {0:?} is not a valid beam direction for this cell")]
    AxisMismatch(Axis),

    #[error("spectrum half maximum is not bracketed by the frequency grid")]
    FlatSpectrum,

    #[error("propagation failed: {0}")]
    StiffnessFailure(String),

    #[error("log-linear decay fit rejected (R^2 = {r_squared:.5})")]
    FitFailure { r_squared: f64 },

    #[error("{segments} periodogram segments available, at least {required} required")]
    InsufficientSamples { segments: usize, required: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported basis format version {0}")]
    UnsupportedFormat(u32),

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
