//! Error type shared by all solver modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grids of the operands do not match")]
    GridMismatch,

    #[error("field contains non-finite values")]
    NonFinite,

    #[error("eigensolver did not converge after {restarts} restarts; best residuals {best:?}")]
    EigsNoConvergence { restarts: usize, best: Vec<f64> },

    #[error("empty spectrum")]
    EmptySpectrum,

    #[error("mode index {index} out of range (spectrum holds {len})")]
    ModeIndex { index: usize, len: usize },

    #[error("newton iteration failed: {0}")]
    Newton(String),

    #[error("continuation stalled: {0}")]
    Continuation(String),

    #[error("time evolution aborted at t = {t}: {reason}")]
    Evolution { t: f64, reason: String },

    #[error("winding contour crosses a zero of the field")]
    WindingZeroCrossing,

    #[error("ambiguous winding number: residual {0} exceeds 0.25")]
    WindingAmbiguous(f64),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
