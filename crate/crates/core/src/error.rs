use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid basis index (l={l}, m={m})")]
    InvalidIndex { l: i64, m: i64 },

    #[error("grid too small: {reason}")]
    GridTooSmall { reason: String },

    #[error("field has non-zero mean coefficient {mean:e}; inverse of Lambda is ill-posed")]
    NonZeroMean { mean: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state became non-finite at t={t}; try a smaller time step")]
    NonFiniteState { t: f64 },

    #[error("kernel truncation insufficient: exp(-lambda_L z) = {tail:e} exceeds floor {floor:e}")]
    TruncationInsufficient { tail: f64, floor: f64 },

    #[error("need at least {needed} points to fit, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("nothing to fit: all energies vanish")]
    NothingToFit,

    #[error("geodesic ball of radius {h} contains no grid nodes")]
    EmptyBall { h: f64 },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("zero denominator in isoperimetric ratio with positive numerator {numerator:e}")]
    ZeroDenominator { numerator: f64 },

    #[error("time window [{start}, {end}] not covered by trajectory [{t_min}, {t_max}]")]
    WindowExceeded {
        start: f64,
        end: f64,
        t_min: f64,
        t_max: f64,
    },

    #[error("snapshot cadence {cadence} exceeds h/8 = {limit} for scale h={h}")]
    CadenceViolation { cadence: f64, limit: f64, h: f64 },

    #[error("solver did not converge: residual {residual:e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
