use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("L^p exponent must satisfy p >= 1 (got {0})")]
    InvalidExponent(f64),

    #[error("invalid kernel parameters: {0}")]
    InvalidKernel(String),

    #[error("relative velocity must be nonzero")]
    ZeroRelativeVelocity,

    #[error("scattering direction must be a unit vector (|sigma| = {0})")]
    NonUnitSigma(f64),

    #[error("distributions live on different grids")]
    GridMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "time step dt = {dt} exceeds the positivity limit dt <= eps/(8*mass) = {max_dt} \
         (delta <= eps/8 for unit mass)"
    )]
    StepRejected { dt: f64, max_dt: f64 },

    #[error("monitor breach at t = {t}: {what}")]
    MonitorBreach { t: f64, what: String },

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
