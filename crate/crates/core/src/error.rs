use thiserror::Error;

/// Errors raised by the solver, its post-processing, and the I/O shell.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("Coulomb gauge violated: relative divergence {residual:.3e} exceeds {limit:.1e}")]
    GaugeViolation { residual: f64, limit: f64 },
    #[error("CFL guard violated: |dt| = {dt:.3e} exceeds limit {limit:.3e}")]
    Cfl { dt: f64, limit: f64 },
    #[error("non-finite values detected at t = {t}")]
    NonFinite { t: f64 },
    #[error("insufficient sampling: {0}")]
    InsufficientSampling(String),
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
