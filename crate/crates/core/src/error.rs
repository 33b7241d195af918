use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point {x} outside tabulated range [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("{0} is not Hermitian")]
    NotHermitian(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("integration diverged after t = {last_valid_time}")]
    Diverged { last_valid_time: f64 },

    #[error("requested window [{t0}, {t1}] outside available span [{lo}, {hi}]")]
    Range { t0: f64, t1: f64, lo: f64, hi: f64 },

    #[error("boundary mass {mass:.3e} exceeds threshold at t = {time} (grid too small)")]
    Wraparound { time: f64, mass: f64 },

    #[error("caustic at t = {time}: width factor B is singular")]
    Caustic { time: f64 },

    #[error("state is not normalised (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("Hermite quadrature loses mass {loss:.3e} at order {order} (grid too small for truncation)")]
    HermiteTruncation { order: usize, loss: f64 },

    #[error("overflow guard tripped: exponent {exponent} too large")]
    Overflow { exponent: f64 },

    #[error("invariant violated at t = {time}: {what}")]
    Invariant { time: f64, what: String },

    #[error("config schema: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
