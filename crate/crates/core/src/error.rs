use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("eigenvector overlap tie for basis state {basis}: initialization too close to a balance point")]
    OverlapAmbiguity { basis: usize },

    #[error("time {t} ps outside schedule range [0, {total}] ps")]
    OutOfRange { t: f64, total: f64 },

    #[error("invalid input label `{0}` (expected one of 00, 10, 01, 11)")]
    InvalidLabel(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("time step {dt} ps too large: phase per step {phase:.4} rad exceeds 0.1 rad")]
    StepTooLarge { dt: f64, phase: f64 },

    #[error("invalid density matrix: {0}")]
    StateInvalid(String),

    #[error("fit diverged: {0}")]
    FitDiverged(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check(cond: bool, name: &'static str, message: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            message: message.into(),
        })
    }
}
