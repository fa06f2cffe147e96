use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("record window [{start:e}, {end:e}] s does not cover the pulse support [{need_start:e}, {need_end:e}] s")]
    WindowTooShort {
        start: f64,
        end: f64,
        need_start: f64,
        need_end: f64,
    },

    #[error("pulse area {area:e} rad is too small relative to its envelope mass {mass:e} for an rms width")]
    ZeroArea { area: f64, mass: f64 },

    #[error("signed envelope gives a negative variance {variance:e} s²")]
    NegativeVariance { variance: f64 },

    #[error("dimension mismatch: expected {expected} detuning classes, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("integration produced a non-finite state at t = {t:e} s (step {step})")]
    NonFinite { t: f64, step: usize },

    #[error("configuration invariant violated: {0}")]
    Config(String),

    #[error("sweep point Θ_in = {theta_in} rad failed: {source}")]
    SweepPoint { theta_in: f64, source: Box<Error> },

    #[error("singular response: {0}")]
    Singular(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
