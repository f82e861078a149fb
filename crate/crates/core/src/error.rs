use thiserror::Error;

/// Errors raised by the numerical and estimation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("quadrature did not converge: error estimate {achieved:.3e} above target {requested:.3e}")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    #[error("series tail bound not met within {k_max} terms")]
    SeriesNonConvergence { k_max: usize },

    #[error("mode index {index} outside truncation 0..={max}")]
    ModeOutOfRange { index: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("negative expected count {value} on channel {channel}")]
    NegativeExpectation { channel: usize, value: f64 },

    #[error("separation is not identifiable: {0}")]
    NonIdentifiable(String),

    #[error("spectral weight vanishes (g = {0:.3e})")]
    ZeroSignal(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("closed form `{formula}` deviates from its oracle by {deviation:.3e} (tolerance {tolerance:.1e})")]
    AdjudicationMismatch {
        formula: String,
        deviation: f64,
        tolerance: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
