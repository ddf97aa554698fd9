use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NlsError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("field contains non-finite samples")]
    NonFinite,
    #[error("field is on the {found} side, expected {expected}")]
    WrongSide {
        expected: &'static str,
        found: &'static str,
    },
    #[error("grids do not match")]
    GridMismatch,
    #[error("solution blew up at t = {t}")]
    BlowUp { t: f64 },
    #[error("domain escape: tail mass fraction {fraction:e} exceeds {threshold:e}")]
    DomainEscape { fraction: f64, threshold: f64 },
    #[error("zero mode {magnitude:e} is not negligible for a negative-order derivative")]
    NonZeroMean { magnitude: f64 },
    #[error("grid of {0} points is too large for brute-force evaluation (max 128)")]
    GridTooLarge(usize),
    #[error("symbol is not separable")]
    NotSeparable,
    #[error("t = {t} is past the blow-up horizon {horizon}")]
    BeyondBlowup { t: f64, horizon: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

pub type Result<T> = std::result::Result<T, NlsError>;
