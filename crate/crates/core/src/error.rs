use thiserror::Error;

/// Everything that can go wrong while building, solving or checking an update.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("need at least two outcomes, got {0}")]
    TooFewOutcomes(usize),
    #[error("label {index} is not finite")]
    NonFiniteLabel { index: usize },
    #[error("pseudo-count {index} must be finite and > 0, got {value}")]
    NonPositivePseudoCount { index: usize, value: f64 },
    #[error("moment target {target} must lie strictly inside ({min}, {max})")]
    MomentOutOfRange { target: f64, min: f64, max: f64 },
    #[error("all labels equal {label} but the moment target is {target}")]
    DegenerateLabels { label: f64, target: f64 },
    #[error("point is not on the simplex: {0}")]
    NotOnSimplex(String),
    #[error("theta[{index}] = 0 with negative exponent {exponent}")]
    OutOfSupport { index: usize, exponent: f64 },
    #[error("invalid series parameters a={a}, b={b}, t={t}: need b > a > 0 and finite t")]
    InvalidSeriesParams { a: f64, b: f64, t: f64 },
    #[error("series did not converge within {terms} terms")]
    NoConvergence { terms: usize },
    #[error("multiplier exceeded the cap {cap} (last bracket end {last})")]
    Diverged { cap: f64, last: f64 },
    #[error("root finder stalled at x={x} with residual {residual}")]
    Stalled { x: f64, residual: f64 },
    #[error("no observed counts, empirical frequencies are undefined")]
    NoData,
    #[error("no support on one side of the moment target {target}")]
    ZeroSupport { target: f64 },
    #[error("quadrature oracle supports k <= 4, got k = {0}")]
    DimensionTooHigh(usize),
    #[error("quadrature tolerance {requested} not met (estimated {achieved})")]
    ToleranceNotMet { requested: f64, achieved: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable machine-readable name used in reports and CLI diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::TooFewOutcomes(_) => "TooFewOutcomes",
            Error::NonFiniteLabel { .. } => "NonFiniteLabel",
            Error::NonPositivePseudoCount { .. } => "NonPositivePseudoCount",
            Error::MomentOutOfRange { .. } => "MomentOutOfRange",
            Error::DegenerateLabels { .. } => "DegenerateLabels",
            Error::NotOnSimplex(_) => "NotOnSimplex",
            Error::OutOfSupport { .. } => "OutOfSupport",
            Error::InvalidSeriesParams { .. } => "InvalidSeriesParams",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::Diverged { .. } => "Diverged",
            Error::Stalled { .. } => "Stalled",
            Error::NoData => "NoData",
            Error::ZeroSupport { .. } => "ZeroSupport",
            Error::DimensionTooHigh(_) => "DimensionTooHigh",
            Error::ToleranceNotMet { .. } => "ToleranceNotMet",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
