use thiserror::Error;

/// Errors raised anywhere in the solver suite.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("reaction term violates hypothesis (H): {0}")]
    HypothesisViolation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("compatible condition fails at theta = {theta}: [{g}, {h}] is not inside [{g0}, {h0}]")]
    CompatibleConditionViolation {
        theta: f64,
        g: f64,
        h: f64,
        g0: f64,
        h0: f64,
    },

    #[error("initial history out of range: {0}")]
    RangeViolation(String),

    #[error("no convergence: {0}")]
    ConvergenceFailure(String),

    #[error("complex root left the strip at tau = {tau} (alpha = {alpha}, beta = {beta})")]
    OmegaExit { tau: f64, alpha: f64, beta: f64 },

    #[error("relaxation did not reach tolerance within {steps} steps (defect {defect:e})")]
    NotConverged { steps: usize, defect: f64 },

    #[error("doubling the truncation length moved the boundary slope by {change:e} (L = {length})")]
    TruncationSuspect { length: f64, change: f64 },

    #[error("eta does not change sign on [{lo}, {hi}] (eta(lo) = {eta_lo:e}, eta(hi) = {eta_hi:e})")]
    BracketFailure {
        lo: f64,
        hi: f64,
        eta_lo: f64,
        eta_hi: f64,
    },

    #[error("unstable step at t = {t}: sup |w| jumped from {before:e} to {after:e}")]
    StabilityFailure { t: f64, before: f64, after: f64 },

    #[error("habitat nesting fails at t = {t}")]
    NestingViolation { t: f64 },

    #[error("trajectory window too short: need {needed} time units, have {available}")]
    WindowTooShort { needed: f64, available: f64 },

    #[error("run is not in the spreading regime")]
    NotSpreading,

    #[error("runs cannot be compared: {0}")]
    ConfigMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
