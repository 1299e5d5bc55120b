use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input violates a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unstable resonator: g1*g2 = {g_product:.6} ({condition})")]
    Unstable { g_product: f64, condition: &'static str },

    #[error("no solution in bracket [{lo}, {hi}]: residual {f_lo:.3e} at lower end, {f_hi:.3e} at upper end")]
    NoSolution { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("lossless cavity: finesse is unbounded")]
    LosslessCavity,

    #[error("no resonance in span")]
    NoResonanceInSpan,

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("fit did not converge after {iterations} iterations (last residual sum of squares {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("degenerate fit: {0}")]
    Degenerate(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("insufficient modes: need at least {needed}, found {found}")]
    InsufficientModes { needed: usize, found: usize },

    #[error("ambiguous mode ladder (consistency residual {residual:.3} of one spacing); candidates: {candidates}")]
    AmbiguousLadder { residual: f64, candidates: String },

    #[error("format error: {0}")]
    Format(String),

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
        Error::Format(e.to_string())
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
