use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("resolution {given} too small, need at least {required}")]
    Resolution { given: usize, required: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },

    #[error("unsupported dimension {0}, expected 1 or 2")]
    UnsupportedDim(usize),

    #[error("cutoff mismatch: {left} vs {right}")]
    CutoffMismatch { left: usize, right: usize },

    #[error("field is not real: {0}")]
    NotReal(String),

    #[error("exponent {exponent:.3} at mode {mode:?} exceeds the log-domain cap")]
    Overflow { mode: [i64; 2], exponent: f64 },

    #[error("field is not in the Gevrey class at radius {delta}: {reason}")]
    NotInClass { delta: f64, reason: String },

    #[error("field is identically zero")]
    ZeroField,

    #[error("solver diverged at t = {t}")]
    Diverged { t: f64 },

    #[error("solver fault: {0}")]
    Fault(String),

    #[error("effective vanishing: ball integral {0:e} below floor")]
    EffectiveVanishing(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),

    #[error("at t = {t}, seed = {seed}: {source}")]
    Tagged {
        t: f64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
