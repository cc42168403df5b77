//! Crate-wide error type.

use thiserror::Error;

use crate::hilbert::AtomLevel;
use crate::programs::ParseError;

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("basis label out of range: {0}")]
    LabelOutOfRange(String),

    #[error("layout mismatch between states")]
    LayoutMismatch,

    #[error("unknown atom `{0}`")]
    UnknownAtom(String),

    #[error("layout has no mode {0}")]
    UnknownMode(String),

    #[error("unknown subsystem index {0}")]
    UnknownSubsystem(usize),

    #[error("empty subsystem subset")]
    EmptySubset,

    #[error("negative angle {0}")]
    NegativeAngle(f64),

    #[error("negative duration {0}")]
    NegativeDuration(f64),

    #[error("zero-probability branch: atom `{atom}` in level {level} has probability {probability:e}")]
    ZeroProbabilityBranch {
        atom: String,
        level: AtomLevel,
        probability: f64,
    },

    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("expression error: {0}")]
    Expr(String),

    #[error("invalid program: {0}")]
    InvalidProgram(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
