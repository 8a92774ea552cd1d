use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// every failure the pipeline can report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Error {
    /// syntax error at a 1-based line and column.
    Parse { line: usize, col: usize, msg: String },
    /// shape, scoping or typing error found by the checker.
    Check(String),
    /// missing or malformed input data.
    Input(String),
    /// a schedule that circuit generation cannot realize.
    Invalid(String),
    /// a vector of a let-bound traversal could not be derived.
    NonDerivable { site: usize, coord: Vec<usize> },
    /// lowering met a circuit it cannot express.
    Lower(String),
    /// the simulator rejected an instruction.
    Sim(String),
    /// malformed configuration or schedule text.
    Config(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse { line, col, msg } => write!(f, "parse error at {line}:{col}: {msg}"),
            Error::Check(m) => write!(f, "check error: {m}"),
            Error::Input(m) => write!(f, "input error: {m}"),
            Error::Invalid(m) => write!(f, "invalid schedule: {m}"),
            Error::NonDerivable { site, coord } => {
                write!(f, "invalid schedule: vector {coord:?} of site {site} is not derivable")
            }
            Error::Lower(m) => write!(f, "lowering error: {m}"),
            Error::Sim(m) => write!(f, "simulation error: {m}"),
            Error::Config(m) => write!(f, "config error: {m}"),
        }
    }
}

impl core::error::Error for Error {}

/// shorthand for building an [`Error::Invalid`].
pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
