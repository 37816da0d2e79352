use thiserror::Error;

/// Errors produced by the library. Each variant names the module that raised it
/// so CLI diagnostics can carry provenance.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("lattice: {0}")]
    Lattice(String),

    #[error("lattice: vertex count {count} exceeds cap {cap}")]
    CapExceeded { count: u128, cap: usize },

    #[error("lattice: {count} vertices unreachable from root {root}")]
    Unreachable { root: usize, count: usize },

    #[error("lattice: truncation too small: {0}")]
    TruncationTooSmall(String),

    #[error("lattice parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("treeify: {0}")]
    Treeify(String),

    #[error("transition: {0}")]
    Transition(String),

    #[error("faults: {0}")]
    Faults(String),

    #[error("engine: {0}")]
    Engine(String),

    #[error("analysis: {0}")]
    Analysis(String),

    #[error("infobound: {0}")]
    InfoBound(String),

    #[error("config: {path}: {msg}")]
    Config { path: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
