use thiserror::Error;

/// Errors surfaced by the engine.
///
/// Variants split into three families with distinct process exit codes in the
/// CLI: validation/parse problems (exit 2), exhausted resource caps or
/// timeouts (exit 3), and conditioning on evidence with zero probability
/// (exit 4).
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown variable {name:?}")]
    UnknownVariable { name: String },

    #[error("variable id {id} not defined in the world table")]
    UnknownVariableId { id: u32 },

    #[error("value {value:?} is not in the domain of variable {var:?}")]
    OutOfDomain { var: String, value: String },

    #[error("invalid world table: {0}")]
    InvalidWorldTable(String),

    #[error("unknown column {name:?}")]
    UnknownColumn { name: String },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("cannot compare {left} with {right}")]
    TypeMismatch { left: String, right: String },

    #[error("variable {name:?} does not occur in the ws-set")]
    VariableNotInSet { name: String },

    #[error("invalid ws-tree: {0}")]
    InvalidTree(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("{what} exceeded the resource cap of {cap}")]
    ResourceExhausted { what: &'static str, cap: u64 },

    #[error("computation timed out after {elapsed_ms} ms")]
    Timeout { elapsed_ms: u64 },

    #[error("unsatisfiable evidence: the condition holds in no world")]
    UnsatisfiableEvidence,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ResourceExhausted { .. } | Error::Timeout { .. } => 3,
            Error::UnsatisfiableEvidence => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
