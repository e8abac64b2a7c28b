use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("genome full: no free {0} row")]
    GenomeFull(&'static str),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("corrupt {table} row {row}: partially NaN or non-integral marker")]
    CorruptRow { table: &'static str, row: usize },
    #[error("duplicate node key {0}")]
    DuplicateKey(u64),
    #[error("key not found: {0}")]
    KeyNotFound(String),
    #[error("node {0} is an input or output node and cannot be removed")]
    ProtectedNode(u64),
    #[error("duplicate connection {0}->{1}")]
    DuplicateConn(u64, u64),
    #[error("connection {0}->{1} references a missing node")]
    DanglingEndpoint(u64, u64),
    #[error("attribute index {index} out of range (attribute count {count})")]
    AttrOutOfRange { index: usize, count: usize },
    #[error("cycle detected: {}", format_cycle(.0))]
    CycleDetected(Vec<u64>),
    #[error("non-finite input at position {0}")]
    NonFiniteInput(usize),
    #[error("max aggregation over an empty input")]
    EmptyAggregation,
    #[error("limits too small: {0}")]
    LimitsTooSmall(String),
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("fitness {0} is not finite")]
    NonFiniteFitness(f64),
    #[error("non-finite cart-pole state")]
    NonFiniteState,
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unsupported document version {0}")]
    VersionUnsupported(u64),
    #[error("evaluation failed in generation {generation}, genome {genome}: {source}")]
    Evaluation {
        generation: usize,
        genome: usize,
        source: Box<Error>,
    },
    #[error("io: {0}")]
    Io(String),
}

/// Renders a cycle as `k1→k2→k1`.
pub fn format_cycle(keys: &[u64]) -> String {
    let mut parts: Vec<String> = keys.iter().map(|k| k.to_string()).collect();
    if let Some(first) = keys.first() {
        parts.push(first.to_string());
    }
    parts.join("→")
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
