use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no interactions given")]
    EmptyInput,
    #[error("graph is empty after degree filtering (min_user_degree={min_user_degree}, min_item_degree={min_item_degree})")]
    EmptyAfterFiltering { min_user_degree: usize, min_item_degree: usize },
    #[error("edge ({user}, {item}) outside a {num_users}x{num_items} graph")]
    IndexOutOfRange { user: usize, item: usize, num_users: usize, num_items: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("node {index} is not a user vertex (graph has {num_users} users)")]
    NotAUser { index: usize, num_users: usize },
    #[error("walk length must be odd to end on item vertices, got {0}")]
    EvenWalkLength(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("positions span a degenerate range (all equal to {0})")]
    DegenerateRange(f64),
    #[error("erasure probability {value} at ({origin}, {dest}) is outside [0, 1)")]
    ErasureOutOfRange { origin: usize, dest: usize, value: f64 },
    #[error("missing ideological position for item {0}")]
    MissingPosition(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("objective became non-finite at epoch {0}")]
    NonFiniteObjective(usize),
    #[error("no users to evaluate")]
    NoEvaluatedUsers,
    #[error("empty sample")]
    EmptySample,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown {kind} '{name}'")]
    Unknown { kind: &'static str, name: String },
}
