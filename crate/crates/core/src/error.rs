use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("duplicate vertex label `{0}`")]
    DuplicateVertex(String),
    #[error("duplicate edge label `{0}`")]
    DuplicateEdge(String),
    #[error("edge `{0}` has no members")]
    EmptyEdge(String),
    #[error("edge `{edge}` references unknown vertex `{vertex}`")]
    UnknownMember { edge: String, vertex: String },
    #[error("edge `{edge}` lists vertex `{vertex}` more than once")]
    RepeatedMember { edge: String, vertex: String },
    #[error("hypergraph has no edges")]
    NoEdges,
    #[error("hypergraph is not full: {0:?} lie in no edge")]
    NotFull(Vec<String>),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("vertex `{0}` is isolated")]
    IsolatedVertex(String),
    #[error("self-loop at vertex `{0}`")]
    SelfLoop(String),
    #[error("adjacency matrix is not a symmetric 0/1 matrix with zero diagonal at ({0}, {1})")]
    BadAdjacency(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("ragged operator grid: {0}")]
    RaggedGrid(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("not a bijection: {0}")]
    NotBijective(String),
    #[error("vertex/edge maps do not intertwine the incidence matrices")]
    NotIntertwiner,
    #[error("question pair {0} has no winning answer")]
    NoWinningAnswer(String),
    #[error("relabeling does not preserve the rule at (x={x}, y={y}, a={a}, b={b})")]
    RuleNotPreserved { x: String, y: String, a: String, b: String },
    #[error("operator fiber equality `{family}` fails with residual {residual:.3e} at {location}")]
    FiberEquality { family: String, residual: f64, location: String },
    #[error("strategy is not a perfect strongly no-signalling strategy for the supergame: {0}")]
    NotPerfectSupergame(String),
    #[error("label `{0}` is not a side/kind/name question label")]
    BadLabel(String),
    #[error("{0} entries is too many to materialize densely")]
    TooLarge(usize),
    #[error("{location}: {message}")]
    Parse { location: String, message: String },
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}
