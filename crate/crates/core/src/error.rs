use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid range: left endpoint {a} must be smaller than right endpoint {b}")]
    InvalidRange { a: f64, b: f64 },

    #[error("invalid count: {what} must be at least 1")]
    InvalidCount { what: &'static str },

    #[error("data domain endpoint {x} does not coincide with a mesh vertex")]
    MisalignedDomain { x: f64 },

    #[error("data domain is empty")]
    EmptyDataDomain,

    #[error("unsupported order {order} for {what}")]
    UnsupportedOrder { what: &'static str, order: usize },

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("penalty parameter must be positive, got {0}")]
    NonpositivePenalty(f64),

    #[error("layout mismatch: expected length {expected}, got {actual}")]
    LayoutMismatch { expected: usize, actual: usize },

    #[error("dense assembly refused: {ndof} degrees of freedom exceed the limit of {limit}")]
    TooLarge { ndof: usize, limit: usize },

    #[error("singular slab system on slab {slab} ({which})")]
    SingularSlabSystem { slab: usize, which: &'static str },

    #[error(
        "decoupled forward-backward preconditioner requires equal primal and dual orders, got (k, q) = ({k}, {q}) and (k*, q*) = ({kstar}, {qstar})"
    )]
    OrderMismatch {
        k: usize,
        q: usize,
        kstar: usize,
        qstar: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
