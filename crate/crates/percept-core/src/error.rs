//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
///
/// Variants are named after the contract they enforce; the `Display` form is a
/// single line suitable for CLI diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum Error {
    /// The edge set admits no topological order. The payload is one witness
    /// cycle, closed (first node repeated last).
    #[error("cycle detected: {}", .cycle.join(" -> "))]
    CycleError { cycle: Vec<String> },

    /// A node name was declared more than once.
    #[error("duplicate node declaration: {name:?}")]
    DuplicateNode { name: String },

    /// An edge endpoint does not refer to a declared node.
    #[error("edge endpoint {name:?} is not a declared node")]
    UnknownEndpoint { name: String },

    /// A query referenced a node outside the graph.
    #[error("unknown node: {name:?}")]
    UnknownNode { name: String },

    /// Node sets passed to a separation query are not pairwise disjoint.
    #[error("node sets overlap on {name:?}")]
    OverlappingSets { name: String },

    /// A covariance matrix is singular where an inverse or density is needed.
    #[error("singular covariance matrix")]
    SingularCovariance,

    /// The same variable was assigned twice in one intervention.
    #[error("duplicate intervention target: {name:?}")]
    DuplicateTarget { name: String },

    /// A value that must be finite was NaN or infinite.
    #[error("non-finite value for {context}")]
    NonFiniteValue { context: String },

    /// An intervention targets a variable the model does not contain.
    #[error("unknown intervention target: {name:?}")]
    UnknownTarget { name: String },

    /// Two distributions do not range over the same ordered variable list.
    #[error("variable lists differ: [{}] vs [{}]", .left.join(", "), .right.join(", "))]
    VariableMismatch {
        left: Vec<String>,
        right: Vec<String>,
    },

    /// A variable name was not found in a distribution.
    #[error("unknown variable: {name:?}")]
    UnknownVariable { name: String },

    /// A vector or matrix has the wrong size.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An estimator needs more rows than the sample provides.
    #[error("too few rows: {n}")]
    TooFewRows { n: usize },

    /// A document does not match the expected structure.
    #[error("schema error at {path}: {reason}")]
    SchemaError { path: String, reason: String },

    /// A structurally well-formed input violates a semantic rule.
    #[error("validation error: {reason}")]
    ValidationError { reason: String },

    /// A descriptor-level operation hit a variable with an empty descriptor set.
    #[error("variable {variable:?} has no descriptors")]
    MissingDescriptors { variable: String },

    /// Two receivers share no variables, so no comparison is possible.
    #[error("receivers share no variables")]
    NoSharedVariables,

    /// Poset matching produced no common interventions.
    #[error("no interventions matched between the two posets")]
    EmptyMatchedSet,

    /// A probability argument fell outside [0, 1].
    #[error("probability {name} = {value} is outside [0, 1]")]
    OutOfRangeProbability { name: String, value: f64 },
}

impl Error {
    /// Shorthand for a [`Error::ValidationError`].
    pub fn validation(reason: impl Into<String>) -> Self {
        Error::ValidationError {
            reason: reason.into(),
        }
    }
}
