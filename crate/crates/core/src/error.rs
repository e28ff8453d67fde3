use thiserror::Error;

/// Errors raised by the analysis kernel.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("variable `{0}` does not belong to the chart")]
    ChartMismatch(String),

    #[error("point does not assign `{0}`")]
    IncompletePoint(String),

    #[error("empty locus: {0}")]
    EmptyLocus(String),

    #[error("point is not on the locus: equation #{equation} evaluates to {value}")]
    NotOnLocus { equation: usize, value: String },

    #[error("unsupported form: {0}")]
    UnsupportedForm(String),

    #[error("source/target mismatch: target of the first jet is {target}, source of the second is {next_source}")]
    SourceTargetMismatch { target: String, next_source: String },

    #[error("jet order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    #[error("inverse verification failed: {0}")]
    InverseCheck(String),

    #[error("singular point: {0}")]
    SingularPoint(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{0}")]
    Parse(#[from] crate::dsl::ParseError),

    #[error("usage: {0}")]
    Usage(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
