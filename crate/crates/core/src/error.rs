use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension must be positive")]
    EmptyDimension,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("operator is not Hermitian (max |A - A^dagger| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not unitary (max |U^dagger U - I| = {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("observables do not commute (max |AB - BA| = {deviation:.3e})")]
    NonCommuting { deviation: f64 },

    #[error("state not normalized (norm = {norm:.12})")]
    NotNormalized { norm: f64 },

    #[error("cannot normalize a zero vector")]
    ZeroNorm,

    #[error("impossible post-selection: no outcome is compatible with the post-selected state")]
    ImpossiblePostSelection,

    #[error("undefined weak value: pre- and post-selected states are orthogonal (|overlap| = {overlap:.3e})")]
    UndefinedWeakValue { overlap: f64 },

    #[error("operation requires a post-selected state")]
    MissingPostSelection,

    #[error("post-selection impossible at this coupling (pointer norm^2 = {norm_sqr:.3e})")]
    VanishingPointerNorm { norm_sqr: f64 },

    #[error("pointer density too concentrated for rejection sampling (acceptance rate {rate:.3e})")]
    SamplerAcceptance { rate: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dense dimension {dim} exceeds budget {budget}; use the factorized ensemble path (simulate --mode pressure) or raise TSVF_DIM_BUDGET")]
    DimBudgetExceeded { dim: usize, budget: usize },

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification shared by the CLI exit codes and the C status codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input: malformed scenario, unknown name, invalid parameter.
    Usage,
    /// The inputs are valid but the requested quantity does not exist.
    Undefined,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io(_) => ErrorKind::Io,
            Error::ImpossiblePostSelection
            | Error::UndefinedWeakValue { .. }
            | Error::MissingPostSelection
            | Error::VanishingPointerNorm { .. }
            | Error::SamplerAcceptance { .. } => ErrorKind::Undefined,
            _ => ErrorKind::Usage,
        }
    }
}
