use thiserror::Error;

/// Errors produced by the capacity engines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    /// A numerical routine failed to reach its tolerance.
    #[error("numeric failure in {func}: {detail}")]
    Numeric { func: &'static str, detail: String },

    /// No admissible choice satisfies the constraints.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A scenario or codebook document failed validation.
    #[error("invalid input at {field}: {detail}")]
    InvalidInput { field: String, detail: String },

    /// The accuracy statistic puts zero mass on a transmitter estimate.
    #[error("state {state}: transmitter estimate u={u} has zero probability, conditional law undefined")]
    DegenerateInput { state: usize, u: usize },

    /// A theorem precondition does not hold for the supplied data.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Malformed call arguments.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A requested reading lies outside the range of the data.
    #[error("extrapolation: {0}")]
    Extrapolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible(_) => 3,
            Error::Numeric { .. } => 4,
            _ => 2,
        }
    }

    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }

    pub(crate) fn numeric(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Numeric {
            func,
            detail: detail.into(),
        }
    }

    pub(crate) fn invalid(field: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::InvalidInput {
            field: field.into(),
            detail: detail.into(),
        }
    }
}
