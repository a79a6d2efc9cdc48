use thiserror::Error;

/// Errors raised by the library. Failures of a *checked property* (a circuit
/// that does not simulate its target, an entangled state) are reported as
/// data in the corresponding report types, never through this enum.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QacError {
    #[error("invalid bipartition: {0}")]
    InvalidBipartition(String),

    #[error("qubit {qubit} out of range for a {n}-qubit register")]
    QubitOutOfRange { qubit: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("circuit validation failed: {}", format_issues(.0))]
    Validation(Vec<ValidationIssue>),

    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },

    #[error("internal error: {0}")]
    Internal(String),
}

/// One problem found by circuit validation, with the layer it was found in.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct ValidationIssue {
    /// Zero-based index into the circuit's layer list, if the issue is local to a layer.
    pub layer: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.layer {
            Some(l) => write!(f, "layer {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn format_issues(issues: &[ValidationIssue]) -> String {
    issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, QacError>;
