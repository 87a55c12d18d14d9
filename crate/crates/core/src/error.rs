use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("unsupported polynomial degree {0} (supported: 1..=8)")]
    UnsupportedDegree(usize),

    #[error("reference coordinates ({0}, {1}) lie outside [-1, 1]^2")]
    OutsideReferenceElement(f64, f64),

    #[error("inadmissible state{}: {reason}", dof.map(|d| format!(" at dof {d}")).unwrap_or_default())]
    InvalidState { dof: Option<usize>, reason: String },

    #[error("layout mismatch: expected {expected} values, got {got}")]
    LayoutMismatch { expected: usize, got: usize },

    #[error("dense assembly is limited to 16 elements and degree 3 (got {elements} elements, degree {degree})")]
    SizeGuard { elements: usize, degree: usize },

    #[error("GMRES stopped after {iterations} iterations at relative residual {residual:e}")]
    GmresNotConverged {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("Picard iteration stopped after {iterations} iterations at relative variation {variation:e}")]
    PicardNotConverged {
        iterations: usize,
        variation: f64,
        history: Vec<f64>,
    },

    #[error("stage {stage}: {source}")]
    StageFailed {
        stage: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("step {step}: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: String, message: String },

    #[error("line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unknown quantity `{0}`")]
    UnknownQuantity(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            message: message.into(),
        }
    }

    /// True for failures of the numerical solvers (as opposed to bad input).
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::GmresNotConverged { .. }
            | Error::PicardNotConverged { .. }
            | Error::InvalidState { .. } => true,
            Error::StageFailed { source, .. } | Error::StepFailed { source, .. } => {
                source.is_solver_failure()
            }
            _ => false,
        }
    }
}
