use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point is not a fixed point: residual {residual:e} exceeds tolerance {tolerance:e}")]
    NotFixedPoint { residual: f64, tolerance: f64 },

    #[error("map is not origin-fixed (component {component} has constant term {constant})")]
    NotOriginFixed { component: usize, constant: f64 },

    #[error("remainder has constant or linear terms (component {component})")]
    NotNonlinear { component: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("hypothesis failed: {0}")]
    Hypothesis(String),

    #[error("growth constant uncertified after {k_max} powers (partial value {partial})")]
    Uncertified { partial: f64, k_max: usize },

    #[error("eigenvalue iteration did not converge")]
    EigenNoConvergence,

    #[error("singular linear system at pivot {0}")]
    Singular(usize),

    #[error("orbit diverged at step {step} (norm {norm:e})")]
    Diverged { step: usize, norm: f64 },

    #[error("orbit undecided after {steps} steps")]
    Undecided { steps: usize },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("empty sublevel mask: series degree too low for this window")]
    EmptyMask,

    #[error("grid shape mismatch")]
    ShapeMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Exit status for the command-line tool: 1 for mathematical failures,
    /// 2 for I/O and format problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Json(_) | Error::Format(_) | Error::InvalidArgument(_) => 2,
            Error::InvalidWindow(_) | Error::DimensionMismatch { .. } => 2,
            _ => 1,
        }
    }
}
