use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report. Each variant has a stable string
/// code (see [`Error::code`]) used in machine-readable error objects.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("kernel is singular at coincident points (row {row}, col {col}); supply a multiplier vanishing on the diagonal")]
    DiagonalSingularity { row: usize, col: usize },

    #[error("supports of f and g are not separated: coincident pair s={s:?}, t={t:?}")]
    Separation { s: Vec<f64>, t: Vec<f64> },

    #[error("iteration did not converge after {iterations} steps (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("enumeration cap exceeded: {points} support points > cap {cap}; use restricted_norm_heuristic")]
    CapExceeded { points: usize, cap: usize },

    #[error("unreliable grid estimate: coarse {coarse}, refined {refined}")]
    UnreliableEstimate { coarse: f64, refined: f64 },

    #[error("measures share {} common atom(s): {points:?}", points.len())]
    CommonAtoms { points: Vec<Vec<f64>> },

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("shrink retries exhausted at tau={tau}; offending cube {cube:?}")]
    Shrink { cube: Vec<i64>, tau: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("density does not integrate to one (mass {mass})")]
    Normalization { mass: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("profile cannot be sectorialized: {0}")]
    NotSectorializable(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::Input(_) => "input",
            Error::DiagonalSingularity { .. } => "diagonal_singularity",
            Error::Separation { .. } => "separation",
            Error::NonConvergence { .. } => "non_convergence",
            Error::CapExceeded { .. } => "cap_exceeded",
            Error::UnreliableEstimate { .. } => "unreliable_estimate",
            Error::CommonAtoms { .. } => "common_atoms",
            Error::Resolution(_) => "resolution",
            Error::Shrink { .. } => "shrink",
            Error::Hypothesis(_) => "hypothesis",
            Error::Normalization { .. } => "normalization",
            Error::Unsupported(_) => "unsupported",
            Error::NotSectorializable(_) => "not_sectorializable",
        }
    }
}
