use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point outside the admissible region: {0}")]
    OutOfRegion(String),

    #[error("quadrature did not converge: estimate {value:e}, error {error:e} after {panels} panels")]
    NonConvergent { value: f64, error: f64, panels: usize },

    #[error("eigensolver failed to converge: {0}")]
    ConvergenceFailure(String),

    #[error("window is numerically singular (smallest eigenvalue {min_eigenvalue:e})")]
    SingularWindow { min_eigenvalue: f64 },

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("sinh overflow guard violated: lambda*T = {0}")]
    Overflow(f64),

    #[error("degenerate field: {0}")]
    DegenerateField(String),

    #[error("empty region: {0}")]
    EmptyRegion(String),

    #[error("no feasible point on the search grid: {0}")]
    NoFeasiblePoint(String),

    #[error("infeasible curvature constants: beta_K = {beta_k} <= 4 C_D = {four_cd}")]
    InfeasibleCurvature { beta_k: f64, four_cd: f64 },

    #[error("I/O: {0}")]
    Io(String),
}

impl Error {
    /// Numerical failures as opposed to invalid configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergent { .. }
                | Error::ConvergenceFailure(_)
                | Error::SingularWindow { .. }
                | Error::Overflow(_)
                | Error::DegenerateField(_)
                | Error::NoFeasiblePoint(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
