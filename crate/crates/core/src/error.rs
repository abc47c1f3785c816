use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("operation not supported for model {model}")]
    UnsupportedModel { model: &'static str },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("unsupported discretization: {0}")]
    Unsupported(String),
    #[error("mass matrix is not positive definite (min eigenvalue {min_eig:.3e}, norm {norm:.3e})")]
    IllPosedMass { min_eig: f64, norm: f64 },
    #[error("eigensolver failed: {0}")]
    Solver(String),
    #[error("frequency cutoff {cutoff} too small: need a mode above {needed:.3e}")]
    Capacity { cutoff: usize, needed: f64 },
}

impl Error {
    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
