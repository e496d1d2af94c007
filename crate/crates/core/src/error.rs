use thiserror::Error;

/// Errors raised across the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("input value out of range: {0}")]
    Range(String),

    #[error("encoding capacity exceeded: cannot encode {dims} input dimensions on {nodes} nodes")]
    Capacity { dims: usize, nodes: usize },

    #[error("matrix is not Hurwitz: max eigenvalue real part {max_real:e}")]
    Stability { max_real: f64 },

    #[error("ill-conditioned linear system: {0}")]
    Conditioning(String),

    #[error("matrix is not symmetric/Hermitian: max deviation {deviation:e}")]
    Symmetry { deviation: f64 },

    #[error("non-finite value encountered: {0}")]
    Numerical(String),

    #[error("integration unstable ({reason}); increase substeps (currently {substeps})")]
    IntegrationInstability { reason: String, substeps: usize },

    #[error("rank-deficient feature matrix: {0}")]
    RankDeficient(String),

    #[error("degenerate target: {0}")]
    DegenerateTarget(String),

    #[error("covariance entry reached {peak:e} at step {step}: parametric heating outruns the damping")]
    Heating { step: usize, peak: f64 },

    #[error("unphysical state: {0}")]
    Unphysical(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

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
