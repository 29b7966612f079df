use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("element {index} has (near-)zero length {length:.3e}")]
    ZeroLengthElement { index: usize, length: f64 },

    #[error("assumption check failed: {0}")]
    AssumptionViolated(String),

    #[error("negative radial coordinate {value:.3e} at node {node}")]
    NegativeRadius { node: usize, value: f64 },

    #[error("linear system is singular or too ill-conditioned ({0})")]
    SingularSystem(String),

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("speed law evaluated outside its domain: {0}")]
    DomainViolation(String),

    #[error("discrete energy increased by {increase:.3e} in a step of an unconditionally stable scheme")]
    StabilityViolation { increase: f64 },

    #[error("solution failed independent residual verification: |residual| = {residual:.3e} > {bound:.3e}")]
    VerificationFailed { residual: f64, bound: f64 },

    #[error("generated surface has boundary; enclosed volume is undefined")]
    OpenSurface,

    #[error("time {t} is past the extinction time of the exact solution")]
    PastExtinction { t: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
