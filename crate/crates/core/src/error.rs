use thiserror::Error;

use crate::network::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("canonical operation needs an even dimension, got {0}")]
    OddDimension(usize),

    #[error("non-finite or empty state: {0}")]
    InvalidState(String),

    #[error("state leaves the domain: component {component} = {value}")]
    Domain { component: usize, value: f64 },

    #[error("degenerate gradient: |grad H| = {norm:e} <= {tol:e}")]
    DegenerateGradient { norm: f64, tol: f64 },

    #[error("H is not a first integral of the field: |grad H . f| = {dot:e} exceeds {bound:e}")]
    NotFirstIntegral { dot: f64, bound: f64 },

    #[error("unsupported reduction: {0}")]
    UnsupportedReduction(String),

    #[error("newton iteration did not converge in {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    #[error("parameter `{name}` = {value} outside admissible range {range}")]
    ParamRange {
        name: String,
        value: f64,
        range: String,
    },

    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl Error {
    /// True for failures raised by the numerics (domain exits, Newton
    /// divergence) as opposed to bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. } | Error::Convergence { .. } | Error::InvalidState(_)
        )
    }
}
