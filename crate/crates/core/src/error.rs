use thiserror::Error;

/// Everything that can go wrong while evaluating, approximating or
/// estimating a cumulative conditional expectation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter out of range: {constraint}")]
    ParamOutOfRange { constraint: String },

    #[error("point ({u}, {v}) is on the boundary of the unit square")]
    BoundaryPoint { u: f64, v: f64 },

    #[error("copula is not differentiable at ({u}, {v})")]
    NotDifferentiable { u: f64, v: f64 },

    #[error("quadrature did not reach tolerance: estimate {estimate}, error {error}")]
    ToleranceNotReached { estimate: f64, error: f64 },

    #[error("no closed form for {family}")]
    NoClosedForm { family: String },

    #[error("no polynomial cross sections for {family}")]
    NoCrossSections { family: String },

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("curve grids do not match")]
    GridMismatch,

    #[error("index {index} out of range for order {order}")]
    IndexOutOfRange { index: usize, order: usize },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("non-finite value in observation {index}")]
    NonFiniteInput { index: usize },

    #[error("no observation with x <= {u}")]
    EmptyConditioningSet { u: f64 },

    #[error("sampling not supported for {family}")]
    UnsupportedFamily { family: String },

    #[error("variance {value} is negative beyond quadrature noise")]
    NegativeVariance { value: f64 },

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("invalid model description: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
