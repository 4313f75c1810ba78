use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degree cap {degree} is below the tail-series threshold {minimum}; use a larger degree")]
    DegreeTooSmall { degree: usize, minimum: usize },

    #[error("polynomial is identically zero")]
    ZeroPolynomial,

    #[error("zero near contour |z| = {radius}")]
    ZeroNearContour { radius: f64 },

    #[error("contour retries exhausted after {attempts} attempts near radius {radius}")]
    RetriesExhausted { radius: f64, attempts: usize },

    #[error("integrand singular on quadrature node")]
    SingularNode,

    #[error("root extraction failed: {0}")]
    RootFinding(String),

    #[error("fit refused: only {gated} radii pass the quality gate (need {required})\n{report}")]
    InsufficientGatedPoints { gated: usize, required: usize, report: String },

    #[error("invalid-trial cap exceeded at radius {radius}: {invalid} of {trials} trials invalid")]
    InvalidTrialCap { radius: f64, invalid: usize, trials: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}
