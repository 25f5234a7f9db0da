use thiserror::Error;

pub type Result<T> = std::result::Result<T, SteinError>;

#[derive(Debug, Error)]
pub enum SteinError {
    #[error("invalid support: {0}")]
    InvalidSupport(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown density family `{0}`")]
    UnknownFamily(String),

    #[error("support mismatch: {left} vs {right}")]
    SupportMismatch { left: String, right: String },

    #[error("integrand is not finite ({value}) at x = {x}")]
    NonFiniteIntegrand { x: f64, value: f64 },

    #[error(
        "quadrature did not converge: value {value}, error estimate {error_estimate} after {subdivisions} subdivisions"
    )]
    NonConvergence {
        value: f64,
        error_estimate: f64,
        subdivisions: usize,
    },

    #[error("density is not integrable on {support}: {reason}")]
    NonIntegrable { support: String, reason: String },

    #[error("Fisher information distance diverges for {target} vs {alternative}: {reason}")]
    DivergentFisher {
        target: String,
        alternative: String,
        reason: String,
    },

    #[error("point {x} is outside the support {support}")]
    OutsideSupport { x: f64, support: String },

    #[error("observable `{0}` cannot be evaluated pointwise")]
    NotPointwise(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("parse error at line {line}: {message}")]
    ParseLine { line: usize, message: String },

    #[error("too few samples: got {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },

    #[error("degenerate bandwidth: samples have zero spread")]
    DegenerateBandwidth,
}

impl SteinError {
    /// Failures caused by numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            SteinError::NonConvergence { .. }
                | SteinError::NonFiniteIntegrand { .. }
                | SteinError::DivergentFisher { .. }
                | SteinError::NonIntegrable { .. }
        )
    }
}
