use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("point ({0}, {1}) lies outside the domain")]
    OutsideDomain(f64, f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("profile value {value} at node {node} is not positive")]
    NonPositiveProfile { node: usize, value: f64 },

    #[error("angle {0} lies outside the wedge [-pi/4, 5pi/4]")]
    AngleOutsideWedge(f64),

    #[error("field is not normalized at the anchor (value {0})")]
    NotNormalized(f64),

    #[error("time step {dt} exceeds the limit {limit}")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("negative mass {0:e} beyond the clamp threshold")]
    NegativeMass(f64),

    #[error("Green tail share {share:.3} exceeds the limit {limit:.3}")]
    TailShare { share: f64, limit: f64 },

    #[error("integrand does not decay: {0}")]
    Divergent(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("t = {t} lies outside the trusted window [{lo}, {hi}]")]
    OutsideTimeWindow { t: f64, lo: f64, hi: f64 },

    #[error("singular-cell quadrature failed: {0}")]
    SingularCell(String),

    #[error("missing prerequisite: {0}")]
    MissingPrerequisite(String),

    #[error("domain truncation sensitivity {change:.4} exceeds {limit:.4}")]
    TruncationSensitivity { change: f64, limit: f64 },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
