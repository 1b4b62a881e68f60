use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid too coarse: n = {n} subintervals, need at least {min}")]
    GridTooCoarse { n: usize, min: usize },

    #[error("odd subdivision: n = {n}, an even count is required so that pi/2 is a node")]
    OddSubdivision { n: usize },

    #[error("non-finite value {value} at node {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("boundary value at node {index} is {value}, expected {expected}")]
    BoundaryMismatch { index: usize, value: f64, expected: f64 },

    #[error("not hemispheric-compatible: m + n = {sum} is odd")]
    NotHemisphericCompatible { sum: i64 },

    #[error("perturbation must vanish at the endpoints, found g = {value} at node {index}")]
    NonzeroBoundaryPerturbation { index: usize, value: f64 },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("profiles are not ordered at t = 0: lower exceeds upper by {excess:e} at node {index}")]
    InitialOrderingViolated { index: usize, excess: f64 },

    #[error("newton did not converge after {iterations} iterations (last residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("newton line search stalled at residual {residual:e} (possible fold point)")]
    NewtonStalled { residual: f64 },

    #[error("singular jacobian at row {row} (possible fold or bifurcation point)")]
    SingularJacobian { row: usize },

    #[error("continuation failed at its first step from kappa = {kappa}")]
    ContinuationStartFailed { kappa: f64 },

    #[error("continuation stopped at kappa = {last_kappa} (newton failed at {failed_at}) before reaching {target}")]
    ContinuationIncomplete { last_kappa: f64, failed_at: f64, target: f64 },

    #[error("profile is not stationary: sup residual {residual:e} exceeds {limit:e}")]
    NotStationary { residual: f64, limit: f64 },

    #[error("heat flow reported blowup at t = {t}")]
    Blowup { t: f64 },

    #[error("report invariant violated: {0}")]
    InvalidReport(String),

    #[error("malformed profile file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
