use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("exponent |u|*eps = {product} exceeds the overflow guard {guard}")]
    OverflowGuard { product: f64, guard: f64 },

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("model is degenerate (no Gaussian part and no jumps)")]
    DegenerateModel,

    #[error("model is not symmetric: {0}")]
    NotSymmetric(String),

    #[error("Esscher root search did not converge: {0}")]
    NoConvergence(String),

    #[error("model has bounded variation with effective drift c = {drift}; use b(t) = |c| t")]
    DriftDominated { drift: f64 },

    #[error("model is not drift dominated")]
    NotDriftDominated,

    #[error("rate table is not monotone: {0}")]
    NotMonotone(String),

    #[error("value {value} outside table range [{min}, {max}]")]
    OutOfTableRange { value: f64, min: f64, max: f64 },

    #[error("insufficient grid: {0}")]
    InsufficientGrid(String),

    #[error("usable n-range has only {0} points (need at least 5)")]
    UnderflowRange(usize),

    #[error("unknown family '{0}'")]
    UnknownFamily(String),

    #[error("small-jump Gaussian approximation unsound: sigma(delta)/delta = {ratio:.4} < 3")]
    ApproximationUnsound { ratio: f64 },

    #[error("no path stayed inside the ball; p <= {ci_high:e} (95%)")]
    ZeroHits { ci_high: f64 },

    #[error("no estimable cells in the grid")]
    NoEstimableCells,

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
