use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("n_points too small: got {0}, need at least 4")]
    GridTooSmall(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("metric degenerate: h({t}, {x}) = {value}")]
    MetricDegenerate { t: f64, x: f64, value: f64 },

    #[error("lapse non-positive: N({x}) = {value}")]
    LapseNonPositive { x: f64, value: f64 },

    #[error("potential {value} at ({t}, {x}) is below the declared mass floor {floor}")]
    PotentialBelowFloor { t: f64, x: f64, value: f64, floor: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator not positive; refine grid or raise m (min eigenvalue {min_eigenvalue})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("operator not self-adjoint: relative defect {defect:e}")]
    NotSelfAdjoint { defect: f64 },

    #[error("function singular on spectrum at eigenvalue {eigenvalue}")]
    SingularOnSpectrum { eigenvalue: f64 },

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("weight mismatch between {0}")]
    WeightMismatch(String),

    #[error("profile not differentiable in t at t = {t}")]
    NotDifferentiable { t: f64 },

    #[error("time {t} outside scenario window [{t_min}, {t_max}]")]
    OutOfWindow { t: f64, t_min: f64, t_max: f64 },

    #[error("resolution rule violated: {steps_per_unit} steps per unit, need at least {required}")]
    Resolution { steps_per_unit: usize, required: usize },

    #[error("t grid too coarse: {0}")]
    CoarseTimeGrid(String),

    #[error("divergence detected along the T ladder: {0}")]
    Divergence(String),

    #[error("wave operator requires the short-range condition δ > 1 (got δ = {delta})")]
    ShortRange { delta: f64 },

    #[error("scenario has no asymptotic profiles")]
    NoAsymptotics,

    #[error("splitting degenerate; shrink perturbation or refine (min eigenvalue of b + b* is {min_eigenvalue})")]
    SplittingDegenerate { min_eigenvalue: f64 },

    #[error("boundary identification failure: {0}")]
    Identification(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
