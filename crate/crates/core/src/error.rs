use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("fields live on different grids or have different component counts")]
    GridMismatch,

    #[error("axis {axis} out of range for dimension {dim}")]
    Axis { axis: usize, dim: usize },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("multiplier is not finite at k = {0:?}")]
    NonFiniteMultiplier(Vec<i64>),

    #[error("wavevector k = 0 has no characteristic roots")]
    ZeroMode,

    #[error("time grid mismatch: {0}")]
    TimeGrid(String),

    #[error("density positivity violated at t = {t}: min rho = {min_rho}")]
    Positivity { t: f64, min_rho: f64 },

    #[error("time step collapsed below 1e-10 at t = {t} (dt_eff = {dt})")]
    CflCollapse { t: f64, dt: f64 },

    #[error("map is not a diffeomorphism on the grid: min Jacobian {min_jacobian}")]
    NotDiffeomorphism { min_jacobian: f64 },

    #[error("Neumann series smallness violated: gamma = {0} >= 1/2")]
    NeumannSmallness(f64),

    #[error("fixed-point iteration is not contractive (factor {factor})")]
    NonContractive { factor: f64 },

    #[error("Picard iteration diverged at iterate {iterate}")]
    Diverged { iterate: usize },

    #[error("trajectory too short for fitting: {0} tail samples")]
    TooShort(usize),

    #[error("bad field file: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
