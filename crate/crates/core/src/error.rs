use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidModel(String),

    /// Gierer-Meinhardt kinetics evaluated with v = 0.
    #[error("division by zero in kinetics (v = {v}) at x = {x}")]
    DivisionByZero { x: f64, v: f64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("singular matrix: zero pivot at row {row}")]
    Singular { row: usize },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("invalid settings: {0}")]
    InvalidSettings(String),

    #[error("invalid fold bracket: {0}")]
    InvalidBracket(String),

    #[error("projection undefined: {0}")]
    NotSingular(String),

    #[error("time integration diverged at t = {t} (norm {norm:e})")]
    Diverged { t: f64, norm: f64 },

    #[error("not a converged steady state: {0}")]
    NotConverged(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
