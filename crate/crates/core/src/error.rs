use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("window [{x_min}, {x_max}] too small: need at least {needed} sites")]
    WindowTooSmall { x_min: i64, x_max: i64, needed: i64 },

    #[error("site {x} (with its jump neighbourhood) lies outside the stored window [{x_min}, {x_max}]")]
    OutOfWindow { x: i64, x_min: i64, x_max: i64 },

    #[error("walk left the stored window at step {step} (site {x})")]
    WindowExit { step: usize, x: i64 },

    #[error("linear solve refused: residual {residual:e} exceeds {tolerance:e}")]
    SingularSystem { residual: f64, tolerance: f64 },

    #[error("degenerate conditioning table at step {step}, site {x}")]
    DegenerateTable { step: usize, x: i64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("path never reaches level {level}")]
    NeverReached { level: i64 },

    #[error("enumeration would visit {count} configurations, cap is {cap}")]
    EnumerationCap { count: usize, cap: usize },

    #[error("empty sample set")]
    EmptySample,

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
