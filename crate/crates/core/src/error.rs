use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge probability {value} at level {level} outside the admissible range ({lo}, {hi})")]
    ProbabilityOutOfRange { level: usize, value: f64, lo: f64, hi: f64 },

    #[error("invalid probability bounds [{lo}, {hi}]: need 0 < lo <= hi < 1")]
    InvalidBounds { lo: f64, hi: f64 },

    #[error("degree at level {level} is zero")]
    ZeroDegree { level: usize },

    #[error("profile depth must be at least 1")]
    ZeroDepth,

    #[error("degrees ({degrees}) and edge probabilities ({probs}) disagree in length")]
    LengthMismatch { degrees: usize, probs: usize },

    #[error("target growth function is invalid at level {level}: {reason}")]
    InvalidTarget { level: usize, reason: String },

    #[error("target growth is infeasible at level {level}: need ratio {ratio:.6}, reachable [{min:.6}, {max:.6}]")]
    InfeasibleTarget { level: usize, ratio: f64, min: f64, max: f64 },

    #[error("level {level} out of range (depth {depth})")]
    LevelOutOfRange { level: usize, depth: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("log-magnitude overflow guard tripped at level {level} (|log| = {magnitude:e})")]
    Overflow { level: usize, magnitude: f64 },

    #[error("negative intermediate probability {value:e} at level {level}")]
    NegativeProbability { level: usize, value: f64 },

    #[error("tree has {edges} edges, limit is {limit}")]
    TooManyEdges { edges: u128, limit: u128 },

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
