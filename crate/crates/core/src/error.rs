use thiserror::Error;

/// Errors raised by the library. Condition failures are reported through
/// [`crate::model::ConditionReport`], not through this type.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Reserved: single-node regions are allowed, so region construction
    /// never produces this.
    #[error("empty-ball: radius {radius} around node {center}")]
    EmptyBall { center: usize, radius: f64 },

    #[error("invalid-weight: value {value} at node {node}")]
    InvalidWeight { node: usize, value: f64 },

    #[error("degenerate-input: {0}")]
    DegenerateInput(String),

    #[error("bad-annulus: inner radius {inner} must be below outer radius {outer}")]
    BadAnnulus { inner: f64, outer: f64 },

    #[error("contraction-violated: eps = {eps} must lie in [0, 1)")]
    ContractionViolated { eps: f64 },

    #[error("invalid-structure: {0}")]
    InvalidStructure(String),

    #[error("alpha-inadmissible: delta_alpha = {delta} is outside (0, 1)")]
    AlphaInadmissible { delta: f64 },

    #[error("unknown model '{0}'")]
    UnknownModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("solver-failed at time index {time_index}: residual {residual:e}")]
    SolverFailed { time_index: usize, residual: f64 },

    #[error("blow-up-suspected at time index {time_index}")]
    BlowUpSuspected { time_index: usize },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
