use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point {point:?} lies outside the grid domain")]
    OutsideDomain { point: Vec<f64> },

    #[error("empty step set for aperture {aperture} at s_max = {s_max}; increase s_max")]
    EmptyStepSet { aperture: f64, s_max: usize },

    #[error("brute-force oracle refused: {nodes} nodes exceeds the budget of {budget}")]
    NodeBudgetExceeded { nodes: usize, budget: usize },

    #[error("partition does not cover {} requested point(s), first at {:?}", .gaps.len(), .gaps.first())]
    UncoveredPoints { gaps: Vec<Vec<f64>> },

    #[error("precondition violated at node {node:?}: {what} (measured {measured}, bound {bound})")]
    Precondition {
        node: Vec<f64>,
        what: String,
        measured: f64,
        bound: f64,
    },

    #[error("width budget unattainable: measured widths {measured:?} exceed budgets {budgets:?}")]
    WidthBudget { measured: Vec<f64>, budgets: Vec<f64> },

    #[error("stage {stage} failed: {reason}")]
    Stage { stage: usize, reason: String },

    #[error("point {index} has no normal data")]
    MissingNormal { index: usize },

    #[error("duplicate piece index ({0}, {1})")]
    DuplicatePiece(u32, u32),

    #[error("probe at scale index j = {j} leaves the domain")]
    ProbeEscapes { j: i32 },

    #[error("Lipschitz precondition violated: measured {measured} > {bound}")]
    LipschitzPrecondition { measured: f64, bound: f64 },

    #[error("format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
