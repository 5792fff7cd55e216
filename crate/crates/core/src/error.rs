use thiserror::Error;

/// Errors produced by the estimators, the simulator and the evaluation helpers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point has non-positive depth ({depth:.3e} m)")]
    NonPositiveDepth { depth: f64 },

    #[error("bounding box diagonal {diagonal:.3} px is below 1 px")]
    DegenerateBox { diagonal: f64 },

    #[error("translation is underdetermined (condition number {condition:.3e})")]
    Underdetermined { condition: f64 },

    #[error("optimization diverged after {iterations} iterations")]
    Diverged { iterations: usize },

    #[error("cyclic symmetry order must be >= 1, got {0}")]
    InvalidOrder(i64),

    #[error("invalid symmetry group: {0}")]
    InvalidSymmetry(String),

    #[error("rotation mixture is empty")]
    EmptyState,

    #[error("object {id} has no pose estimate yet")]
    NotReady { id: usize },

    #[error("no evaluation results to aggregate")]
    EmptyResults,

    #[error("object {object} projects outside the image in view {view}")]
    ProjectionOutOfImage { view: usize, object: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
