use thiserror::Error;

use crate::globalization::CoverageOutcome;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("frame is not orthonormal (defect {defect:.3e})")]
    Frame { defect: f64 },
    #[error("subspaces are not in the same class: {0}")]
    NotSameClass(String),
    #[error("numerically rank deficient: {0}")]
    NumericalRank(String),
    #[error("translation vector too large for the bump annulus: |v| = {norm}, allowed {allowed}")]
    StepSize { norm: f64, allowed: f64 },
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("symbol window too short: need index {needed}, window is [-{window}, {window}]")]
    Window { needed: i64, window: usize },
    #[error("affine map has no isolated fixed point")]
    NoIsolatedFixedPoint,
    #[error("indeterminate index: singular value {0} is too close to 1")]
    Index(f64),
    #[error("rank loss in plane image: {0}")]
    Rank(String),
    #[error("subspace class violation: {0}")]
    SubspaceClass(String),
    #[error("node budget of {budget} exhausted")]
    Budget {
        budget: usize,
        partial: Option<Box<CoverageOutcome>>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
