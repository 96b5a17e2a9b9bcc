use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(&'static str),

    #[error("invalid image size {width}x{height}")]
    InvalidImageSize { width: f64, height: f64 },

    #[error("point {index} ({x}, {y}) lies outside the {width}x{height} image")]
    OutOfBounds {
        index: usize,
        x: f64,
        y: f64,
        width: f64,
        height: f64,
    },

    #[error("normalized coordinate out of [0, 1] at point {index}")]
    NotNormalized { index: usize },

    #[error("expected {expected:?} frame, got {actual:?}")]
    FrameMismatch {
        expected: crate::codec::Frame,
        actual: crate::codec::Frame,
    },

    #[error("{samples} samples cannot resolve frequencies up to {k_max} (need at least {})", 2 * k_max + 1)]
    InsufficientSamples { samples: usize, k_max: usize },

    #[error("expected {expected} values, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("value {value} at index {index} is outside the open activation range")]
    OutOfRange { index: usize, value: f64 },

    #[error("both boxes have zero area")]
    BothDegenerate,

    #[error("both polygons have zero area")]
    ZeroArea,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("requested {requested} proposals but only {available} are available")]
    NotEnoughProposals { requested: usize, available: usize },

    #[error("score {score} at index {index} is not in (0, 1)")]
    ScoreOutOfRange { index: usize, score: f64 },

    #[error("no complete assignment with finite cost exists")]
    Infeasible,

    #[error("invalid cost entry {value} at ({row}, {col})")]
    InvalidCost { row: usize, col: usize, value: f64 },

    #[error("layer {layer} has an empty match set")]
    EmptyMatchSet { layer: usize },

    #[error("invalid match: {0}")]
    InvalidMatch(String),

    #[error("attention weights of head {head} sum to {sum}, expected 1")]
    WeightsNotNormalized { head: usize, sum: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
