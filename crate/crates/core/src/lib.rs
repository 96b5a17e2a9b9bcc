//! Normalized Fourier contour descriptors for arbitrary-shape text detection.
//!
//! The crate covers the numeric core of a descriptor-based detector that can be
//! exercised without a trained network:
//!
//! * [`codec`]: polygon resampling, normalization by image size, forward DFT to a
//!   `4K+2` coefficient descriptor and inverse DFT back to contour points.
//! * [`activation`]: the bounded activation that maps logits into the descriptor
//!   range, its inverse, and the additive/multiplicative refinement operators
//!   with closed-form gradients.
//! * [`geometry`]: descriptor bounding boxes, GIoU, exact polygon IoU and NMS.
//! * [`matching`]: matching costs, rectangular Hungarian assignment and the dense
//!   (multi-round) matching strategy.
//! * [`loss`]: spatial/Fourier/box regression losses, focal loss and the
//!   layer-weighted total loss.
//! * [`deform`]: descriptor-derived reference boxes and the multi-scale
//!   deformable attention sampling kernel.
//! * [`eval`]: IoU-thresholded precision/recall/F-measure.
//! * [`records`]: JSON record schemas shared with the command-line tool.
//! * [`check`]: finite-difference and naive-summation routes used by the
//!   randomized self-checks.

pub mod activation;
pub mod check;
pub mod codec;
pub mod deform;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod loss;
pub mod matching;
pub mod records;

pub use activation::{Logits, OffsetVector, DEFAULT_DELTA};
pub use codec::{ContourPoints, FourierDescriptor, Frame, ImageSize, Point, Polygon};
pub use error::{Error, Result};
pub use geometry::NormalizedBox;
pub use matching::{CostMatrix, MatchResult, Proposal};
