//! Detection of a nested square/triangle landing landmark and relative pose
//! recovery for a downward-looking camera.
//!
//! The pipeline runs per frame:
//!
//! 1. [`imaging`]: resize to the working resolution and Gaussian smoothing.
//! 2. [`thresholding`]: binarization with a threshold that is refined by a
//!    local Otsu estimate after each hit and re-searched after sustained misses.
//! 3. [`contours`]: border following into a nesting tree, Douglas-Peucker
//!    simplification and vertex counting.
//! 4. [`detector`]: selection of the contour chain whose vertex counts and
//!    area ratios match the landmark.
//! 5. [`pose`]: horizontal offset, heading and interpolated height.
//!
//! [`scenegen`] renders ground-truth frames of the landmark and [`sim`] closes
//! the loop around the pipeline with a simple multirotor model.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod contours;
pub mod detector;
mod error;
pub mod imaging;
pub mod pipeline;
pub mod pose;
pub mod scenegen;
pub mod sim;
pub mod thresholding;

pub use config::PipelineConfig;
pub use contours::{Contour, ContourTree, Point, Polygon};
pub use detector::{Detection, PatternSpec};
pub use error::{Error, Result};
pub use imaging::{BinaryImage, GrayImage, Roi};
pub use pipeline::{FrameReport, Tracker};
pub use pose::{CalibrationTable, CameraGeom, PoseEstimate};
pub use scenegen::{CameraModel, LandmarkModel};
pub use sim::{Outcome, Phase, Scenario};
pub use thresholding::{GrayHistogram, ThresholdConfig, ThresholdState};
