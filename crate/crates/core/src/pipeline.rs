//! Per-frame processing with a persistent threshold controller.

use std::time::{Duration, Instant};

use crate::config::PipelineConfig;
use crate::contours::extract_contours;
use crate::detector::{detect_landmark, Detection, DetectorConfig, PatternSpec};
use crate::error::{Error, Result};
use crate::imaging::{gaussian_blur, resize, GrayImage};
use crate::pose::{estimate_pose, CalibrationTable, PoseEstimate};
use crate::thresholding::{binarize, histogram, ThresholdState};

/// Resize to the working resolution (if needed) and smooth.
pub fn preprocess(img: &GrayImage, width: usize, height: usize, sigma: f64) -> Result<GrayImage> {
    let sized = if img.width() == width && img.height() == height { img.clone() } else { resize(img, width, height)? };
    gaussian_blur(&sized, sigma)
}

/// One stateless detection attempt on a preprocessed frame.
pub fn detect_at(img: &GrayImage, t: u8, spec: &PatternSpec, cfg: &DetectorConfig) -> Option<Detection> {
    let tree = extract_contours(&binarize(img, t));
    detect_landmark(&tree, spec, cfg)
}

#[derive(Debug, Clone)]
pub struct FrameReport {
    pub index: usize,
    pub threshold: u8,
    pub detection: Option<Detection>,
    /// Set when the detection produced a pose.
    pub pose: Option<PoseEstimate>,
    /// Why a detection did not produce a pose (typically out of calibration span).
    pub pose_error: Option<Error>,
    /// Threshold state after this frame.
    pub searching: bool,
    pub lost: bool,
    pub global_t: u8,
    pub elapsed: Duration,
}

impl FrameReport {
    pub fn detected(&self) -> bool {
        self.detection.is_some()
    }
}

/// Runs frames of one stream in order.
#[derive(Debug, Clone)]
pub struct Tracker {
    pub config: PipelineConfig,
    pub table: CalibrationTable,
    pub state: ThresholdState,
    frames: usize,
}

impl Tracker {
    pub fn new(config: PipelineConfig, table: CalibrationTable) -> Result<Self> {
        config.validate()?;
        Ok(Self { state: ThresholdState::new(config.threshold), config, table, frames: 0 })
    }

    /// Loads the calibration named by the config (or the shipped table).
    pub fn from_config(config: PipelineConfig) -> Result<Self> {
        let table = config.calibration()?;
        Self::new(config, table)
    }

    /// Processes the next frame using the config's yaw.
    pub fn process(&mut self, frame: &GrayImage) -> Result<FrameReport> {
        let alpha = self.config.alpha;
        self.process_with_yaw(frame, alpha)
    }

    pub fn process_with_yaw(&mut self, frame: &GrayImage, alpha: f64) -> Result<FrameReport> {
        let start = Instant::now();
        let cfg = &self.config;
        let img = preprocess(frame, cfg.camera.width, cfg.camera.height, cfg.blur_sigma)?;
        let t = self.state.active_t;
        let detection = detect_at(&img, t, &cfg.pattern, &cfg.detector);

        let (mut pose, mut pose_error) = (None, None);
        match &detection {
            Some(det) => {
                let roi = det.bounding_box().dilated(cfg.roi_dilation).clamped(img.width(), img.height());
                match roi.map(|r| histogram(&img, r)) {
                    Some(Ok(hist)) => self.state.on_detect(&hist),
                    _ => self.state.on_detect(&Default::default()),
                }
                match estimate_pose(det, &cfg.camera, &self.table, &cfg.pattern, alpha) {
                    Ok(p) => pose = Some(p),
                    Err(e) => pose_error = Some(e),
                }
            }
            None => {
                self.state.on_miss();
            }
        }
        let index = self.frames;
        self.frames += 1;
        Ok(FrameReport {
            index,
            threshold: t,
            detection,
            pose,
            pose_error,
            searching: self.state.searching(),
            lost: self.state.lost,
            global_t: self.state.global_t,
            elapsed: start.elapsed(),
        })
    }
}
