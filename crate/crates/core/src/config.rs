//! Flat `key = value` configuration text.
//!
//! Blank lines and `#` comments are ignored. Unknown keys are errors so that
//! typos do not silently fall back to defaults.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::detector::{DetectorConfig, PatternSpec};
use crate::error::{Error, Result};
use crate::pose::{CalibrationTable, CameraGeom};
use crate::thresholding::ThresholdConfig;

/// One `key = value` line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

impl Entry {
    pub fn parse<T: FromStr>(&self) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.value.parse().map_err(|e| Error::Config {
            line: self.line,
            message: format!("bad value for {}: {e}", self.key),
        })
    }

    pub fn unknown(&self) -> Error {
        Error::Config { line: self.line, message: format!("unknown key `{}`", self.key) }
    }
}

pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut out: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config { line: i + 1, message: format!("expected key = value, got `{line}`") });
        };
        let key = k.trim().to_string();
        if out.iter().any(|e| e.key == key) {
            return Err(Error::Config { line: i + 1, message: format!("duplicate key `{key}`") });
        }
        out.push(Entry { line: i + 1, key, value: v.trim().to_string() });
    }
    Ok(out)
}

/// Everything the per-frame pipeline needs.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub threshold: ThresholdConfig,
    pub detector: DetectorConfig,
    pub pattern: PatternSpec,
    pub camera: CameraGeom,
    pub blur_sigma: f64,
    /// Fraction of the detection box added on each side for the local histogram.
    pub roi_dilation: f64,
    /// `None` uses the shipped measured table.
    pub calibration_file: Option<PathBuf>,
    /// Vehicle yaw from north, radians.
    pub alpha: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            threshold: ThresholdConfig::default(),
            detector: DetectorConfig::default(),
            pattern: PatternSpec::default(),
            camera: CameraGeom::default(),
            // a wider kernel erases the 1.5 px white ring between the triangles
            // beyond about 2.3 m
            blur_sigma: 0.5,
            roi_dilation: 0.5,
            calibration_file: None,
            alpha: 0.0,
        }
    }
}

impl PipelineConfig {
    /// Parses config text; relative paths stay relative.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut side = None;
        let (mut width, mut height) = (cfg.camera.width, cfg.camera.height);
        for e in parse_entries(text)? {
            match e.key.as_str() {
                "threshold.initial" => cfg.threshold.initial = e.parse()?,
                "threshold.accept_window" => cfg.threshold.accept_window = e.parse()?,
                "threshold.loss_trigger" => cfg.threshold.loss_trigger = e.parse()?,
                "threshold.range_half_width" => cfg.threshold.range_half_width = e.parse()?,
                "threshold.step" => cfg.threshold.step = e.parse()?,
                "threshold.max_sweeps" => cfg.threshold.max_sweeps = e.parse()?,
                "detector.ratio_tolerance" => cfg.pattern.ratio_tolerance = e.parse()?,
                "detector.simplify_fraction" => cfg.detector.simplify_fraction = e.parse()?,
                "detector.min_tolerance_px" => cfg.detector.min_tolerance_px = e.parse()?,
                "detector.min_contour_area" => cfg.detector.min_area_px = e.parse()?,
                "detector.partial_min_side_px" => cfg.detector.partial_min_side_px = e.parse()?,
                "detector.roi_dilation" => cfg.roi_dilation = e.parse()?,
                "pattern.outer_side_m" => side = Some(e.parse::<f64>()?),
                "camera.width" => width = e.parse()?,
                "camera.height" => height = e.parse()?,
                "preprocess.blur_sigma" => cfg.blur_sigma = e.parse()?,
                "calibration.file" => cfg.calibration_file = Some(PathBuf::from(&e.value)),
                "pose.alpha" => cfg.alpha = e.parse()?,
                _ => return Err(e.unknown()),
            }
        }
        if let Some(side) = side {
            let tol = cfg.pattern.ratio_tolerance;
            cfg.pattern = PatternSpec { ratio_tolerance: tol, ..PatternSpec::from_outer_side(side) };
        }
        cfg.camera = CameraGeom::new(width, height);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; a relative `calibration.file` is taken relative
    /// to the config's directory and must exist.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let Some(cal) = &cfg.calibration_file {
            let resolved = match path.parent() {
                Some(dir) if cal.is_relative() => dir.join(cal),
                _ => cal.clone(),
            };
            if !resolved.is_file() {
                return Err(Error::Io(format!("calibration file {} not found", resolved.display())));
            }
            cfg.calibration_file = Some(resolved);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config { line: 0, message: m });
        self.threshold.validate()?;
        self.pattern.validate()?;
        if !(self.blur_sigma > 0.0 && self.blur_sigma <= 10.0) {
            return bad(format!("preprocess.blur_sigma must be in (0, 10], got {}", self.blur_sigma));
        }
        if !(self.detector.simplify_fraction > 0.0 && self.detector.simplify_fraction < 0.5) {
            return bad(format!("detector.simplify_fraction must be in (0, 0.5), got {}", self.detector.simplify_fraction));
        }
        if !(self.detector.min_tolerance_px >= 0.0) || !(self.detector.min_area_px >= 0.0) || !(self.detector.partial_min_side_px >= 0.0) {
            return bad("detector size limits must be non-negative".into());
        }
        if !(self.roi_dilation >= 0.0 && self.roi_dilation <= 10.0) {
            return bad(format!("detector.roi_dilation must be in [0, 10], got {}", self.roi_dilation));
        }
        if self.camera.width < 16 || self.camera.height < 16 {
            return bad("camera dimensions must be at least 16 px".into());
        }
        if !self.alpha.is_finite() {
            return bad("pose.alpha must be finite".into());
        }
        Ok(())
    }

    pub fn calibration(&self) -> Result<CalibrationTable> {
        match &self.calibration_file {
            None => Ok(CalibrationTable::measured()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
                CalibrationTable::parse(&text)
            }
        }
    }

    pub fn to_text(&self) -> String {
        let t = &self.threshold;
        let mut s = String::new();
        let _ = writeln!(s, "threshold.initial = {}", t.initial);
        let _ = writeln!(s, "threshold.accept_window = {}", t.accept_window);
        let _ = writeln!(s, "threshold.loss_trigger = {}", t.loss_trigger);
        let _ = writeln!(s, "threshold.range_half_width = {}", t.range_half_width);
        let _ = writeln!(s, "threshold.step = {}", t.step);
        let _ = writeln!(s, "threshold.max_sweeps = {}", t.max_sweeps);
        let _ = writeln!(s, "detector.ratio_tolerance = {}", self.pattern.ratio_tolerance);
        let _ = writeln!(s, "detector.simplify_fraction = {}", self.detector.simplify_fraction);
        let _ = writeln!(s, "detector.min_tolerance_px = {}", self.detector.min_tolerance_px);
        let _ = writeln!(s, "detector.min_contour_area = {}", self.detector.min_area_px);
        let _ = writeln!(s, "detector.partial_min_side_px = {}", self.detector.partial_min_side_px);
        let _ = writeln!(s, "detector.roi_dilation = {}", self.roi_dilation);
        let _ = writeln!(s, "pattern.outer_side_m = {}", self.pattern.outer_side_m);
        let _ = writeln!(s, "camera.width = {}", self.camera.width);
        let _ = writeln!(s, "camera.height = {}", self.camera.height);
        let _ = writeln!(s, "preprocess.blur_sigma = {}", self.blur_sigma);
        if let Some(p) = &self.calibration_file {
            let _ = writeln!(s, "calibration.file = {}", p.display());
        }
        let _ = writeln!(s, "pose.alpha = {}", self.alpha);
        s
    }
}
