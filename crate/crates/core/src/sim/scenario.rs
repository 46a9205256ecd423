use std::fmt::Write as _;

use crate::config::{parse_entries, PipelineConfig};
use crate::error::{Error, Result};
use crate::pose::CalibrationTable;
use crate::scenegen::{CameraModel, DEFAULT_FOCAL_PX};

use super::ControllerConfig;

/// Height and base radius of the cone inside which vision takes over.
pub const APPROACH_CONE_HEIGHT: f64 = 3.0;
pub const APPROACH_CONE_RADIUS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub fps: f64,
    pub duration: f64,
    pub seed: u64,
    pub platform_speed_kmh: f64,
    /// Direction of platform travel, radians from north toward east.
    pub platform_course: f64,
    /// North, east and height of the UAV relative to the platform centre.
    pub uav_start: [f64; 3],
    pub uav_yaw: f64,
    /// Error of the platform velocity handed over when vision takes over;
    /// the UAV starts flying at platform velocity plus this.
    pub handover_error: [f64; 2],
    /// Velocity time constant of the UAV.
    pub tau: f64,
    /// Standard deviation of the horizontal gust acceleration, m/s^2.
    pub wind_amplitude: f64,
    pub wind_correlation: f64,
    pub control: ControllerConfig,
    pub focal_px: f64,
    pub k1: f64,
    /// Platform surface level around the landmark (dark).
    pub background: u8,
    pub landmark_present: bool,
    /// Seconds spent in the lost phase before giving up.
    pub lost_timeout: f64,
    pub pipeline: PipelineConfig,
    /// Rendered from the scenario camera when `None`.
    pub calibration: Option<CalibrationTable>,
}

impl Default for Scenario {
    /// Static platform, no wind, UAV hovering off-centre at tracking height.
    fn default() -> Self {
        Self {
            fps: 30.0,
            duration: 60.0,
            seed: 1,
            platform_speed_kmh: 0.0,
            platform_course: 0.0,
            uav_start: [0.9, -0.7, 2.5],
            uav_yaw: 0.3,
            handover_error: [0.0, 0.0],
            tau: 0.5,
            wind_amplitude: 0.0,
            wind_correlation: 1.0,
            control: ControllerConfig::default(),
            focal_px: DEFAULT_FOCAL_PX,
            k1: -0.05,
            background: 50,
            landmark_present: true,
            lost_timeout: 2.0,
            pipeline: PipelineConfig::default(),
            calibration: None,
        }
    }
}

impl Scenario {
    /// The moving-platform experiment: a car at 13.5 km/h.
    pub fn moving() -> Self {
        Self { platform_speed_kmh: 13.5, platform_course: 0.4, handover_error: [-0.4, 0.3], ..Self::default() }
    }

    pub fn camera(&self) -> CameraModel {
        let (w, h) = (self.pipeline.camera.width, self.pipeline.camera.height);
        CameraModel {
            focal_px: self.focal_px,
            k1: self.k1,
            width: w,
            height: h,
            principal: self.pipeline.camera.image_center,
            ..CameraModel::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config { line: 0, message: m.to_string() });
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return bad("scenario.fps must be positive");
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) || !(self.lost_timeout > 0.0) {
            return bad("scenario durations must be positive");
        }
        if !(self.tau > 0.0) || !(self.wind_amplitude >= 0.0) || !(self.wind_correlation > 0.0) {
            return bad("uav.tau and wind.correlation must be positive, wind.amplitude non-negative");
        }
        if !self.handover_error.iter().all(|v| v.is_finite()) {
            return bad("handover error must be finite");
        }
        if !(self.platform_speed_kmh >= 0.0 && self.platform_speed_kmh.is_finite()) {
            return bad("platform.speed_kmh must be non-negative");
        }
        let [n, e, h] = self.uav_start;
        if !(h > 0.0 && h <= APPROACH_CONE_HEIGHT) || n.hypot(e) > APPROACH_CONE_RADIUS * h / APPROACH_CONE_HEIGHT {
            return bad("initial UAV position must lie inside the approach cone");
        }
        if !(self.focal_px > 0.0) {
            return bad("camera.focal_px must be positive");
        }
        self.control.validate()?;
        self.pipeline.validate()
    }

    /// Parses `key = value` text over the defaults. The pipeline and
    /// calibration are left at their defaults; callers attach their own.
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Self::default();
        for e in parse_entries(text)? {
            let c = &mut s.control;
            match e.key.as_str() {
                "scenario.fps" => s.fps = e.parse()?,
                "scenario.duration" => s.duration = e.parse()?,
                "scenario.seed" => s.seed = e.parse()?,
                "scenario.lost_timeout" => s.lost_timeout = e.parse()?,
                "scenario.landmark" => s.landmark_present = e.parse()?,
                "scenario.background" => s.background = e.parse()?,
                "platform.speed_kmh" => s.platform_speed_kmh = e.parse()?,
                "platform.course" => s.platform_course = e.parse()?,
                "uav.north" => s.uav_start[0] = e.parse()?,
                "uav.east" => s.uav_start[1] = e.parse()?,
                "uav.height" => s.uav_start[2] = e.parse()?,
                "uav.yaw" => s.uav_yaw = e.parse()?,
                "uav.handover_error_north" => s.handover_error[0] = e.parse()?,
                "uav.handover_error_east" => s.handover_error[1] = e.parse()?,
                "uav.tau" => s.tau = e.parse()?,
                "wind.amplitude" => s.wind_amplitude = e.parse()?,
                "wind.correlation" => s.wind_correlation = e.parse()?,
                "camera.focal_px" => s.focal_px = e.parse()?,
                "camera.k1" => s.k1 = e.parse()?,
                "control.k_xy" => c.k_xy = e.parse()?,
                "control.v_max" => c.v_max = e.parse()?,
                "control.h_track" => c.h_track = e.parse()?,
                "control.k_z" => c.k_z = e.parse()?,
                "control.r_descend" => c.r_descend = e.parse()?,
                "control.n_hold" => c.n_hold = e.parse()?,
                "control.v_z1" => c.v_z1 = e.parse()?,
                "control.h_final" => c.h_final = e.parse()?,
                "control.v_z2" => c.v_z2 = e.parse()?,
                "control.hover_frames" => c.hover_frames = e.parse()?,
                "control.v_abort" => c.v_abort = e.parse()?,
                "control.filter_alpha" => c.filter_alpha = e.parse()?,
                "control.filter_beta" => c.filter_beta = e.parse()?,
                _ => return Err(e.unknown()),
            }
        }
        Ok(s)
    }

    pub fn to_text(&self) -> String {
        let c = &self.control;
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("scenario.fps", &self.fps);
        kv("scenario.duration", &self.duration);
        kv("scenario.seed", &self.seed);
        kv("scenario.lost_timeout", &self.lost_timeout);
        kv("scenario.landmark", &self.landmark_present);
        kv("scenario.background", &self.background);
        kv("platform.speed_kmh", &self.platform_speed_kmh);
        kv("platform.course", &self.platform_course);
        kv("uav.north", &self.uav_start[0]);
        kv("uav.east", &self.uav_start[1]);
        kv("uav.height", &self.uav_start[2]);
        kv("uav.yaw", &self.uav_yaw);
        kv("uav.handover_error_north", &self.handover_error[0]);
        kv("uav.handover_error_east", &self.handover_error[1]);
        kv("uav.tau", &self.tau);
        kv("wind.amplitude", &self.wind_amplitude);
        kv("wind.correlation", &self.wind_correlation);
        kv("camera.focal_px", &self.focal_px);
        kv("camera.k1", &self.k1);
        kv("control.k_xy", &c.k_xy);
        kv("control.v_max", &c.v_max);
        kv("control.h_track", &c.h_track);
        kv("control.k_z", &c.k_z);
        kv("control.r_descend", &c.r_descend);
        kv("control.n_hold", &c.n_hold);
        kv("control.v_z1", &c.v_z1);
        kv("control.h_final", &c.h_final);
        kv("control.v_z2", &c.v_z2);
        kv("control.hover_frames", &c.hover_frames);
        kv("control.v_abort", &c.v_abort);
        kv("control.filter_alpha", &c.filter_alpha);
        kv("control.filter_beta", &c.filter_beta);
        s
    }
}
