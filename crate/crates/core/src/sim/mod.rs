//! Closed-loop landing simulation: vision pipeline in the loop with a
//! first-order UAV and a constant-velocity platform.

mod scenario;

use std::fmt;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::imaging::GrayImage;
use crate::pipeline::Tracker;
use crate::pose::{estimate_pose_clamped, CalibrationTable, PoseEstimate};
use crate::scenegen::{build_landmark, geometric_heights, render_frame, synthesize_calibration, CameraModel};

pub use scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Search,
    Hover,
    Track,
    Descend,
    Landed,
    Lost,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Search => "search",
            Phase::Hover => "hover",
            Phase::Track => "track",
            Phase::Descend => "descend",
            Phase::Landed => "landed",
            Phase::Lost => "lost",
        }
    }

    /// Edges of the phase machine (self-loops are always allowed).
    pub fn can_become(self, next: Phase) -> bool {
        use Phase::*;
        self == next
            || matches!(
                (self, next),
                (Search, Hover)
                    | (Search, Lost)
                    | (Hover, Track)
                    | (Hover, Lost)
                    | (Track, Descend)
                    | (Track, Lost)
                    | (Descend, Landed)
                    | (Descend, Lost)
                    | (Lost, Hover)
            )
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Positions are north, east, up in meters; the platform surface is z = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavState {
    pub position: [f64; 3],
    pub yaw: f64,
    pub velocity: [f64; 3],
    pub phase: Phase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlatformState {
    pub position: [f64; 3],
    pub velocity: [f64; 2],
}

/// Velocity after `dt` of first-order relaxation toward `cmd`.
fn relax(v: f64, cmd: f64, dt: f64, tau: f64) -> f64 {
    cmd + (v - cmd) * (-dt / tau).exp()
}

/// Advances the UAV by `dt` with velocity relaxing toward `cmd` (time
/// constant `tau`), integrated exactly. Height is clamped at the platform.
pub fn step(uav: &UavState, cmd: [f64; 3], dt: f64, tau: f64) -> UavState {
    assert!(dt > 0.0 && tau > 0.0, "step needs positive dt and tau");
    let mut next = *uav;
    let decay = tau * (1.0 - (-dt / tau).exp());
    for (i, &c) in cmd.iter().enumerate() {
        next.position[i] += c * dt + (uav.velocity[i] - c) * decay;
        next.velocity[i] = relax(uav.velocity[i], c, dt, tau);
    }
    if next.position[2] <= 0.0 {
        next.position[2] = 0.0;
        next.velocity[2] = next.velocity[2].max(0.0);
    }
    next
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    /// Horizontal proportional gain, 1/s.
    pub k_xy: f64,
    /// Saturation of the proportional horizontal correction.
    pub v_max: f64,
    pub h_track: f64,
    /// Height-hold gain while tracking, 1/s.
    pub k_z: f64,
    pub r_descend: f64,
    pub n_hold: u32,
    pub v_z1: f64,
    pub h_final: f64,
    pub v_z2: f64,
    /// Frames with a pose spent hovering before tracking starts.
    pub hover_frames: u32,
    /// Climb rate after losing the landmark.
    pub v_abort: f64,
    /// Gains of the alpha-beta filter estimating platform velocity.
    pub filter_alpha: f64,
    pub filter_beta: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            k_xy: 0.8,
            v_max: 3.0,
            h_track: 2.5,
            k_z: 0.5,
            r_descend: 0.15,
            n_hold: 15,
            v_z1: 0.4,
            h_final: 0.3,
            v_z2: 1.2,
            hover_frames: 45,
            v_abort: 0.5,
            filter_alpha: 0.5,
            filter_beta: 0.05,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.k_xy, self.v_max, self.h_track, self.k_z, self.r_descend, self.v_z1, self.h_final, self.v_z2];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || !(self.v_abort >= 0.0) {
            return Err(Error::arg("controller gains, speeds and heights must be positive"));
        }
        if self.h_final >= self.h_track {
            return Err(Error::arg("control.h_final must be below control.h_track"));
        }
        if !(self.filter_alpha > 0.0 && self.filter_alpha <= 1.0) || !(self.filter_beta >= 0.0 && self.filter_beta < 1.0) {
            return Err(Error::arg("filter gains must satisfy 0 < alpha <= 1 and 0 <= beta < 1"));
        }
        Ok(())
    }
}

/// What the controller sees each frame.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub pose: Option<&'a PoseEstimate>,
    /// The threshold search gave up.
    pub lost: bool,
    /// The UAV's own velocity (from its flight controller).
    pub velocity: [f64; 3],
    pub dt: f64,
}

/// Proportional visual-servo controller with platform-velocity feed-forward.
#[derive(Debug, Clone)]
pub struct Controller {
    pub config: ControllerConfig,
    pub phase: Phase,
    /// Consecutive frames within `r_descend` while tracking.
    pub hold: u32,
    hover: u32,
    final_drop: bool,
    /// Platform horizontal velocity estimate.
    pub platform_velocity: [f64; 2],
    relative: Option<[f64; 2]>,
    /// Height estimate, dead-reckoned between poses.
    height: Option<f64>,
}

impl Controller {
    /// `handover` is the platform velocity known when vision takes over
    /// (zero for a static platform).
    pub fn new(config: ControllerConfig, handover: [f64; 2]) -> Self {
        Self {
            config,
            phase: Phase::Search,
            hold: 0,
            hover: 0,
            final_drop: false,
            platform_velocity: handover,
            relative: None,
            height: None,
        }
    }

    fn filter(&mut self, obs: &Observation) {
        let c = &self.config;
        let [pn, pe] = self.platform_velocity;
        let predicted = self
            .relative
            .map(|[n, e]| [n + (obs.velocity[0] - pn) * obs.dt, e + (obs.velocity[1] - pe) * obs.dt]);
        match (obs.pose, predicted) {
            (Some(p), Some(pred)) => {
                let innov = [p.x_w - pred[0], p.y_w - pred[1]];
                self.relative = Some([pred[0] + c.filter_alpha * innov[0], pred[1] + c.filter_alpha * innov[1]]);
                let k = c.filter_beta / obs.dt;
                self.platform_velocity = [pn - k * innov[0], pe - k * innov[1]];
            }
            (Some(p), None) => self.relative = Some([p.x_w, p.y_w]),
            (None, pred) => self.relative = pred,
        }
        self.height = match (obs.pose, self.height) {
            (Some(p), _) => Some(p.h),
            (None, h) => h.map(|h| h + obs.velocity[2] * obs.dt),
        };
    }

    fn servo(&self, pose: &PoseEstimate) -> [f64; 2] {
        let c = &self.config;
        let (mut vx, mut vy) = (-c.k_xy * pose.x_w, -c.k_xy * pose.y_w);
        let n = vx.hypot(vy);
        if n > c.v_max {
            vx *= c.v_max / n;
            vy *= c.v_max / n;
        }
        [self.platform_velocity[0] + vx, self.platform_velocity[1] + vy]
    }

    /// Velocity command (north, east, up) for this frame; updates the phase.
    pub fn update(&mut self, obs: Observation) -> [f64; 3] {
        self.filter(&obs);
        let c = self.config;
        let [fn_, fe] = self.platform_velocity;
        let hold = [fn_, fe, 0.0];
        if obs.lost && !self.final_drop && !matches!(self.phase, Phase::Landed | Phase::Lost) {
            self.phase = Phase::Lost;
        }
        match (self.phase, obs.pose) {
            (Phase::Landed, _) => [0.0; 3],
            (Phase::Lost, None) => {
                let climb = match self.height {
                    Some(h) if h >= c.h_track => 0.0,
                    _ => c.v_abort,
                };
                [fn_, fe, climb]
            }
            (Phase::Lost | Phase::Search, Some(_)) => {
                self.phase = Phase::Hover;
                self.hover = 1;
                hold
            }
            (Phase::Search, None) => hold,
            (Phase::Hover, Some(_)) => {
                self.hover += 1;
                if self.hover >= c.hover_frames {
                    self.phase = Phase::Track;
                    self.hold = 0;
                }
                hold
            }
            (Phase::Hover | Phase::Track, None) => hold,
            (Phase::Track, Some(p)) => {
                let [vx, vy] = self.servo(p);
                let vz = (c.k_z * (c.h_track - p.h)).clamp(-c.v_z1, c.v_z1);
                if p.x_w.hypot(p.y_w) < c.r_descend {
                    self.hold += 1;
                    if self.hold >= c.n_hold {
                        self.phase = Phase::Descend;
                    }
                } else {
                    self.hold = 0;
                }
                [vx, vy, vz]
            }
            (Phase::Descend, pose) => {
                if let Some(p) = pose {
                    if p.h <= c.h_final {
                        self.final_drop = true;
                    }
                }
                match (pose, self.final_drop) {
                    (_, true) => [fn_, fe, -c.v_z2],
                    (Some(p), false) => {
                        let [vx, vy] = self.servo(p);
                        [vx, vy, -c.v_z1]
                    }
                    (None, false) => hold,
                }
            }
        }
    }

    /// Called by the simulator at touchdown.
    pub fn touchdown(&mut self) {
        self.phase = Phase::Landed;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub pose: Option<PoseEstimate>,
    /// UAV minus platform position: north, east, height.
    pub truth: [f64; 3],
    pub cmd: [f64; 3],
    pub phase: Phase,
    /// Threshold used on this frame.
    pub threshold: u8,
}

pub const CSV_HEADER: &str = "t,x_w,y_w,h,theta_w,true_dx,true_dy,true_h,cmd_vx,cmd_vy,cmd_vz,phase,threshold";

impl TraceRecord {
    pub fn csv_line(&self) -> String {
        let mut s = format!("{:.4}", self.t);
        match &self.pose {
            Some(p) => {
                let _ = write!(s, ",{:.5},{:.5},{:.5},", p.x_w, p.y_w, p.h);
                if let Some(th) = p.theta_w {
                    let _ = write!(s, "{th:.5}");
                }
            }
            None => s.push_str(",,,,"),
        }
        let [dx, dy, h] = self.truth;
        let [vx, vy, vz] = self.cmd;
        let _ = write!(s, ",{dx:.5},{dy:.5},{h:.5},{vx:.5},{vy:.5},{vz:.5},{},{}", self.phase, self.threshold);
        s
    }

    pub fn horizontal_error(&self) -> Option<f64> {
        self.pose.map(|p| p.x_w.hypot(p.y_w))
    }
}

pub fn trace_csv(trace: &[TraceRecord]) -> String {
    let mut s = String::with_capacity(trace.len() * 96);
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in trace {
        s.push_str(&r.csv_line());
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    /// Horizontal offset from the landmark origin and relative speed at touchdown.
    Landed { offset: f64, speed: f64, time: f64 },
    Lost { time: f64 },
    Timeout,
}

impl Outcome {
    pub fn landed(&self) -> bool {
        matches!(self, Outcome::Landed { .. })
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Landed { offset, speed, time } => {
                write!(f, "landed offset={offset:.4} speed={speed:.4} time={time:.3}")
            }
            Outcome::Lost { time } => write!(f, "lost time={time:.3}"),
            Outcome::Timeout => f.write_str("timeout"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub trace: Vec<TraceRecord>,
    pub outcome: Outcome,
}

/// Calibration heights used when a scenario does not bring its own table.
pub fn default_calibration_heights() -> Vec<f64> {
    geometric_heights(0.3, 2.8, 24)
}

/// Pixel offset of the off-centre calibration column.
pub const CALIBRATION_OFFSET_PX: f64 = 160.0;

/// Renders the scenario camera's own calibration table.
pub fn calibrate_for(scenario: &Scenario) -> Result<CalibrationTable> {
    let lm = build_landmark(&scenario.pipeline.pattern);
    synthesize_calibration(
        &scenario.camera(),
        &lm,
        &scenario.pipeline,
        &default_calibration_heights(),
        CALIBRATION_OFFSET_PX,
    )
}

pub fn run(scenario: &Scenario) -> Result<SimResult> {
    scenario.validate()?;
    let table = match &scenario.calibration {
        Some(t) => t.clone(),
        None => calibrate_for(scenario)?,
    };
    let lm = build_landmark(&scenario.pipeline.pattern);
    let mut tracker = Tracker::new(scenario.pipeline.clone(), table)?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let dt = 1.0 / scenario.fps;
    let frames = (scenario.duration * scenario.fps).ceil() as usize;
    let lost_frames = (scenario.lost_timeout * scenario.fps).ceil() as usize;

    let course = scenario.platform_course;
    let speed = scenario.platform_speed_kmh / 3.6;
    let mut platform = PlatformState { position: [0.0; 3], velocity: [speed * course.cos(), speed * course.sin()] };
    let [n0, e0, h0] = scenario.uav_start;
    let mut uav = UavState {
        position: [n0, e0, h0],
        yaw: scenario.uav_yaw,
        velocity: [platform.velocity[0] + scenario.handover_error[0], platform.velocity[1] + scenario.handover_error[1], 0.0],
        phase: Phase::Search,
    };
    let mut controller = Controller::new(scenario.control, [uav.velocity[0], uav.velocity[1]]);
    let mut wind = [0.0f64; 2];
    let (w, h) = (scenario.pipeline.camera.width, scenario.pipeline.camera.height);
    let blank = GrayImage::new(w, h, vec![scenario.background; w * h])?;

    let mut trace = Vec::with_capacity(frames);
    let mut lost_for = 0usize;
    let mut outcome = Outcome::Timeout;
    for k in 0..frames {
        let t = k as f64 * dt;
        let rel = relative(&uav, &platform);
        let frame = if scenario.landmark_present {
            let cam = CameraModel { position: rel, yaw: uav.yaw, ..scenario.camera() };
            render_frame(&lm, &cam, scenario.background)?.image
        } else {
            blank.clone()
        };
        let report = tracker.process_with_yaw(&frame, uav.yaw)?;
        let pose = report.detection.as_ref().and_then(|d| {
            let cfg = &tracker.config;
            estimate_pose_clamped(d, &cfg.camera, &tracker.table, &cfg.pattern, uav.yaw).ok()
        });
        let cmd = controller.update(Observation { pose: pose.as_ref(), lost: report.lost, velocity: uav.velocity, dt });
        debug_assert!(uav.phase.can_become(controller.phase));
        uav.phase = controller.phase;
        trace.push(TraceRecord { t, pose, truth: rel, cmd, phase: uav.phase, threshold: report.threshold });

        if uav.phase == Phase::Lost {
            lost_for += 1;
            if lost_for >= lost_frames {
                outcome = Outcome::Lost { time: t };
                break;
            }
        } else {
            lost_for = 0;
        }

        // Band-limited horizontal gusts: an Ornstein-Uhlenbeck acceleration.
        if scenario.wind_amplitude > 0.0 {
            let a = (-dt / scenario.wind_correlation).exp();
            let s = scenario.wind_amplitude * (1.0 - a * a).sqrt();
            for w in &mut wind {
                let z: f64 = StandardNormal.sample(&mut rng);
                *w = a * *w + s * z;
            }
        }
        let mut pushed = uav;
        pushed.velocity[0] += wind[0] * dt;
        pushed.velocity[1] += wind[1] * dt;
        let vz_hit = relax(pushed.velocity[2], cmd[2], dt, scenario.tau);
        uav = step(&pushed, cmd, dt, scenario.tau);
        for i in 0..2 {
            platform.position[i] += platform.velocity[i] * dt;
        }
        if uav.position[2] <= 0.0 && uav.phase == Phase::Descend {
            let rel = relative(&uav, &platform);
            let dv = [uav.velocity[0] - platform.velocity[0], uav.velocity[1] - platform.velocity[1], vz_hit];
            let speed = (dv[0] * dv[0] + dv[1] * dv[1] + dv[2] * dv[2]).sqrt();
            outcome = Outcome::Landed { offset: rel[0].hypot(rel[1]), speed, time: t + dt };
            controller.touchdown();
            trace.push(TraceRecord { t: t + dt, pose: None, truth: rel, cmd: [0.0; 3], phase: Phase::Landed, threshold: report.threshold });
            break;
        }
    }
    Ok(SimResult { trace, outcome })
}

fn relative(uav: &UavState, platform: &PlatformState) -> [f64; 3] {
    [
        uav.position[0] - platform.position[0],
        uav.position[1] - platform.position[1],
        uav.position[2] - platform.position[2],
    ]
}
