//! Relative position, heading and height from a detection.
//!
//! Frames: the image has x to the right and y down, and is mounted so that
//! image x is the vehicle's forward axis and image y its right axis. The world
//! frame is x north, y east; `alpha` is the vehicle yaw measured from north.
//! The world offset `(x_w, y_w)` is the vehicle's position relative to the
//! landmark.

use std::fmt::Write as _;

use crate::contours::Point;
use crate::detector::{Detection, PatternSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraGeom {
    pub width: usize,
    pub height: usize,
    pub image_center: Point,
}

impl CameraGeom {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, image_center: Point::new(width as f64 / 2.0, height as f64 / 2.0) }
    }
}

impl Default for CameraGeom {
    fn default() -> Self {
        Self::new(640, 480)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationRow {
    /// Height in meters.
    pub h: f64,
    /// Pixel side with the landmark at the image centre.
    pub l1: f64,
    /// Pixel side with the landmark `d` pixels off centre.
    pub l2: f64,
}

/// Height versus pixel side length of the larger triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    rows: Vec<CalibrationRow>,
    d: f64,
}

const MEASURED: &str = include_str!("../data/measured.cal");

impl CalibrationTable {
    pub fn new(rows: Vec<CalibrationRow>, d: f64) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::arg("calibration needs at least two rows"));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::arg(format!("calibration offset D must be positive, got {d}")));
        }
        if let Some(r) = rows.iter().find(|r| !(r.h > 0.0 && r.l1 > 0.0 && r.l2 > 0.0)) {
            return Err(Error::arg(format!("calibration values must be positive: {r:?}")));
        }
        for w in rows.windows(2) {
            if !(w[1].h > w[0].h) {
                return Err(Error::arg("calibration heights must be strictly increasing"));
            }
            if !(w[1].l1 < w[0].l1 && w[1].l2 < w[0].l2) {
                return Err(Error::arg(format!("pixel lengths must strictly decrease with height (at H={})", w[1].h)));
            }
        }
        Ok(Self { rows, d })
    }

    /// The measured table shipped with the crate (`data/measured.cal`).
    pub fn measured() -> Self {
        Self::parse(MEASURED).expect("shipped calibration parses")
    }

    pub fn rows(&self) -> &[CalibrationRow] {
        &self.rows
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// Parses `D=<pixels>` followed by `H L1 L2` rows; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut d = None;
        let mut rows = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config { line: i + 1, message };
            if let Some(v) = line.strip_prefix("D=") {
                if d.is_some() {
                    return Err(err("duplicate D".into()));
                }
                d = Some(v.trim().parse::<f64>().map_err(|e| err(format!("bad D: {e}")))?);
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| err(format!("bad number: {e}")))?;
            let [h, l1, l2] = vals[..] else {
                return Err(err(format!("expected `H L1 L2`, got {} fields", vals.len())));
            };
            rows.push(CalibrationRow { h, l1, l2 });
        }
        let d = d.ok_or(Error::Config { line: 0, message: "missing D=<pixels> header".into() })?;
        Self::new(rows, d)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("D={}\n# H L1 L2\n", self.d);
        for r in &self.rows {
            let _ = writeln!(s, "{} {} {}", r.h, r.l1, r.l2);
        }
        s
    }
}

/// Pixel offset of the landmark from the image centre and its length.
pub fn pixel_offset(landmark_center: Point, cam: &CameraGeom) -> (f64, f64, f64) {
    let ex = landmark_center.x - cam.image_center.x;
    let ey = landmark_center.y - cam.image_center.y;
    (ex, ey, ex.hypot(ey))
}

/// Pixel offset scaled to meters using the known side `l1_m` of the triangle
/// that measured `l_pmax` pixels.
pub fn metric_offset(ex: f64, ey: f64, l_pmax: f64, l1_m: f64) -> Result<(f64, f64)> {
    if !(l_pmax > 0.0) {
        return Err(Error::arg(format!("l_pmax must be positive, got {l_pmax}")));
    }
    Ok((l1_m * ex / l_pmax, l1_m * ey / l_pmax))
}

/// Camera-frame offset rotated into the world frame.
pub fn world_offset(xc: f64, yc: f64, alpha: f64) -> (f64, f64) {
    let (s, c) = alpha.sin_cos();
    (-c * xc + s * yc, -s * xc - c * yc)
}

/// Angle of the triangle-to-square arrow from the image's negative y axis,
/// positive toward +x, in (-pi, pi].
pub fn heading_deviation(c3: Point, c4: Point) -> Result<f64> {
    let (dx, dy) = (c4.x - c3.x, c3.y - c4.y);
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::arg("triangle and square centres coincide"));
    }
    Ok(dx.atan2(dy))
}

/// Pixel side at height knot `row`, linearly corrected for an off-centre
/// landmark at `e_o` pixels.
pub fn corrected_length(l1: f64, l2: f64, d: f64, e_o: f64) -> f64 {
    (l2 - l1) / d * e_o + l1
}

/// Height for a measured side `l_pmax` by piecewise-linear interpolation
/// between the corrected knots.
pub fn interpolate_height(l_pmax: f64, table: &CalibrationTable, e_o: f64) -> Result<f64> {
    let knots: Vec<(f64, f64)> =
        table.rows.iter().map(|r| (corrected_length(r.l1, r.l2, table.d, e_o), r.h)).collect();
    if let Some(&(_, h)) = knots.iter().find(|(l, _)| *l == l_pmax) {
        return Ok(h);
    }
    for w in knots.windows(2) {
        let ((la, ha), (lb, hb)) = (w[0], w[1]);
        let (lo, hi) = if la < lb { (la, lb) } else { (lb, la) };
        if lo < l_pmax && l_pmax <= hi {
            return Ok((hb - ha) / (lb - la) * (l_pmax - la) + ha);
        }
    }
    let first = knots[0];
    let last = knots[knots.len() - 1];
    let nearest = if (l_pmax - first.0).abs() <= (l_pmax - last.0).abs() { first.1 } else { last.1 };
    Err(Error::HeightOutOfRange { l_pmax, nearest })
}

/// Side the larger triangle would have, from the side of the smaller one.
pub fn rescale_partial(l_pmax_prime: f64, spec: &PatternSpec) -> f64 {
    l_pmax_prime * spec.tri1_side_m / spec.tri2_side_m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseEstimate {
    pub x_w: f64,
    pub y_w: f64,
    pub h: f64,
    pub theta_w: Option<f64>,
    pub e_o: f64,
    pub l_c: f64,
    /// Side of the larger triangle actually used, in pixels.
    pub l_pmax: f64,
}

pub fn estimate_pose(
    det: &Detection,
    cam: &CameraGeom,
    table: &CalibrationTable,
    spec: &PatternSpec,
    alpha: f64,
) -> Result<PoseEstimate> {
    let mut pose = planar_pose(det, cam, spec, alpha)?;
    pose.h = interpolate_height(pose.l_pmax, table, pose.e_o)?;
    Ok(pose)
}

/// Like [`estimate_pose`], but a scale outside the calibration span reports
/// the nearest table height instead of failing.
pub fn estimate_pose_clamped(
    det: &Detection,
    cam: &CameraGeom,
    table: &CalibrationTable,
    spec: &PatternSpec,
    alpha: f64,
) -> Result<PoseEstimate> {
    let mut pose = planar_pose(det, cam, spec, alpha)?;
    pose.h = match interpolate_height(pose.l_pmax, table, pose.e_o) {
        Ok(h) => h,
        Err(Error::HeightOutOfRange { nearest, .. }) => nearest,
        Err(e) => return Err(e),
    };
    Ok(pose)
}

/// Everything but the height.
fn planar_pose(det: &Detection, cam: &CameraGeom, spec: &PatternSpec, alpha: f64) -> Result<PoseEstimate> {
    let l_pmax = if det.partial { rescale_partial(det.l_pmax, spec) } else { det.l_pmax };
    let (ex, ey, e_o) = pixel_offset(det.landmark_center, cam);
    let (xc, yc) = metric_offset(ex, ey, l_pmax, spec.tri1_side_m)?;
    let (x_w, y_w) = world_offset(xc, yc, alpha);
    let theta_w = det.square_center.and_then(|c4| heading_deviation(det.tri_center, c4).ok());
    Ok(PoseEstimate { x_w, y_w, h: f64::NAN, theta_w, e_o, l_c: xc.hypot(yc), l_pmax })
}
