//! Ground-truth synthetic frames of the landmark.
//!
//! The landmark lies in the ground plane with its frame aligned to the world:
//! x north, y east. Cameras look down with image x along the body's forward
//! axis and image y along its right axis.

mod corpus;

pub use corpus::{add_gaussian_noise, add_gradient, noise_corpus, noise_frame, NoiseKind};

use std::fmt::Write as _;

use rand::Rng;

use crate::contours::{polygon_area, polygon_centroid, Point};
use crate::config::PipelineConfig;
use crate::detector::PatternSpec;
use crate::error::{Error, Result};
use crate::imaging::GrayImage;
use crate::pipeline::{detect_at, preprocess};
use crate::pose::{CalibrationRow, CalibrationTable};

#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkShape {
    /// Landmark-plane vertices in meters.
    pub polygon: Vec<Point>,
    pub white: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkModel {
    /// Outer to inner.
    pub shapes: Vec<LandmarkShape>,
    /// Centroid of the larger triangle; also the landmark origin.
    pub arrow_origin: Point,
    /// Centre of the outer square.
    pub arrow_tip: Point,
    pub white_level: u8,
    pub black_level: u8,
}

/// Offset of the square centres from the triangle centroid, as a fraction of
/// the inner square's side.
pub const SQUARE_OFFSET_FRACTION: f64 = 0.15;

/// The core square is the largest square standing on the small triangle's
/// base, shrunk by this factor so a black rim separates it from the triangle
/// edges.
pub const CORE_SQUARE_SHRINK: f64 = 0.95;

fn square(center: Point, side: f64) -> Vec<Point> {
    let h = side / 2.0;
    vec![
        center + Point::new(-h, -h),
        center + Point::new(h, -h),
        center + Point::new(h, h),
        center + Point::new(-h, h),
    ]
}

/// Equilateral triangle centred on the origin with its apex toward -y.
fn triangle(side: f64) -> Vec<Point> {
    let r = side / 3f64.sqrt();
    vec![Point::new(0.0, -r), Point::new(side / 2.0, r / 2.0), Point::new(-side / 2.0, r / 2.0)]
}

/// Builds the five-shape layout: two squares sharing a centre, two concentric
/// triangles offset from it, and a small square on the inner triangle's base.
/// The arrow (triangle centroid to square centre) points along -y.
pub fn build_landmark(spec: &PatternSpec) -> LandmarkModel {
    let areas = spec.areas_m2();
    let s1 = spec.outer_side_m;
    let s2 = areas[1].sqrt();
    let tip = Point::new(0.0, -SQUARE_OFFSET_FRACTION * s2);

    let (a1, a2) = (spec.tri1_side_m, spec.tri2_side_m);
    let base_y = a2 / 3f64.sqrt() / 2.0;
    // largest square on the base: its top corners touch the slanted edges
    let fit = a2 * 3f64.sqrt() / (2.0 + 3f64.sqrt());
    let core = fit * CORE_SQUARE_SHRINK;
    let core_center = Point::new(0.0, base_y - fit / 2.0);

    let shapes = vec![
        LandmarkShape { polygon: square(tip, s1), white: true },
        LandmarkShape { polygon: square(tip, s2), white: false },
        LandmarkShape { polygon: triangle(a1), white: true },
        LandmarkShape { polygon: triangle(a2), white: false },
        LandmarkShape { polygon: square(core_center, core), white: true },
    ];
    LandmarkModel { shapes, arrow_origin: Point::default(), arrow_tip: tip, white_level: 220, black_level: 30 }
}

impl LandmarkModel {
    pub fn areas(&self) -> Vec<f64> {
        self.shapes.iter().map(|s| polygon_area(&s.polygon)).collect()
    }

    /// Intensity at a landmark-plane point, `None` outside the landmark.
    fn sample(&self, p: Point) -> Option<u8> {
        let mut level = None;
        for s in &self.shapes {
            if !point_in_polygon(&s.polygon, p) {
                break;
            }
            level = Some(if s.white { self.white_level } else { self.black_level });
        }
        level
    }
}

fn point_in_polygon(poly: &[Point], p: Point) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a.y > p.y) != (b.y > p.y) && p.x < a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y) {
            inside = !inside;
        }
    }
    inside
}

/// Pinhole camera with one radial distortion coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub focal_px: f64,
    pub principal: Point,
    pub width: usize,
    pub height: usize,
    /// Radial distortion `r_d = r (1 + k1 r^2)` on normalized coordinates.
    pub k1: f64,
    /// North, east and height of the camera relative to the landmark origin.
    pub position: [f64; 3],
    /// Rotation about the down axis, from north toward east.
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

/// Focal length that puts the larger triangle at about 64 px from 0.79 m.
pub const DEFAULT_FOCAL_PX: f64 = 247.5;

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            focal_px: DEFAULT_FOCAL_PX,
            principal: Point::new(320.0, 240.0),
            width: 640,
            height: 480,
            k1: 0.0,
            position: [0.0, 0.0, 1.0],
            yaw: 0.0,
            pitch: 0.0,
            roll: 0.0,
        }
    }
}

type Mat3 = [[f64; 3]; 3];

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

impl CameraModel {
    pub fn nadir(north: f64, east: f64, height: f64) -> Self {
        Self { position: [north, east, height], ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.focal_px > 0.0) || self.width == 0 || self.height == 0 {
            return Err(Error::arg("camera needs positive focal length and size"));
        }
        if !(self.position[2] > 0.0) {
            return Err(Error::arg("camera must be above the landmark plane"));
        }
        Ok(())
    }

    /// Body-to-world rotation in north-east-down axes.
    fn rotation(&self) -> Mat3 {
        let (sy, cy) = self.yaw.sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        let (sr, cr) = self.roll.sin_cos();
        let rz = [[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]];
        let ry = [[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]];
        let rx = [[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]];
        mat_mul(&mat_mul(&rz, &ry), &rx)
    }

    fn distort(&self, x: f64, y: f64) -> (f64, f64) {
        let f = 1.0 + self.k1 * (x * x + y * y);
        (x * f, y * f)
    }

    /// Inverse of the radial model by Newton iteration on the radius.
    fn undistort(&self, xd: f64, yd: f64) -> Option<(f64, f64)> {
        let rd = xd.hypot(yd);
        if self.k1 == 0.0 || rd == 0.0 {
            return Some((xd, yd));
        }
        let mut r = rd;
        for _ in 0..20 {
            let g = r * (1.0 + self.k1 * r * r) - rd;
            let dg = 1.0 + 3.0 * self.k1 * r * r;
            if dg <= 0.0 {
                return None;
            }
            let next = r - g / dg;
            if (next - r).abs() < 1e-12 {
                r = next;
                break;
            }
            r = next;
        }
        if !(r > 0.0) || (r * (1.0 + self.k1 * r * r) - rd).abs() > 1e-9 {
            return None;
        }
        Some((xd * r / rd, yd * r / rd))
    }

    /// Image position of a ground point (north, east), `None` behind the camera.
    pub fn project(&self, p: Point) -> Option<Point> {
        let r = self.rotation();
        let v = [p.x - self.position[0], p.y - self.position[1], self.position[2]];
        // body = R^T v
        let b: Vec<f64> = (0..3).map(|j| (0..3).map(|i| r[i][j] * v[i]).sum()).collect();
        if b[2] <= 1e-9 {
            return None;
        }
        let (xd, yd) = self.distort(b[0] / b[2], b[1] / b[2]);
        Some(Point::new(self.principal.x + self.focal_px * xd, self.principal.y + self.focal_px * yd))
    }

    /// Ground point seen at image position `q`.
    pub fn unproject(&self, q: Point) -> Option<Point> {
        let (xu, yu) = self.undistort((q.x - self.principal.x) / self.focal_px, (q.y - self.principal.y) / self.focal_px)?;
        let r = self.rotation();
        let d: Vec<f64> = (0..3).map(|i| r[i][0] * xu + r[i][1] * yu + r[i][2]).collect();
        if d[2] <= 1e-9 {
            return None;
        }
        let t = self.position[2] / d[2];
        Some(Point::new(self.position[0] + t * d[0], self.position[1] + t * d[1]))
    }
}

/// Projected geometry of a rendered frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Projected vertices per shape, outer to inner; may lie outside the frame.
    pub shapes: Vec<Vec<Point>>,
    pub landmark_center: Point,
    /// Projected outer square centre.
    pub square_center: Point,
    pub e_o: f64,
    /// Longest projected side of the larger triangle.
    pub l_pmax: f64,
    /// Camera height above the landmark.
    pub height: f64,
}

impl GroundTruth {
    /// `shape vertex x y` per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, shape) in self.shapes.iter().enumerate() {
            for (j, p) in shape.iter().enumerate() {
                let _ = writeln!(s, "{i} {j} {:.4} {:.4}", p.x, p.y);
            }
        }
        s
    }

    pub fn projected_side(&self, shape: usize) -> f64 {
        let v = &self.shapes[shape];
        (0..v.len()).map(|i| v[i].dist(v[(i + 1) % v.len()])).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct Rendered {
    pub image: GrayImage,
    /// `None` when no part of the landmark is in view.
    pub truth: Option<GroundTruth>,
}

/// Rasterizes the landmark by casting one ray per pixel centre onto the
/// ground plane. Pixels off the landmark get `background`.
pub fn render_frame(lm: &LandmarkModel, cam: &CameraModel, background: u8) -> Result<Rendered> {
    cam.validate()?;
    let (x0, y0, x1, y1) = footprint(lm, cam);
    let mut any = false;
    let image = GrayImage::from_fn(cam.width, cam.height, |x, y| {
        if x < x0 || x >= x1 || y < y0 || y >= y1 {
            return background;
        }
        let q = Point::new(x as f64 + 0.5, y as f64 + 0.5);
        match cam.unproject(q).and_then(|g| lm.sample(g)) {
            Some(v) => {
                any = true;
                v
            }
            None => background,
        }
    });
    if !any {
        return Ok(Rendered { image, truth: None });
    }
    let project_all = |pts: &[Point]| pts.iter().map(|&p| cam.project(p)).collect::<Option<Vec<Point>>>();
    let shapes: Option<Vec<Vec<Point>>> = lm.shapes.iter().map(|s| project_all(&s.polygon)).collect();
    let (Some(shapes), Some(center), Some(square_center)) =
        (shapes, cam.project(lm.arrow_origin), cam.project(lm.arrow_tip))
    else {
        return Ok(Rendered { image, truth: None });
    };
    let tri = &shapes[2];
    let l_pmax = (0..3).map(|i| tri[i].dist(tri[(i + 1) % 3])).fold(0.0, f64::max);
    let e_o = center.dist(Point::new(cam.width as f64 / 2.0, cam.height as f64 / 2.0));
    let truth = GroundTruth { shapes, landmark_center: center, square_center, e_o, l_pmax, height: cam.position[2] };
    Ok(Rendered { image, truth: Some(truth) })
}

/// Pixel box `[x0, x1) x [y0, y1)` that can contain the landmark. Edges are
/// sampled densely since distortion bows them; the whole frame is returned
/// when part of the outline is behind the camera.
fn footprint(lm: &LandmarkModel, cam: &CameraModel) -> (usize, usize, usize, usize) {
    let full = (0, 0, cam.width, cam.height);
    let outline = &lm.shapes[0].polygon;
    let (mut lo, mut hi) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for i in 0..outline.len() {
        let (a, b) = (outline[i], outline[(i + 1) % outline.len()]);
        for k in 0..32 {
            let Some(q) = cam.project(a + (b - a) * (k as f64 / 32.0)) else { return full };
            lo = Point::new(lo.x.min(q.x), lo.y.min(q.y));
            hi = Point::new(hi.x.max(q.x), hi.y.max(q.y));
        }
    }
    let clamp = |v: f64, max: usize| v.clamp(0.0, max as f64) as usize;
    (clamp(lo.x - 2.0, cam.width), clamp(lo.y - 2.0, cam.height), clamp(hi.x + 3.0, cam.width), clamp(hi.y + 3.0, cam.height))
}

/// Ground offset (meters, along north) that puts the landmark centre `d`
/// pixels right of the image centre for a level camera at `height`.
pub fn offset_for_pixels(cam: &CameraModel, d: f64, height: f64) -> Result<f64> {
    let level = CameraModel { position: [0.0, 0.0, height], yaw: 0.0, pitch: 0.0, roll: 0.0, ..*cam };
    let q = Point::new(level.principal.x + d, level.principal.y);
    let g = level.unproject(q).ok_or_else(|| Error::arg(format!("offset {d} px is outside the lens model")))?;
    Ok(g.x)
}

/// Sub-pixel shifts (in pixels) averaged over for every calibration entry.
const CALIBRATION_JITTER: [(f64, f64); 4] = [(0.0, 0.0), (0.5, 0.25), (0.25, 0.75), (0.75, 0.5)];

/// Renders the landmark centred and `d` pixels off centre at each height and
/// measures the larger triangle with the detector, like a manual calibration.
/// Each entry is the mean over a few sub-pixel placements.
pub fn synthesize_calibration(
    cam: &CameraModel,
    lm: &LandmarkModel,
    cfg: &PipelineConfig,
    heights: &[f64],
    d: f64,
) -> Result<CalibrationTable> {
    if heights.len() < 2 || heights.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::arg("calibration needs at least two increasing heights"));
    }
    let threshold = ((lm.white_level as u16 + lm.black_level as u16) / 2) as u8;
    let measure = |north: f64, h: f64| -> Result<f64> {
        let mut sum = 0.0;
        for (jx, jy) in CALIBRATION_JITTER {
            let (dn, de) = (jx * h / cam.focal_px, jy * h / cam.focal_px);
            let view = CameraModel { position: [dn - north, de, h], yaw: 0.0, pitch: 0.0, roll: 0.0, ..*cam };
            let frame = render_frame(lm, &view, lm.black_level)?;
            let img = preprocess(&frame.image, cfg.camera.width, cfg.camera.height, cfg.blur_sigma)?;
            match detect_at(&img, threshold, &cfg.pattern, &cfg.detector) {
                Some(det) if !det.partial => sum += det.l_pmax,
                Some(_) => {
                    return Err(Error::Calibration { height: h, message: "only the inner shapes were found".into() })
                }
                None => return Err(Error::Calibration { height: h, message: "landmark not detected".into() }),
            }
        }
        Ok(sum / CALIBRATION_JITTER.len() as f64)
    };
    let mut rows = Vec::with_capacity(heights.len());
    for &h in heights {
        let l1 = measure(0.0, h)?;
        let l2 = measure(offset_for_pixels(cam, d, h)?, h)?;
        rows.push(CalibrationRow { h, l1, l2 });
    }
    CalibrationTable::new(rows, d).map_err(|e| Error::Calibration { height: heights[0], message: e.to_string() })
}

/// `n` heights spaced geometrically from `lo` to `hi`.
pub fn geometric_heights(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let ratio = (hi / lo).powf(1.0 / (n - 1) as f64);
    (0..n).map(|i| if i + 1 == n { hi } else { lo * ratio.powi(i as i32) }).collect()
}

/// A view of the landmark from a random height in `heights` and random yaw,
/// placed so that the landmark origin lands uniformly inside the central
/// half of the frame (at most a quarter frame from the principal point).
pub fn random_view(rng: &mut impl Rng, base: &CameraModel, heights: (f64, f64)) -> CameraModel {
    let h = rng.random_range(heights.0..=heights.1);
    let yaw = rng.random_range(0.0..std::f64::consts::TAU);
    let du = rng.random_range(-0.25..=0.25) * base.width as f64;
    let dv = rng.random_range(-0.25..=0.25) * base.height as f64;
    let at_origin = CameraModel { position: [0.0, 0.0, h], yaw, ..*base };
    let g = at_origin
        .unproject(Point::new(base.principal.x + du, base.principal.y + dv))
        .expect("central pixels always see the ground");
    CameraModel { position: [-g.x, -g.y, h], ..at_origin }
}

/// Photometric perturbations for robustness corpora.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub heights: (f64, f64),
    /// The illumination ramp reaches `±a` at the frame edges, `a` drawn
    /// from `[0, gradient]`.
    pub gradient: f64,
    pub noise_sigma: f64,
    /// Range of the (dark) platform level around the landmark.
    pub background: (u8, u8),
}

impl Default for Perturbation {
    fn default() -> Self {
        Self { heights: (0.6, 2.5), gradient: 40.0, noise_sigma: 5.0, background: (20, 80) }
    }
}

/// A randomly posed, lit and noised frame together with its ground truth.
pub fn perturbed_view(
    rng: &mut impl Rng,
    lm: &LandmarkModel,
    base: &CameraModel,
    p: &Perturbation,
) -> Result<(GrayImage, GroundTruth, CameraModel)> {
    let cam = random_view(rng, base, p.heights);
    let background = rng.random_range(p.background.0..=p.background.1);
    let amplitude = rng.random_range(0.0..=p.gradient);
    let angle = rng.random_range(0.0..std::f64::consts::TAU);
    let r = render_frame(lm, &cam, background)?;
    let truth = r.truth.ok_or_else(|| Error::arg("random view missed the landmark"))?;
    let lit = add_gradient(&r.image, amplitude, angle);
    Ok((add_gaussian_noise(&lit, p.noise_sigma, rng), truth, cam))
}

/// Centroid of the projected polygon of `shape`.
pub fn projected_centroid(truth: &GroundTruth, shape: usize) -> Point {
    polygon_centroid(&truth.shapes[shape])
}

#[cfg(test)]
mod tests;
