//! Landmark-free frames for false-positive checks, and photometric overlays.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::imaging::GrayImage;

/// Families of structured clutter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// Smoothed random field cut at a level.
    Blobs,
    /// Concentric rectangles with area ratios far from the landmark's.
    NestedRectangles,
    Checkerboard,
    /// Blocky glyphs.
    Text,
    /// Concentric triangles, or a triangle in a square, with wrong ratios.
    WrongRatioShapes,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 5] =
        [Self::Blobs, Self::NestedRectangles, Self::Checkerboard, Self::Text, Self::WrongRatioShapes];
}

const W: usize = 640;
const H: usize = 480;

/// `n` frames cycling through every kind.
pub fn noise_corpus(n: usize, rng: &mut impl Rng) -> Vec<GrayImage> {
    (0..n).map(|i| noise_frame(NoiseKind::ALL[i % NoiseKind::ALL.len()], rng)).collect()
}

pub fn noise_frame(kind: NoiseKind, rng: &mut impl Rng) -> GrayImage {
    let (dark, light) = (rng.random_range(15..70u8), rng.random_range(180..245u8));
    let mut canvas = Canvas { img: GrayImage::filled(W, H, dark) };
    match kind {
        NoiseKind::Blobs => blobs(&mut canvas, rng, dark, light),
        NoiseKind::NestedRectangles => {
            for _ in 0..rng.random_range(1..4) {
                nested_rectangles(&mut canvas, rng, dark, light);
            }
        }
        NoiseKind::Checkerboard => checkerboard(&mut canvas, rng, dark, light),
        NoiseKind::Text => text(&mut canvas, rng, dark, light),
        NoiseKind::WrongRatioShapes => {
            for _ in 0..rng.random_range(1..3) {
                wrong_ratio_shapes(&mut canvas, rng, dark, light);
            }
        }
    }
    canvas.img
}

struct Canvas {
    img: GrayImage,
}

impl Canvas {
    fn fill(&mut self, inside: impl Fn(f64, f64) -> bool, v: u8) {
        for y in 0..H {
            for x in 0..W {
                if inside(x as f64 + 0.5, y as f64 + 0.5) {
                    self.img.set(x, y, v);
                }
            }
        }
    }
}

fn rotated_rect(cx: f64, cy: f64, hw: f64, hh: f64, ang: f64) -> impl Fn(f64, f64) -> bool {
    let (s, c) = ang.sin_cos();
    move |x, y| {
        let (dx, dy) = (x - cx, y - cy);
        (dx * c + dy * s).abs() <= hw && (-dx * s + dy * c).abs() <= hh
    }
}

fn triangle(cx: f64, cy: f64, side: f64, ang: f64) -> impl Fn(f64, f64) -> bool {
    // inscribed radius; inside when on the inner side of all three edges
    let r = side / (2.0 * 3f64.sqrt());
    move |x, y| {
        (0..3).all(|k| {
            let a = ang + k as f64 * std::f64::consts::TAU / 3.0;
            (x - cx) * a.cos() + (y - cy) * a.sin() <= r
        })
    }
}

fn blobs(c: &mut Canvas, rng: &mut impl Rng, dark: u8, light: u8) {
    // sum of random bumps, thresholded at its median
    let bumps: Vec<(f64, f64, f64, f64)> = (0..rng.random_range(10..40))
        .map(|_| {
            (
                rng.random_range(0.0..W as f64),
                rng.random_range(0.0..H as f64),
                rng.random_range(15.0..70.0),
                rng.random_range(-1.0..1.0),
            )
        })
        .collect();
    let field = |x: f64, y: f64| -> f64 {
        bumps.iter().map(|&(bx, by, s, a)| a * (-((x - bx).powi(2) + (y - by).powi(2)) / (2.0 * s * s)).exp()).sum()
    };
    let level = rng.random_range(0.05..0.4);
    c.fill(|x, y| field(x, y) > level, light);
    let _ = dark;
}

fn nested_rectangles(c: &mut Canvas, rng: &mut impl Rng, dark: u8, light: u8) {
    let (cx, cy) = (rng.random_range(120.0..520.0), rng.random_range(100.0..380.0));
    let ang = rng.random_range(0.0..std::f64::consts::PI);
    let mut hw = rng.random_range(40.0..110.0);
    let mut hh = hw * rng.random_range(0.6..1.0);
    for level in 0..rng.random_range(2..6) {
        c.fill(rotated_rect(cx, cy, hw, hh, ang), if level % 2 == 0 { light } else { dark });
        let k = rng.random_range(0.45..0.85);
        hw *= k;
        hh *= k;
    }
}

fn checkerboard(c: &mut Canvas, rng: &mut impl Rng, _dark: u8, light: u8) {
    let cell = rng.random_range(12.0..60.0);
    let ang = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
    let (s, co) = (ang.sin(), ang.cos());
    c.fill(
        |x, y| {
            let u = ((x * co + y * s) / cell).floor() as i64;
            let v = ((-x * s + y * co) / cell).floor() as i64;
            (u + v).rem_euclid(2) == 0
        },
        light,
    );
}

const GLYPHS: [[u8; 7]; 10] = [
    [0b01110, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001], // A
    [0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b11111], // E
    [0b10001, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001], // H
    [0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b11111], // L
    [0b11111, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100], // T
    [0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010], // 4
    [0b11110, 0b00001, 0b00001, 0b01110, 0b00001, 0b00001, 0b11110], // 3
    [0b01110, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110], // O
    [0b10001, 0b10001, 0b01010, 0b00100, 0b01010, 0b10001, 0b10001], // X
    [0b10001, 0b10010, 0b10100, 0b11000, 0b10100, 0b10010, 0b10001], // K
];

fn text(c: &mut Canvas, rng: &mut impl Rng, dark: u8, light: u8) {
    c.fill(|_, _| true, light);
    let scale = rng.random_range(3..12usize);
    let mut y0 = rng.random_range(0..20usize);
    while y0 + 7 * scale < H {
        let mut x0 = rng.random_range(0..20usize);
        while x0 + 5 * scale < W {
            if rng.random_bool(0.85) {
                let g = &GLYPHS[rng.random_range(0..GLYPHS.len())];
                for (row, bits) in g.iter().enumerate() {
                    for col in 0..5 {
                        if bits >> (4 - col) & 1 == 1 {
                            for y in y0 + row * scale..y0 + (row + 1) * scale {
                                for x in x0 + col * scale..x0 + (col + 1) * scale {
                                    c.img.set(x, y, dark);
                                }
                            }
                        }
                    }
                }
            }
            x0 += 6 * scale;
        }
        y0 += 9 * scale;
    }
}

fn wrong_ratio_shapes(c: &mut Canvas, rng: &mut impl Rng, dark: u8, light: u8) {
    let (cx, cy) = (rng.random_range(150.0..490.0), rng.random_range(130.0..350.0));
    let ang = rng.random_range(0.0..std::f64::consts::TAU);
    let side = rng.random_range(80.0..220.0);
    // area ratios well outside every accepted window
    let ratio: f64 = *[1.15, 3.5, 6.0, 9.0].get(rng.random_range(0..4)).unwrap();
    match rng.random_range(0..3) {
        0 => {
            c.fill(triangle(cx, cy, side, ang), light);
            c.fill(triangle(cx, cy, side / ratio.sqrt(), ang), dark);
        }
        1 => {
            // square around a triangle
            let tri_area = side * side * 3f64.sqrt() / 4.0 / 2.0;
            let sq_ratio = if ratio < 2.0 { 12.0 } else { ratio * 2.5 };
            let half = (tri_area * sq_ratio).sqrt() / 2.0;
            c.fill(rotated_rect(cx, cy, half, half, ang), light);
            c.fill(triangle(cx, cy, side / 2f64.sqrt(), ang), dark);
        }
        _ => {
            // triangle holding a small square
            c.fill(triangle(cx, cy, side, ang), light);
            // hole ratio 2.8, outside the 2 +- 25% the triangle pair needs
            c.fill(triangle(cx, cy, side * 0.6, ang), dark);
            let tri_area = (side * 0.6).powi(2) * 3f64.sqrt() / 4.0;
            let half = (tri_area / 6.0).sqrt() / 2.0;
            c.fill(rotated_rect(cx, cy, half, half, ang), light);
        }
    }
}

/// Adds a linear ramp from `-amplitude` to `+amplitude` across the frame
/// along direction `angle`.
pub fn add_gradient(img: &GrayImage, amplitude: f64, angle: f64) -> GrayImage {
    let (w, h) = (img.width() as f64, img.height() as f64);
    let (s, c) = angle.sin_cos();
    let extent = 0.5 * (w * c.abs() + h * s.abs());
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let d = (x as f64 + 0.5 - w / 2.0) * c + (y as f64 + 0.5 - h / 2.0) * s;
        (img.get(x, y) as f64 + amplitude * d / extent).round().clamp(0.0, 255.0) as u8
    })
}

pub fn add_gaussian_noise(img: &GrayImage, sigma: f64, rng: &mut impl Rng) -> GrayImage {
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        (img.get(x, y) as f64 + normal.sample(rng)).round().clamp(0.0, 255.0) as u8
    })
}
