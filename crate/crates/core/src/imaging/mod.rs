//! 8-bit raster containers, PGM I/O and the preprocessing filters.

mod filter;
mod pgm;

pub use filter::{gaussian_blur, resize, WORKING_HEIGHT, WORKING_WIDTH};
pub use pgm::{load_pgm, save_pgm};

use crate::error::{Error, Result};

/// Read access shared by gray and binary rasters.
pub trait Raster {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    /// Row-major samples, `width * height` long.
    fn pixels(&self) -> &[u8];
}

/// Row-major 8-bit grayscale image.
#[derive(Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GrayImage({}x{})", self.width, self.height)
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::arg(format!("image dimensions must be >= 1, got {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::arg(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be >= 1");
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut img = Self::filled(width, height, 0);
        for y in 0..height {
            for x in 0..width {
                img.data[y * width + x] = f(x, y);
            }
        }
        img
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.data[y * self.width + x] = value;
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    /// Adds `delta` to every pixel, saturating at 0 and 255.
    pub fn brightened(&self, delta: i32) -> Self {
        let data = self.data.iter().map(|&v| (v as i32 + delta).clamp(0, 255) as u8).collect();
        Self { width: self.width, height: self.height, data }
    }
}

impl Raster for GrayImage {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn pixels(&self) -> &[u8] {
        &self.data
    }
}

/// Row-major image whose samples are exactly 0 or 255.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for BinaryImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BinaryImage({}x{})", self.width, self.height)
    }
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::arg(format!(
                "binary image {width}x{height} with {} samples",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|&v| v != 0 && v != 255) {
            return Err(Error::arg(format!("sample {pos} is {}, expected 0 or 255", data[pos])));
        }
        Ok(Self { width, height, data })
    }

    /// Builds from a predicate; `true` maps to 255.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be >= 1");
        let mut data = vec![0u8; width * height];
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    data[y * width + x] = 255;
                }
            }
        }
        Self { width, height, data }
    }

    pub(crate) fn from_raw_unchecked(width: usize, height: usize, data: Vec<u8>) -> Self {
        debug_assert!(data.iter().all(|&v| v == 0 || v == 255));
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// True for a white (255) pixel.
    #[inline]
    pub fn is_set(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] != 0
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn to_gray(&self) -> GrayImage {
        GrayImage { width: self.width, height: self.height, data: self.data.clone() }
    }
}

impl Raster for BinaryImage {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn pixels(&self) -> &[u8] {
        &self.data
    }
}

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Roi {
    pub x0: i64,
    pub y0: i64,
    pub w: i64,
    pub h: i64,
}

impl Roi {
    pub fn new(x0: i64, y0: i64, w: i64, h: i64) -> Self {
        Self { x0, y0, w, h }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self::new(0, 0, width as i64, height as i64)
    }

    /// Smallest rectangle containing all points.
    pub fn bounding(points: impl IntoIterator<Item = (f64, f64)>) -> Option<Self> {
        let mut it = points.into_iter();
        let (x, y) = it.next()?;
        let (mut xmin, mut xmax, mut ymin, mut ymax) = (x, x, y, y);
        for (x, y) in it {
            xmin = xmin.min(x);
            xmax = xmax.max(x);
            ymin = ymin.min(y);
            ymax = ymax.max(y);
        }
        let x0 = xmin.floor() as i64;
        let y0 = ymin.floor() as i64;
        Some(Self::new(x0, y0, xmax.ceil() as i64 - x0 + 1, ymax.ceil() as i64 - y0 + 1))
    }

    /// Grows each side by `fraction` of the corresponding extent.
    pub fn dilated(&self, fraction: f64) -> Self {
        let dx = (self.w as f64 * fraction).round() as i64;
        let dy = (self.h as f64 * fraction).round() as i64;
        Self::new(self.x0 - dx, self.y0 - dy, self.w + 2 * dx, self.h + 2 * dy)
    }

    /// Intersection with a `width x height` image, `None` when empty.
    pub fn clamped(&self, width: usize, height: usize) -> Option<Self> {
        let x0 = self.x0.max(0);
        let y0 = self.y0.max(0);
        let x1 = (self.x0 + self.w).min(width as i64);
        let y1 = (self.y0 + self.h).min(height as i64);
        (x1 > x0 && y1 > y0).then(|| Self::new(x0, y0, x1 - x0, y1 - y0))
    }

    pub fn area(&self) -> i64 {
        self.w.max(0) * self.h.max(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_validate() {
        assert!(GrayImage::new(0, 3, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
        assert!(BinaryImage::new(2, 1, vec![0, 7]).is_err());
        assert!(BinaryImage::new(2, 1, vec![0, 255]).is_ok());
    }

    #[test]
    fn roi_clamp_and_dilate() {
        let roi = Roi::new(10, 10, 20, 10).dilated(0.5);
        assert_eq!(roi, Roi::new(0, 5, 40, 20));
        assert_eq!(Roi::new(-5, -5, 10, 10).clamped(8, 8), Some(Roi::new(0, 0, 5, 5)));
        assert_eq!(Roi::new(20, 20, 5, 5).clamped(8, 8), None);
    }

    #[test]
    fn brightening_saturates() {
        let img = GrayImage::new(3, 1, vec![0, 200, 250]).unwrap();
        assert_eq!(img.brightened(10).data(), &[10, 210, 255]);
        assert_eq!(img.brightened(-5).data(), &[0, 195, 245]);
    }
}
