//! Global binarization and the dynamic threshold controller.
//!
//! After a hit, the threshold is nudged toward an Otsu estimate computed over
//! the region around the landmark. After `loss_trigger` consecutive misses the
//! controller sweeps candidate thresholds around the current global value, one
//! per frame; each exhausted sweep doubles the range and halves the step, and
//! after `max_sweeps` sweeps the target is declared lost.

use crate::error::{Error, Result};
use crate::imaging::{BinaryImage, GrayImage, Roi};

/// 255 where `img > t`, 0 elsewhere.
pub fn binarize(img: &GrayImage, t: u8) -> BinaryImage {
    let data = img.data().iter().map(|&v| if v > t { 255 } else { 0 }).collect();
    BinaryImage::from_raw_unchecked(img.width(), img.height(), data)
}

#[derive(Clone, PartialEq, Eq)]
pub struct GrayHistogram {
    pub bins: [u32; 256],
}

impl std::fmt::Debug for GrayHistogram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let occupied: Vec<_> = self.bins.iter().enumerate().filter(|(_, &c)| c > 0).collect();
        f.debug_struct("GrayHistogram").field("occupied", &occupied).finish()
    }
}

impl Default for GrayHistogram {
    fn default() -> Self {
        Self { bins: [0; 256] }
    }
}

impl GrayHistogram {
    pub fn from_bins(bins: [u32; 256]) -> Self {
        Self { bins }
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().map(|&c| c as u64).sum()
    }

    pub fn occupied_bins(&self) -> usize {
        self.bins.iter().filter(|&&c| c > 0).count()
    }
}

/// Intensity counts over `roi`, clamped to the image.
pub fn histogram(img: &GrayImage, roi: Roi) -> Result<GrayHistogram> {
    let roi = roi
        .clamped(img.width(), img.height())
        .ok_or_else(|| Error::arg(format!("roi {roi:?} is empty inside the image")))?;
    // Frames are dominated by a few levels; interleaved partial counts avoid
    // serializing on one bin.
    let mut part = [[0u32; 256]; 4];
    let (x0, x1) = (roi.x0 as usize, (roi.x0 + roi.w) as usize);
    for row in img.data().chunks_exact(img.width()).skip(roi.y0 as usize).take(roi.h as usize) {
        let row = &row[x0..x1];
        let mut quads = row.chunks_exact(4);
        for q in &mut quads {
            part[0][q[0] as usize] += 1;
            part[1][q[1] as usize] += 1;
            part[2][q[2] as usize] += 1;
            part[3][q[3] as usize] += 1;
        }
        for &v in quads.remainder() {
            part[0][v as usize] += 1;
        }
    }
    let mut hist = GrayHistogram::default();
    for (b, bin) in hist.bins.iter_mut().enumerate() {
        *bin = part.iter().map(|p| p[b]).sum();
    }
    Ok(hist)
}

/// Otsu threshold: the split `t` (class 0 is `<= t`) maximizing between-class
/// variance. Ties resolve to the lowest `t`.
///
/// Variance is compared as the exact rational `(N*S0 - n0*S)^2 / (n0*n1)`,
/// which is proportional to `w0*w1*(mu0-mu1)^2`.
pub fn otsu(hist: &GrayHistogram) -> Result<u8> {
    if hist.occupied_bins() < 2 {
        return Err(Error::NoThreshold);
    }
    let n: u128 = hist.total() as u128;
    let s: u128 = hist.bins.iter().enumerate().map(|(i, &c)| i as u128 * c as u128).sum();

    let mut best: Option<(u8, u128, u128)> = None;
    let (mut n0, mut s0) = (0u128, 0u128);
    for t in 0..255usize {
        n0 += hist.bins[t] as u128;
        s0 += t as u128 * hist.bins[t] as u128;
        let n1 = n - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let a = n * s0;
        let b = n0 * s;
        let diff = a.abs_diff(b);
        let num = diff * diff;
        let den = n0 * n1;
        let better = match best {
            None => true,
            Some((_, bn, bd)) => greater(num, den, bn, bd),
        };
        if better {
            best = Some((t as u8, num, den));
        }
    }
    best.map(|(t, _, _)| t).ok_or(Error::NoThreshold)
}

/// `a/b > c/d`, exact while the products fit, otherwise in floating point.
fn greater(a: u128, b: u128, c: u128, d: u128) -> bool {
    match (a.checked_mul(d), c.checked_mul(b)) {
        (Some(l), Some(r)) => l > r,
        _ => (a as f64 / b as f64) > (c as f64 / d as f64),
    }
}

/// Constants of the dynamic threshold controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdConfig {
    pub initial: u8,
    /// Largest accepted |local Otsu - global| for adopting the local value.
    pub accept_window: u8,
    /// Consecutive misses before the sweep starts.
    pub loss_trigger: u32,
    pub range_half_width: u32,
    pub step: u32,
    pub max_sweeps: u32,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            initial: 128,
            accept_window: 40,
            loss_trigger: 5,
            range_half_width: 64,
            step: 16,
            max_sweeps: 3,
        }
    }
}

impl ThresholdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.step == 0 {
            return Err(Error::arg("threshold step must be >= 1"));
        }
        if self.range_half_width < self.step {
            return Err(Error::arg("threshold range_half_width must be >= step"));
        }
        if self.loss_trigger == 0 {
            return Err(Error::arg("threshold loss_trigger must be >= 1"));
        }
        if self.max_sweeps == 0 {
            return Err(Error::arg("threshold max_sweeps must be >= 1"));
        }
        Ok(())
    }

    /// Number of candidates in the first sweep around `global_t`.
    pub fn first_sweep_len(&self, global_t: u8) -> usize {
        sweep_candidates(global_t, self.range_half_width, self.step).len()
    }
}

/// Multiples of `step` inside `[g - r, g + r]` clamped to `[0, 255]`, ascending.
pub fn sweep_candidates(global_t: u8, range_half_width: u32, step: u32) -> Vec<u8> {
    let g = global_t as i64;
    let lo = (g - range_half_width as i64).max(0);
    let hi = (g + range_half_width as i64).min(255);
    let step = step.max(1) as i64;
    let first = (lo + step - 1) / step * step;
    (first..=hi).step_by(step as usize).map(|t| t as u8).collect()
}

/// Per-stream controller state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdState {
    pub config: ThresholdConfig,
    pub global_t: u8,
    /// Threshold to binarize the next frame with.
    pub active_t: u8,
    pub miss_count: u32,
    pub sweep_index: u32,
    pub sweep_cursor: usize,
    pub range_half_width: u32,
    pub step: u32,
    pub lost: bool,
}

impl ThresholdState {
    pub fn new(config: ThresholdConfig) -> Self {
        Self {
            config,
            global_t: config.initial,
            active_t: config.initial,
            miss_count: 0,
            sweep_index: 0,
            sweep_cursor: 0,
            range_half_width: config.range_half_width,
            step: config.step.max(1),
            lost: false,
        }
    }

    fn reset_search(&mut self) {
        self.miss_count = 0;
        self.sweep_index = 0;
        self.sweep_cursor = 0;
        self.range_half_width = self.config.range_half_width;
        self.step = self.config.step.max(1);
        self.lost = false;
    }

    /// Detection succeeded with `active_t`; `roi_hist` covers the region around it.
    pub fn on_detect(&mut self, roi_hist: &GrayHistogram) {
        self.global_t = self.active_t;
        self.reset_search();
        if let Ok(local) = otsu(roi_hist) {
            if local.abs_diff(self.global_t) <= self.config.accept_window {
                self.global_t = local;
            }
        }
        self.active_t = self.global_t;
    }

    /// Detection failed; returns the threshold for the next frame, or `None`
    /// once every sweep is exhausted.
    pub fn on_miss(&mut self) -> Option<u8> {
        self.miss_count = self.miss_count.saturating_add(1);
        if self.lost {
            return None;
        }
        if self.miss_count < self.config.loss_trigger {
            self.active_t = self.global_t;
            return Some(self.global_t);
        }
        loop {
            let candidates = sweep_candidates(self.global_t, self.range_half_width, self.step);
            if let Some(&t) = candidates.get(self.sweep_cursor) {
                self.sweep_cursor += 1;
                self.active_t = t;
                return Some(t);
            }
            self.sweep_index += 1;
            if self.sweep_index >= self.config.max_sweeps {
                self.lost = true;
                self.active_t = self.global_t;
                return None;
            }
            self.range_half_width = self.range_half_width.saturating_mul(2);
            self.step = (self.step / 2).max(1);
            self.sweep_cursor = 0;
        }
    }

    pub fn searching(&self) -> bool {
        !self.lost && self.miss_count >= self.config.loss_trigger
    }
}
