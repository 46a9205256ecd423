use super::GrayImage;
use crate::error::{Error, Result};

/// Working resolution every pipeline stage assumes after resizing.
pub const WORKING_WIDTH: usize = 640;
pub const WORKING_HEIGHT: usize = 480;

/// Bilinear resampling with pixel-center alignment.
pub fn resize(img: &GrayImage, out_w: usize, out_h: usize) -> Result<GrayImage> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::arg(format!("resize target {out_w}x{out_h} has a zero dimension")));
    }
    if out_w == img.width() && out_h == img.height() {
        return Ok(img.clone());
    }
    let sx = img.width() as f64 / out_w as f64;
    let sy = img.height() as f64 / out_h as f64;
    let max_x = (img.width() - 1) as f64;
    let max_y = (img.height() - 1) as f64;
    let out = GrayImage::from_fn(out_w, out_h, |x, y| {
        let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
        let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(img.width() - 1), (y0 + 1).min(img.height() - 1));
        let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
        let top = img.get(x0, y0) as f64 * (1.0 - tx) + img.get(x1, y0) as f64 * tx;
        let bottom = img.get(x0, y1) as f64 * (1.0 - tx) + img.get(x1, y1) as f64 * tx;
        (top * (1.0 - ty) + bottom * ty).round().clamp(0.0, 255.0) as u8
    });
    Ok(out)
}

/// Normalized kernel of radius `ceil(3 sigma)`.
pub(crate) fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= sum);
    k
}

/// Separable Gaussian smoothing with edge replication at the borders.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::arg(format!("gaussian sigma must be positive, got {sigma}")));
    }
    let kernel: Vec<f32> = gaussian_kernel(sigma).into_iter().map(|w| w as f32).collect();
    let r = (kernel.len() / 2) as isize;
    let (w, h) = (img.width(), img.height());
    let src = img.data();

    let mut tmp = vec![0f32; w * h];
    let clamped_x = |row: &[u8], x: usize| {
        kernel.iter().enumerate().fold(0f32, |acc, (k, &kw)| {
            let sx = (x as isize + k as isize - r).clamp(0, w as isize - 1) as usize;
            acc + kw * row[sx] as f32
        })
    };
    let ru = r as usize;
    for (row, out) in src.chunks_exact(w).zip(tmp.chunks_exact_mut(w)) {
        if w > 2 * ru {
            for x in 0..ru {
                out[x] = clamped_x(row, x);
                out[w - 1 - x] = clamped_x(row, w - 1 - x);
            }
            for (o, win) in out[ru..w - ru].iter_mut().zip(row.windows(kernel.len())) {
                *o = kernel.iter().zip(win).fold(0f32, |acc, (&kw, &v)| acc + kw * v as f32);
            }
        } else {
            for (x, o) in out.iter_mut().enumerate() {
                *o = clamped_x(row, x);
            }
        }
    }

    // Vertical pass row by row; taps accumulate in kernel order as above.
    let mut out = vec![0u8; w * h];
    let mut acc = vec![0f32; w];
    for y in 0..h {
        acc.fill(0.0);
        for (k, &kw) in kernel.iter().enumerate() {
            let sy = (y as isize + k as isize - r).clamp(0, h as isize - 1) as usize;
            for (a, &v) in acc.iter_mut().zip(&tmp[sy * w..(sy + 1) * w]) {
                *a += kw * v;
            }
        }
        for (o, &a) in out[y * w..(y + 1) * w].iter_mut().zip(&acc) {
            *o = a.round().clamp(0.0, 255.0) as u8;
        }
    }
    GrayImage::new(w, h, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn resize_identity_and_errors() {
        let img = GrayImage::from_fn(7, 5, |x, y| (x * 30 + y) as u8);
        assert_eq!(resize(&img, 7, 5).unwrap(), img);
        assert!(resize(&img, 0, 5).is_err());
        assert!(resize(&img, 3, 0).is_err());
    }

    #[test]
    fn resize_interpolates_between_neighbours() {
        let img = GrayImage::new(2, 1, vec![0, 255]).unwrap();
        let out = resize(&img, 3, 1).unwrap();
        let mid = out.get(1, 0);
        assert!(mid > 0 && mid < 255, "middle sample {mid}");
    }

    #[test]
    fn resize_keeps_constants() {
        let img = GrayImage::filled(13, 9, 100);
        for (w, h) in [(1, 1), (640, 480), (5, 30)] {
            assert!(resize(&img, w, h).unwrap().data().iter().all(|&v| v == 100));
        }
    }

    #[test]
    fn blur_rejects_bad_sigma() {
        let img = GrayImage::filled(3, 3, 1);
        assert!(gaussian_blur(&img, 0.0).is_err());
        assert!(gaussian_blur(&img, -1.0).is_err());
        assert!(gaussian_blur(&img, f64::NAN).is_err());
    }

    #[test]
    fn blur_of_constant_is_constant() {
        for sigma in [0.3, 1.0, 2.5] {
            let out = gaussian_blur(&GrayImage::filled(17, 11, 77), sigma).unwrap();
            assert!(out.data().iter().all(|&v| v.abs_diff(77) <= 1));
        }
    }

    #[test]
    fn impulse_response_is_symmetric_and_mass_preserving() {
        let mut img = GrayImage::filled(31, 31, 0);
        img.set(15, 15, 255);
        let out = gaussian_blur(&img, 1.0).unwrap();
        for d in 1..5 {
            assert_eq!(out.get(15 + d, 15), out.get(15 - d, 15));
            assert_eq!(out.get(15, 15 + d), out.get(15, 15 - d));
        }
        // 2-D weight mass before quantization
        let k = gaussian_kernel(1.0);
        let mass: f64 = k.iter().flat_map(|a| k.iter().map(move |b| a * b)).sum();
        assert!((mass - 1.0).abs() < 0.01 * 1e-9);
        // after rounding each of the 49 taps is off by at most half a level
        let total: u32 = out.data().iter().map(|&v| v as u32).sum();
        assert!((total as f64 - 255.0).abs() <= 0.5 * 49.0, "total {total}");
    }

    #[test]
    fn kernel_radius() {
        assert_eq!(gaussian_kernel(1.0).len(), 7);
        assert_eq!(gaussian_kernel(0.5).len(), 5);
        assert_eq!(gaussian_kernel(1.2).len(), 9);
    }

    proptest! {
        #[test]
        fn blur_stays_within_input_range(
            w in 1usize..12, h in 1usize..12, sigma in 0.2f64..3.0,
            pixels in proptest::collection::vec(any::<u8>(), 144),
        ) {
            let img = GrayImage::from_fn(w, h, |x, y| pixels[y * 12 + x]);
            let lo = *img.data().iter().min().unwrap();
            let hi = *img.data().iter().max().unwrap();
            let out = gaussian_blur(&img, sigma).unwrap();
            prop_assert!(out.data().iter().all(|&v| v >= lo && v <= hi));
        }

        #[test]
        fn blur_matches_direct_convolution(
            w in 1usize..24, h in 1usize..24, sigma in 0.2f64..3.0,
            pixels in proptest::collection::vec(any::<u8>(), 576),
        ) {
            let img = GrayImage::from_fn(w, h, |x, y| pixels[y * 24 + x]);
            let k: Vec<f32> = gaussian_kernel(sigma).into_iter().map(|v| v as f32).collect();
            let r = (k.len() / 2) as isize;
            let at = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
            let rows: Vec<f32> = (0..w * h)
                .map(|i| {
                    let (x, y) = (i % w, i / w);
                    k.iter().enumerate().fold(0f32, |a, (j, &kw)| {
                        a + kw * img.get(at(x as isize + j as isize - r, w), y) as f32
                    })
                })
                .collect();
            let out = gaussian_blur(&img, sigma).unwrap();
            for y in 0..h {
                for x in 0..w {
                    let v = k.iter().enumerate().fold(0f32, |a, (j, &kw)| {
                        a + kw * rows[at(y as isize + j as isize - r, h) * w + x]
                    });
                    prop_assert_eq!(out.get(x, y), v.round().clamp(0.0, 255.0) as u8);
                }
            }
        }
    }
}
