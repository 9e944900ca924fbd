//! Image quality and color statistics. Channel statistics are in 0-255 units.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::image::RgbImage;
use crate::tensor::Tensor;

/// Central grey in 8-bit units.
pub const GREY_LEVEL: f64 = 128.0;
/// PSNR reported for identical images.
pub const PSNR_CAP_DB: f64 = 99.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
const PEAK: f64 = 255.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricReport {
    pub psnr_db: f64,
    pub ssim: f64,
    pub grey_distance: f64,
    pub color_constancy: f64,
    pub channel_means: [f64; 3],
}

impl MetricReport {
    /// Full-reference scores of `enhanced` against `reference`, plus the
    /// color statistics of `enhanced`.
    pub fn compute(enhanced: &RgbImage, reference: &RgbImage) -> Result<Self> {
        let means = channel_means(enhanced);
        Ok(MetricReport {
            psnr_db: psnr(enhanced, reference)?,
            ssim: ssim(enhanced, reference)?,
            grey_distance: grey_distance_of_means(means),
            color_constancy: color_constancy_of_means(means),
            channel_means: means,
        })
    }
}

fn same_dims(a: &RgbImage, b: &RgbImage) -> Result<()> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::contract(format!(
            "image dims differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// `10 log10(255^2 / MSE)` over every channel value, capped at 99 dB.
pub fn psnr(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    same_dims(a, b)?;
    let mut sse = 0.0f64;
    for (p, q) in a.pixels().iter().zip(b.pixels()) {
        for (x, y) in p.channels().into_iter().zip(q.channels()) {
            let d = x as f64 - y as f64;
            sse += d * d;
        }
    }
    let mse = sse / (a.pixels().len() * 3) as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (PEAK * PEAK / mse).log10()).min(PSNR_CAP_DB))
}

/// `0.299 R + 0.587 G + 0.114 B`, unrounded.
pub fn luma(img: &RgbImage) -> Vec<f64> {
    img.pixels()
        .iter()
        .map(|p| 0.299 * p.r as f64 + 0.587 * p.g as f64 + 0.114 * p.b as f64)
        .collect()
}

/// Normalized 1-D Gaussian taps for the SSIM window.
pub fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let mut taps = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f64 - half;
        *t = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= s);
    taps
}

/// Valid-mode separable Gaussian filter of a `w x h` plane.
fn filter_valid(src: &[f64], w: usize, h: usize, taps: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            horiz[y * ow + x] = taps.iter().zip(&row[x..x + SSIM_WINDOW]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * horiz[(y + k) * ow + x];
            }
            out[y * ow + x] = acc;
        }
    }
    out
}

/// Mean SSIM over every 11x11 Gaussian window (sigma 1.5) fully inside the
/// image, computed on luma with K1 = 0.01, K2 = 0.03, L = 255.
pub fn ssim(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    same_dims(a, b)?;
    let (w, h) = (a.width(), a.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::contract(format!(
            "ssim needs both sides >= {SSIM_WINDOW}, got {w}x{h}"
        )));
    }
    let x = luma(a);
    let y = luma(b);
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
    let taps = gaussian_taps();
    let mu_x = filter_valid(&x, w, h, &taps);
    let mu_y = filter_valid(&y, w, h, &taps);
    let e_xx = filter_valid(&xx, w, h, &taps);
    let e_yy = filter_valid(&yy, w, h, &taps);
    let e_xy = filter_valid(&xy, w, h, &taps);
    let c1 = (SSIM_K1 * PEAK).powi(2);
    let c2 = (SSIM_K2 * PEAK).powi(2);
    let mut total = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let vx = e_xx[i] - mx * mx;
        let vy = e_yy[i] - my * my;
        let cov = e_xy[i] - mx * my;
        total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
    Ok(total / mu_x.len() as f64)
}

pub fn channel_means(img: &RgbImage) -> [f64; 3] {
    let mut s = [0.0f64; 3];
    for p in img.pixels() {
        for (acc, v) in s.iter_mut().zip(p.channels()) {
            *acc += v as f64;
        }
    }
    let n = img.pixels().len() as f64;
    s.map(|v| v / n)
}

/// Channel means of the first sample of a `[n, 3, h, w]` model-domain
/// tensor, converted to 0-255 units without quantization.
pub fn tensor_channel_means(t: &Tensor) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (c, m) in out.iter_mut().enumerate() {
        let p = t.plane(0, c);
        let mean = p.iter().map(|&v| v as f64).sum::<f64>() / p.len() as f64;
        *m = (mean + 1.0) * 127.5;
    }
    out
}

/// Euclidean distance between the channel-mean triple and central grey.
pub fn grey_distance_of_means(m: [f64; 3]) -> f64 {
    m.iter().map(|v| (v - GREY_LEVEL).powi(2)).sum::<f64>().sqrt()
}

/// Root-sum-square of the pairwise channel-mean differences (RG, RB, GB).
pub fn color_constancy_of_means(m: [f64; 3]) -> f64 {
    ((m[0] - m[1]).powi(2) + (m[0] - m[2]).powi(2) + (m[1] - m[2]).powi(2)).sqrt()
}

pub fn grey_distance(img: &RgbImage) -> f64 {
    grey_distance_of_means(channel_means(img))
}

pub fn color_constancy(img: &RgbImage) -> f64 {
    color_constancy_of_means(channel_means(img))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Rgb8;

    fn solid(c: Rgb8) -> RgbImage {
        RgbImage::filled(16, 16, c).unwrap()
    }

    #[test]
    fn psnr_cases() {
        let a = RgbImage::from_fn(16, 16, |x, y| Rgb8::new((x * 9) as u8, (y * 7) as u8, 100)).unwrap();
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP_DB);
        let b = RgbImage::from_fn(16, 16, |x, y| Rgb8::new((x * 9) as u8 + 1, (y * 7) as u8 + 1, 101)).unwrap();
        assert!((psnr(&a, &b).unwrap() - 48.1308).abs() < 1e-4);
        assert!(psnr(&solid(Rgb8::BLACK), &solid(Rgb8::WHITE)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn psnr_dimension_mismatch() {
        let a = RgbImage::filled(4, 4, Rgb8::BLACK).unwrap();
        let b = RgbImage::filled(4, 5, Rgb8::BLACK).unwrap();
        assert!(psnr(&a, &b).is_err());
    }

    #[test]
    fn ssim_identity_and_inversion() {
        let a = RgbImage::from_fn(24, 24, |x, y| if (x / 3 + y / 5) % 2 == 0 { Rgb8::BLACK } else { Rgb8::WHITE }).unwrap();
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let inv = RgbImage::new(
            24,
            24,
            a.pixels().iter().map(|p| Rgb8::from_channels(p.channels().map(|v| 255 - v))).collect(),
        )
        .unwrap();
        assert!(ssim(&a, &inv).unwrap() < -0.5);
    }

    #[test]
    fn ssim_rejects_small_images() {
        let a = RgbImage::filled(10, 20, Rgb8::BLACK).unwrap();
        assert!(ssim(&a, &a).is_err());
    }

    #[test]
    fn grey_distance_values() {
        assert_eq!(grey_distance(&solid(Rgb8::CENTRAL_GREY)), 0.0);
        assert!((grey_distance(&solid(Rgb8::BLACK)) - 221.70).abs() < 5e-3);
        assert!((grey_distance(&solid(Rgb8::WHITE)) - 219.97).abs() < 5e-3);
    }

    #[test]
    fn color_constancy_values() {
        assert_eq!(color_constancy(&solid(Rgb8::new(77, 77, 77))), 0.0);
        assert!((color_constancy(&solid(Rgb8::RED)) - 360.62).abs() < 5e-3);
    }

    #[test]
    fn channel_mean_cases() {
        assert_eq!(channel_means(&solid(Rgb8::ORANGE)), [255.0, 128.0, 0.0]);
        let half = RgbImage::from_fn(8, 8, |x, _| if x < 4 { Rgb8::BLACK } else { Rgb8::WHITE }).unwrap();
        assert_eq!(channel_means(&half), [127.5; 3]);
    }
}
