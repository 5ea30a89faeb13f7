//! PSNR and single-scale SSIM.
//!
//! Both are meant to be evaluated on the Y plane of frames in `[0, 1]`.

use super::blur::gaussian_kernel;
use super::Frame;
use crate::error::{Error, Result};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QualityReport {
    /// `f64::INFINITY` when the inputs are identical.
    pub psnr_db: f64,
    pub ssim: f64,
}

fn expect_same(a: &Frame, b: &Frame, context: &'static str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(
            context,
            format!("{:?} vs {:?}", a.shape(), b.shape()),
        ));
    }
    Ok(())
}

/// `10 log10(peak² / MSE)`, or `+inf` when the MSE is zero.
pub fn psnr(a: &Frame, b: &Frame, peak: f64) -> Result<f64> {
    expect_same(a, b, "psnr")?;
    if !(peak > 0.0) {
        return Err(Error::InvalidArgument(format!("peak must be positive, got {peak}")));
    }
    let (pa, pb) = (a.planes().data(), b.planes().data());
    let sse: f64 = pa
        .iter()
        .zip(pb)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    let mse = sse / pa.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Valid-region separable filtering of a `h x w` plane with `taps`.
fn filter_valid(plane: &[f64], h: usize, w: usize, taps: &[f64]) -> (Vec<f64>, usize, usize) {
    let k = taps.len();
    let (oh, ow) = (h + 1 - k, w + 1 - k);
    let mut tmp = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            tmp[y * ow + x] = taps.iter().enumerate().map(|(i, t)| t * plane[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps.iter().enumerate().map(|(i, t)| t * tmp[(y + i) * ow + x]).sum();
        }
    }
    (out, oh, ow)
}

/// Mean SSIM over all fully-covered 11x11 Gaussian windows (σ = 1.5),
/// `C1 = (0.01)²`, `C2 = (0.03)²` for unit peak. Multi-channel inputs are
/// averaged over channels.
pub fn ssim(a: &Frame, b: &Frame) -> Result<f64> {
    expect_same(a, b, "ssim")?;
    let (c, h, w) = a.shape();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {h}x{w}"
        )));
    }
    if a.planes().data() == b.planes().data() {
        return Ok(1.0);
    }
    let taps = window_taps();
    let c1 = 0.01f64 * 0.01;
    let c2 = 0.03f64 * 0.03;
    let mut total = 0.0;
    for ch in 0..c {
        let x: Vec<f64> = a.planes().channel(ch).iter().map(|&v| v as f64).collect();
        let y: Vec<f64> = b.planes().channel(ch).iter().map(|&v| v as f64).collect();
        let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
        let (mx, _, _) = filter_valid(&x, h, w, &taps);
        let (my, _, _) = filter_valid(&y, h, w, &taps);
        let (sxx, _, _) = filter_valid(&xx, h, w, &taps);
        let (syy, _, _) = filter_valid(&yy, h, w, &taps);
        let (sxy, oh, ow) = filter_valid(&xy, h, w, &taps);
        let mut sum = 0.0;
        for i in 0..oh * ow {
            let (mux, muy) = (mx[i], my[i]);
            let vx = sxx[i] - mux * mux;
            let vy = syy[i] - muy * muy;
            let cov = sxy[i] - mux * muy;
            let num = (2.0 * mux * muy + c1) * (2.0 * cov + c2);
            let den = (mux * mux + muy * muy + c1) * (vx + vy + c2);
            sum += num / den;
        }
        total += sum / (oh * ow) as f64;
    }
    Ok((total / c as f64).clamp(-1.0, 1.0))
}

fn window_taps() -> Vec<f64> {
    // gaussian_kernel(1.5) spans ceil(4.5) = 5 taps per side, i.e. 11.
    let taps = gaussian_kernel(SSIM_SIGMA).expect("positive sigma");
    debug_assert_eq!(taps.len(), SSIM_WINDOW);
    taps
}

pub fn quality(sr_y: &Frame, hr_y: &Frame) -> Result<QualityReport> {
    Ok(QualityReport {
        psnr_db: psnr(sr_y, hr_y, 1.0)?,
        ssim: ssim(sr_y, hr_y)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Tier;
    use crate::tensor::Tensor3;

    fn y(h: usize, w: usize, f: impl Fn(usize, usize) -> f32) -> Frame {
        Frame::new(Tensor3::from_fn(1, h, w, |_, r, c| f(r, c)), Tier::Hr).unwrap()
    }

    #[test]
    fn psnr_identical_is_infinite() {
        let a = y(8, 8, |r, c| (r * c) as f32 / 64.0);
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn psnr_uniform_error() {
        let a = y(8, 8, |_, _| 0.0);
        let b = y(8, 8, |_, _| 0.1);
        assert!((psnr(&a, &b, 1.0).unwrap() - 20.0).abs() < 1e-6);
        let ones = y(8, 8, |_, _| 1.0);
        assert_eq!(psnr(&a, &ones, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn psnr_shape_mismatch() {
        assert!(psnr(&y(4, 4, |_, _| 0.0), &y(4, 5, |_, _| 0.0), 1.0).is_err());
    }

    #[test]
    fn ssim_constants_luminance_term_only() {
        let a = y(16, 16, |_, _| 0.2);
        let b = y(16, 16, |_, _| 0.8);
        let (ma, mb) = (0.2f32 as f64, 0.8f32 as f64);
        let c1 = 1e-4;
        let want = (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
        assert!((ssim(&a, &b).unwrap() - want).abs() < 1e-9);
    }

    #[test]
    fn ssim_rejects_small_images() {
        let a = y(10, 20, |_, _| 0.0);
        assert!(ssim(&a, &a).is_err());
    }
}
