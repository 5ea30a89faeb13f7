//! Separable bicubic (Keys cubic convolution) resampling.
//!
//! Output sample `i` sits at input coordinate `(i + 0.5) / scale - 0.5`
//! (pixel-center alignment). When antialiasing a downscale the kernel is
//! stretched by `1 / scale`. Taps are renormalized to sum to one and borders
//! are handled by reflection.

use super::Frame;
use crate::error::{Error, Result};
use crate::tensor::{reflect_index, Tensor3};

pub const CUBIC_A: f64 = -0.5;

pub fn cubic_kernel(x: f64) -> f64 {
    let a = CUBIC_A;
    let x = x.abs();
    if x <= 1.0 {
        ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
    } else {
        0.0
    }
}

/// Per output sample: `(source index, weight)` pairs, weights summing to one.
pub fn resample_taps(in_len: usize, out_len: usize, scale: f64, antialias: bool) -> Vec<Vec<(usize, f64)>> {
    let stretch = if antialias && scale < 1.0 { 1.0 / scale } else { 1.0 };
    let radius = 2.0 * stretch;
    (0..out_len)
        .map(|i| {
            let center = (i as f64 + 0.5) / scale - 0.5;
            let lo = (center - radius).floor() as isize;
            let hi = (center + radius).ceil() as isize;
            let mut taps: Vec<(usize, f64)> = (lo..=hi)
                .filter_map(|j| {
                    let w = cubic_kernel((j as f64 - center) / stretch);
                    (w != 0.0).then(|| (reflect_index(j, in_len), w))
                })
                .collect();
            let sum: f64 = taps.iter().map(|t| t.1).sum();
            taps.iter_mut().for_each(|t| t.1 /= sum);
            taps
        })
        .collect()
}

pub fn bicubic_resize(f: &Frame, scale: f64, antialias: bool) -> Result<Frame> {
    Frame::new(bicubic_resize_tensor(f.planes(), scale, antialias)?, f.tier())
}

pub fn bicubic_resize_tensor(x: &Tensor3<f32>, scale: f64, antialias: bool) -> Result<Tensor3<f32>> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
    }
    let (c, h, w) = x.shape();
    let oh = (h as f64 * scale).round() as usize;
    let ow = (w as f64 * scale).round() as usize;
    if oh == 0 || ow == 0 {
        return Err(Error::InvalidArgument(format!(
            "resizing {h}x{w} by {scale} gives an empty output"
        )));
    }
    let col_taps = resample_taps(w, ow, scale, antialias);
    let row_taps = resample_taps(h, oh, scale, antialias);
    let mut out = Tensor3::zeros(c, oh, ow);
    let mut tmp = vec![0.0f64; h * ow];
    for ch in 0..c {
        let src = x.channel(ch);
        for y in 0..h {
            let row = &src[y * w..(y + 1) * w];
            for (ox, taps) in col_taps.iter().enumerate() {
                tmp[y * ow + ox] = taps.iter().map(|&(j, t)| t * row[j] as f64).sum();
            }
        }
        let dst = out.channel_mut(ch);
        for (oy, taps) in row_taps.iter().enumerate() {
            for ox in 0..ow {
                dst[oy * ow + ox] = taps.iter().map(|&(j, t)| t * tmp[j * ow + ox]).sum::<f64>() as f32;
            }
        }
    }
    Ok(out)
}
