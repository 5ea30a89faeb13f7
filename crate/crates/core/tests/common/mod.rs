//! Independent reference implementations and synthetic data for the
//! integration and acceptance tests.
#![allow(dead_code)]

use etdm::image::{Frame, Tier};
use etdm::tensor::{ConvSpec, Tensor3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor<R: Rng>(rng: &mut R, c: usize, h: usize, w: usize, amp: f64) -> Tensor3<f64> {
    Tensor3::from_fn(c, h, w, |_, _, _| rng.random_range(-amp..amp))
}

/// Direct sliding-window convolution with zero padding, f64 throughout.
pub fn conv_oracle(x: &Tensor3<f64>, spec: &ConvSpec<f64>) -> Tensor3<f64> {
    let (_, h, w) = x.shape();
    let k = spec.kernel_size as isize;
    let d = spec.dilation as isize;
    let mut out = Tensor3::zeros(spec.out_channels, h, w);
    for o in 0..spec.out_channels {
        for y in 0..h as isize {
            for xx in 0..w as isize {
                let mut acc = spec.bias[o];
                for i in 0..spec.in_channels {
                    for ky in 0..k {
                        for kx in 0..k {
                            let sy = y + (ky - k / 2) * d;
                            let sx = xx + (kx - k / 2) * d;
                            if sy >= 0 && sx >= 0 && sy < h as isize && sx < w as isize {
                                acc += spec.weights[((o * spec.in_channels + i) * spec.kernel_size + ky as usize)
                                    * spec.kernel_size
                                    + kx as usize]
                                    * x.get(i, sy as usize, sx as usize);
                            }
                        }
                    }
                }
                out.set(o, y as usize, xx as usize, acc);
            }
        }
    }
    out
}

pub fn random_conv<R: Rng>(rng: &mut R, cin: usize, cout: usize, k: usize, d: usize) -> ConvSpec<f64> {
    let weights = (0..cout * cin * k * k).map(|_| rng.random_range(-1.0..1.0)).collect();
    let bias = (0..cout).map(|_| rng.random_range(-1.0..1.0)).collect();
    ConvSpec::new(cin, cout, k, d, weights, bias).unwrap()
}

/// Keys cubic, a = -0.5, written out piecewise.
pub fn keys(x: f64) -> f64 {
    let x = x.abs();
    if x < 1.0 {
        1.5 * x.powi(3) - 2.5 * x.powi(2) + 1.0
    } else if x < 2.0 {
        -0.5 * x.powi(3) + 2.5 * x.powi(2) - 4.0 * x + 2.0
    } else {
        0.0
    }
}

/// Normalized Gaussian tap at integer offset `i`.
pub fn gauss(i: i64, sigma: f64) -> f64 {
    let r = (3.0 * sigma).ceil() as i64;
    if i.abs() > r {
        return 0.0;
    }
    let z: f64 = (-r..=r).map(|j| (-(j * j) as f64 / (2.0 * sigma * sigma)).exp()).sum();
    (-(i * i) as f64 / (2.0 * sigma * sigma)).exp() / z
}

/// Weight of HR sample `i` in LR sample `o` for an antialiased downscale by
/// `r`, away from borders.
pub fn down_weight(o: usize, i: i64, r: usize) -> f64 {
    let rf = r as f64;
    let center = (o as f64 + 0.5) * rf - 0.5;
    let lo = (center - 2.0 * rf).floor() as i64;
    let hi = (center + 2.0 * rf).ceil() as i64;
    let norm: f64 = (lo..=hi).map(|j| keys((j as f64 - center) / rf)).sum();
    if i < lo || i > hi {
        0.0
    } else {
        keys((i as f64 - center) / rf) / norm
    }
}

/// LR response at `(oy, ox)` to a unit HR impulse at `(py, px)` under blur
/// then antialiased downscale, assuming no border interaction.
pub fn degraded_impulse(oy: usize, ox: usize, py: usize, px: usize, r: usize, sigma: f64) -> f64 {
    let axis = |o: usize, p: usize| -> f64 {
        let span = 4 * r as i64 + 8;
        let c = (o * r) as i64;
        (c - span..=c + span)
            .map(|i| down_weight(o, i, r) * gauss(i - p as i64, sigma))
            .sum()
    };
    axis(oy, py) * axis(ox, px)
}

/// Smooth textured RGB sequence, translating by a per-frame offset, values
/// snapped to 8-bit levels.
pub fn synthetic_hr(seed: u64, frames: usize, h: usize, w: usize) -> Vec<Frame> {
    let mut r = rng(seed);
    let waves: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                r.random_range(0.02..0.35),
                r.random_range(0.02..0.35),
                r.random_range(0.0..std::f64::consts::TAU),
                r.random_range(0.05..0.2),
            )
        })
        .collect();
    let (dy, dx) = (r.random_range(-1.5..1.5), r.random_range(-1.5..1.5));
    (0..frames)
        .map(|t| {
            let planes = Tensor3::from_fn(3, h, w, |c, y, x| {
                let (yy, xx) = (y as f64 + dy * t as f64, x as f64 + dx * t as f64);
                let v: f64 = waves
                    .iter()
                    .enumerate()
                    .map(|(k, &(fy, fx, ph, a))| a * (fy * yy + fx * xx + ph + (c * k) as f64 * 0.7).sin())
                    .sum();
                ((0.5 + v).clamp(0.0, 1.0) * 255.0).round() as f32 / 255.0
            });
            Frame::new(planes, Tier::Hr).unwrap()
        })
        .collect()
}

/// Unquantized random HR sequence in `[0, 1]`.
pub fn random_hr(seed: u64, frames: usize, h: usize, w: usize) -> Vec<Frame> {
    let mut r = rng(seed);
    (0..frames)
        .map(|_| Frame::new(Tensor3::from_fn(3, h, w, |_, _, _| r.random_range(0.0..1.0f32)), Tier::Hr).unwrap())
        .collect()
}

/// Sum of squared differences, then `10 log10(1 / mse)`.
pub fn psnr_oracle(a: &[f32], b: &[f32]) -> f64 {
    let mse = a.iter().zip(b).map(|(&x, &y)| (x as f64 - y as f64).powi(2)).sum::<f64>() / a.len() as f64;
    10.0 * (1.0 / mse).log10()
}
