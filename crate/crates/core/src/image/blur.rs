use super::Frame;
use crate::error::{Error, Result};
use crate::tensor::{reflect_index, Tensor3};

/// Normalized 1-D Gaussian taps over `[-ceil(3σ), ceil(3σ)]`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    Ok(taps.into_iter().map(|t| t / sum).collect())
}

/// Separable Gaussian blur with reflect padding; shape preserved.
pub fn gaussian_blur(f: &Frame, sigma: f64) -> Result<Frame> {
    Frame::new(gaussian_blur_tensor(f.planes(), sigma)?, f.tier())
}

pub fn gaussian_blur_tensor(x: &Tensor3<f32>, sigma: f64) -> Result<Tensor3<f32>> {
    let taps = gaussian_kernel(sigma)?;
    let radius = (taps.len() / 2) as isize;
    let (c, h, w) = x.shape();
    let mut out = Tensor3::zeros(c, h, w);
    let mut tmp = vec![0.0f64; h * w];
    for ch in 0..c {
        let src = x.channel(ch);
        for y in 0..h {
            let row = &src[y * w..(y + 1) * w];
            for xx in 0..w {
                let mut acc = 0.0;
                for (k, &t) in taps.iter().enumerate() {
                    let sx = reflect_index(xx as isize + k as isize - radius, w);
                    acc += t * row[sx] as f64;
                }
                tmp[y * w + xx] = acc;
            }
        }
        let dst = out.channel_mut(ch);
        for y in 0..h {
            for xx in 0..w {
                let mut acc = 0.0;
                for (k, &t) in taps.iter().enumerate() {
                    let sy = reflect_index(y as isize + k as isize - radius, h);
                    acc += t * tmp[sy * w + xx];
                }
                dst[y * w + xx] = acc as f32;
            }
        }
    }
    Ok(out)
}
