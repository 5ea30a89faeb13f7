//! Image-space primitives: frames, luma conversion, degradation kernels,
//! resampling, binary mask filters and quality metrics.

mod blur;
mod color;
mod metrics;
mod morph;
mod resize;

pub use blur::{gaussian_blur, gaussian_blur_tensor, gaussian_kernel};
pub use color::{rgb_to_y, LUMA_OFFSET, LUMA_WEIGHTS};
pub use metrics::{psnr, quality, ssim, QualityReport, SSIM_SIGMA, SSIM_WINDOW};
pub use morph::{
    check_binary, close, dilate, erode, median3, morph_clean, morph_open_close, open, MorphRecipe,
};
pub use resize::{bicubic_resize, bicubic_resize_tensor, cubic_kernel, resample_taps, CUBIC_A};

use crate::error::{Error, Result};
use crate::tensor::Tensor3;

/// Resolution tier of a frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tier {
    /// Low-resolution input.
    Lr,
    /// High-resolution ground truth or super-resolved output.
    Hr,
    /// Bicubic upsampling of an LR frame.
    Up,
}

/// An RGB or Y image with values nominally in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    planes: Tensor3<f32>,
    tier: Tier,
}

impl Frame {
    pub fn new(planes: Tensor3<f32>, tier: Tier) -> Result<Self> {
        match planes.channels() {
            1 | 3 => Ok(Frame { planes, tier }),
            c => Err(Error::shape(
                "Frame::new",
                format!("{c} channels, expected 1 (Y) or 3 (RGB)"),
            )),
        }
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: f32, tier: Tier) -> Self {
        Frame::new(Tensor3::filled(channels, height, width, value), tier)
            .expect("channel count must be 1 or 3")
    }

    pub fn planes(&self) -> &Tensor3<f32> {
        &self.planes
    }

    pub fn into_planes(self) -> Tensor3<f32> {
        self.planes
    }

    pub fn tier(&self) -> Tier {
        self.tier
    }

    pub fn with_tier(mut self, tier: Tier) -> Self {
        self.tier = tier;
        self
    }

    pub fn channels(&self) -> usize {
        self.planes.channels()
    }

    pub fn height(&self) -> usize {
        self.planes.height()
    }

    pub fn width(&self) -> usize {
        self.planes.width()
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.planes.shape()
    }

    pub fn clamped(&self) -> Frame {
        Frame {
            planes: self.planes.map(|v| v.clamp(0.0, 1.0)),
            tier: self.tier,
        }
    }

    /// Rounds every value to the nearest of the 256 levels `k / 255` after
    /// clamping, as an 8-bit image writer would.
    pub fn quantized_8bit(&self) -> Frame {
        Frame {
            planes: self
                .planes
                .map(|v| ((v.clamp(0.0, 1.0) as f64 * 255.0).round() / 255.0) as f32),
            tier: self.tier,
        }
    }
}
