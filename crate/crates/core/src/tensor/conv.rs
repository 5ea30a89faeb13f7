use super::{reflect_index, Scalar, Tensor3};
use crate::error::{Error, Result};

/// Border handling for "same"-size convolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Padding {
    Zero,
    Reflect,
}

/// A square, odd-sized, optionally dilated convolution layer.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvSpec<T = f32> {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
    pub dilation: usize,
    /// `out x in x k x k`, row-major.
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> ConvSpec<T> {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
        dilation: usize,
        weights: Vec<T>,
        bias: Vec<T>,
    ) -> Result<Self> {
        let spec = ConvSpec {
            in_channels,
            out_channels,
            kernel_size,
            dilation,
            weights,
            bias,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn zeros(in_channels: usize, out_channels: usize, kernel_size: usize, dilation: usize) -> Self {
        ConvSpec {
            in_channels,
            out_channels,
            kernel_size,
            dilation,
            weights: vec![T::ZERO; out_channels * in_channels * kernel_size * kernel_size],
            bias: vec![T::ZERO; out_channels],
        }
    }

    /// 1x1 identity mapping on `channels` channels.
    pub fn identity(channels: usize) -> Self {
        let mut spec = Self::zeros(channels, channels, 1, 1);
        for c in 0..channels {
            spec.weights[c * channels + c] = T::ONE;
        }
        spec
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel_size % 2 == 0 {
            return Err(Error::Spec(format!("kernel size {} is not odd", self.kernel_size)));
        }
        if self.dilation == 0 {
            return Err(Error::Spec("dilation must be at least 1".into()));
        }
        let expected = self.out_channels * self.in_channels * self.kernel_size * self.kernel_size;
        if self.weights.len() != expected {
            return Err(Error::Spec(format!(
                "{} weights, expected {expected}",
                self.weights.len()
            )));
        }
        if self.bias.len() != self.out_channels {
            return Err(Error::Spec(format!(
                "{} biases for {} output channels",
                self.bias.len(),
                self.out_channels
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn weight(&self, o: usize, i: usize, ky: usize, kx: usize) -> T {
        let k = self.kernel_size;
        self.weights[((o * self.in_channels + i) * k + ky) * k + kx]
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|&v| v == T::ZERO)
    }
}

/// "Same" 2-D convolution (cross-correlation) with effective padding
/// `dilation * (k - 1) / 2`, lowered to im2col + GEMM.
pub fn conv2d<T: Scalar>(x: &Tensor3<T>, spec: &ConvSpec<T>, padding: Padding) -> Result<Tensor3<T>> {
    spec.validate()?;
    if x.channels() != spec.in_channels {
        return Err(Error::shape(
            "conv2d",
            format!(
                "input has {} channels, layer expects {}",
                x.channels(),
                spec.in_channels
            ),
        ));
    }
    let (h, w) = (x.height(), x.width());
    let hw = h * w;
    let taps = spec.kernel_size * spec.kernel_size;
    let rows = spec.in_channels * taps;

    let mut out = vec![T::ZERO; spec.out_channels * hw];
    if spec.kernel_size == 1 {
        T::gemm(spec.out_channels, rows, hw, &spec.weights, x.data(), &mut out);
    } else {
        let cols = im2col(x, spec.kernel_size, spec.dilation, padding);
        T::gemm(spec.out_channels, rows, hw, &spec.weights, &cols, &mut out);
    }
    for (o, plane) in out.chunks_exact_mut(hw.max(1)).enumerate().take(spec.out_channels) {
        let b = spec.bias[o];
        if b != T::ZERO {
            plane.iter_mut().for_each(|v| *v += b);
        }
    }
    Tensor3::from_vec(spec.out_channels, h, w, out).map_err(|_| {
        Error::InvalidArgument("conv2d produced a non-finite value".into())
    })
}

/// Row `(ci * k + ky) * k + kx` holds the input plane `ci` shifted by the tap offset.
fn im2col<T: Scalar>(x: &Tensor3<T>, k: usize, dilation: usize, padding: Padding) -> Vec<T> {
    let (c, h, w) = x.shape();
    let hw = h * w;
    let half = (k / 2) as isize;
    let d = dilation as isize;
    let mut cols = vec![T::ZERO; c * k * k * hw];
    for ci in 0..c {
        let plane = x.channel(ci);
        for ky in 0..k {
            let dy = (ky as isize - half) * d;
            for kx in 0..k {
                let dx = (kx as isize - half) * d;
                let row = (ci * k + ky) * k + kx;
                let dst = &mut cols[row * hw..(row + 1) * hw];
                // Columns whose source stays in-bounds: x + dx in [0, w).
                let x_lo = (-dx).clamp(0, w as isize) as usize;
                let x_hi = (w as isize - dx).clamp(0, w as isize) as usize;
                for y in 0..h {
                    let sy = y as isize + dy;
                    let drow = &mut dst[y * w..(y + 1) * w];
                    let sy = if (0..h as isize).contains(&sy) {
                        sy as usize
                    } else {
                        match padding {
                            Padding::Zero => continue,
                            Padding::Reflect => reflect_index(sy, h),
                        }
                    };
                    let srow = &plane[sy * w..(sy + 1) * w];
                    if x_lo < x_hi {
                        let s0 = (x_lo as isize + dx) as usize;
                        drow[x_lo..x_hi].copy_from_slice(&srow[s0..s0 + (x_hi - x_lo)]);
                    }
                    if padding == Padding::Reflect {
                        for xx in (0..x_lo.min(w)).chain(x_hi.max(x_lo)..w) {
                            drow[xx] = srow[reflect_index(xx as isize + dx, w)];
                        }
                    }
                }
            }
        }
    }
    cols
}

pub fn relu<T: Scalar>(x: &Tensor3<T>) -> Tensor3<T> {
    x.map(|v| if v > T::ZERO { v } else { T::ZERO })
}

/// `x + conv_b(relu(conv_a(x)))`, zero padding on both convolutions.
pub fn residual_block<T: Scalar>(
    x: &Tensor3<T>,
    spec_a: &ConvSpec<T>,
    spec_b: &ConvSpec<T>,
) -> Result<Tensor3<T>> {
    if spec_b.out_channels != x.channels() {
        return Err(Error::shape(
            "residual_block",
            format!(
                "skip connection adds {} channels to {}",
                spec_b.out_channels,
                x.channels()
            ),
        ));
    }
    let inner = relu(&conv2d(x, spec_a, Padding::Zero)?);
    let branch = conv2d(&inner, spec_b, Padding::Zero)?;
    x.add(&branch)
}
