//! Depth-to-space and space-to-depth rearrangement.
//!
//! Channel `c` of a packed tensor maps to output channel `c / r²` at
//! sub-position `((c / r) % r, c % r)` inside each `r x r` block.

use super::{Scalar, Tensor3};
use crate::error::{Error, Result};

pub fn pixel_shuffle<T: Scalar>(x: &Tensor3<T>, r: usize) -> Result<Tensor3<T>> {
    if r == 0 {
        return Err(Error::InvalidArgument("upscale factor must be at least 1".into()));
    }
    let (c, h, w) = x.shape();
    let rr = r * r;
    if c % rr != 0 {
        return Err(Error::shape(
            "pixel_shuffle",
            format!("{c} channels not divisible by r² = {rr}"),
        ));
    }
    let mut out = Tensor3::zeros(c / rr, h * r, w * r);
    let ow = w * r;
    for ci in 0..c {
        let (oc, dy, dx) = (ci / rr, (ci / r) % r, ci % r);
        let src = x.channel(ci);
        let dst = out.channel_mut(oc);
        for y in 0..h {
            let row = (y * r + dy) * ow;
            for (xx, &v) in src[y * w..(y + 1) * w].iter().enumerate() {
                dst[row + xx * r + dx] = v;
            }
        }
    }
    Ok(out)
}

pub fn pixel_unshuffle<T: Scalar>(x: &Tensor3<T>, r: usize) -> Result<Tensor3<T>> {
    if r == 0 {
        return Err(Error::InvalidArgument("downscale factor must be at least 1".into()));
    }
    let (c, h, w) = x.shape();
    if h % r != 0 || w % r != 0 {
        return Err(Error::shape(
            "pixel_unshuffle",
            format!("{h}x{w} not divisible by {r}"),
        ));
    }
    let rr = r * r;
    let (oh, ow) = (h / r, w / r);
    let mut out = Tensor3::zeros(c * rr, oh, ow);
    for ci in 0..c {
        let src = x.channel(ci);
        for sub in 0..rr {
            let (dy, dx) = (sub / r, sub % r);
            let dst = out.channel_mut(ci * rr + sub);
            for y in 0..oh {
                let row = (y * r + dy) * w;
                for xx in 0..ow {
                    dst[y * ow + xx] = src[row + xx * r + dx];
                }
            }
        }
    }
    Ok(out)
}
