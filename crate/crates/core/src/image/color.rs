use super::Frame;
use crate::error::{Error, Result};
use crate::tensor::Tensor3;

/// BT.601 studio-swing luma weights applied to RGB in `[0, 1]`, output scale 0..255.
pub const LUMA_WEIGHTS: [f64; 3] = [65.481, 128.553, 24.966];
pub const LUMA_OFFSET: f64 = 16.0;

/// `Y = (65.481 R + 128.553 G + 24.966 B + 16) / 255`, so Y spans `[16/255, 235/255]`.
pub fn rgb_to_y(f: &Frame) -> Result<Frame> {
    if f.channels() != 3 {
        return Err(Error::shape(
            "rgb_to_y",
            format!("{} channels, expected 3", f.channels()),
        ));
    }
    let p = f.planes();
    let (r, g, b) = (p.channel(0), p.channel(1), p.channel(2));
    let [wr, wg, wb] = LUMA_WEIGHTS;
    let y: Vec<f32> = r
        .iter()
        .zip(g)
        .zip(b)
        .map(|((&r, &g), &b)| {
            ((wr * r as f64 + wg * g as f64 + wb * b as f64 + LUMA_OFFSET) / 255.0) as f32
        })
        .collect();
    Frame::new(Tensor3::from_vec(1, f.height(), f.width(), y)?, f.tier())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Tier;

    #[test]
    fn black_and_white_endpoints() {
        let black = rgb_to_y(&Frame::filled(3, 2, 2, 0.0, Tier::Hr)).unwrap();
        let white = rgb_to_y(&Frame::filled(3, 2, 2, 1.0, Tier::Hr)).unwrap();
        assert!(black.planes().data().iter().all(|&v| v == (16.0f64 / 255.0) as f32));
        assert!(white.planes().data().iter().all(|&v| (v as f64 - 235.0 / 255.0).abs() < 1e-7));
    }

    #[test]
    fn gray_is_linear_between_endpoints() {
        for g in [0.1f32, 0.25, 0.5, 0.9] {
            let y = rgb_to_y(&Frame::filled(3, 1, 1, g, Tier::Lr)).unwrap();
            let want = (16.0 + 219.0 * g as f64) / 255.0;
            assert!((y.planes().get(0, 0, 0) as f64 - want).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_single_channel() {
        assert!(rgb_to_y(&Frame::filled(1, 2, 2, 0.5, Tier::Lr)).is_err());
    }
}
