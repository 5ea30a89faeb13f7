//! Low/high-variance region decomposition of neighboring frames.
//!
//! The absolute luma difference between the reference frame and a neighbor is
//! thresholded into a low-variance (LV) mask, cleaned with a 3x3 median and a
//! morphological recipe, and complemented into the high-variance (HV) mask.
//! The two masks then split the neighbor into disjoint parts that sum back to
//! the original frame.

use crate::error::{Error, Result};
use crate::image::{check_binary, median3, morph_clean, rgb_to_y, Frame, MorphRecipe, Tier};
use crate::tensor::Tensor3;

/// 10/255: roughly the noise floor of 8-bit video.
pub const DEFAULT_TAU: f64 = 10.0 / 255.0;

#[derive(Clone, Debug, PartialEq)]
pub struct DifferenceMasks {
    m_lv: Tensor3<f32>,
    m_hv: Tensor3<f32>,
}

impl DifferenceMasks {
    /// Builds the pair from an LV mask; HV is its complement.
    pub fn from_lv(m_lv: Tensor3<f32>) -> Result<Self> {
        check_binary(&m_lv, "DifferenceMasks::from_lv")?;
        let m_hv = m_lv.map(|v| 1.0 - v);
        Ok(DifferenceMasks { m_lv, m_hv })
    }

    pub fn lv(&self) -> &Tensor3<f32> {
        &self.m_lv
    }

    pub fn hv(&self) -> &Tensor3<f32> {
        &self.m_hv
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionSplit {
    pub i_lv: Frame,
    pub i_hv: Frame,
}

/// `|Y(ref) - Y(nbr)|` for two LR frames.
pub fn difference_map(reference: &Frame, nbr: &Frame) -> Result<Tensor3<f32>> {
    if reference.shape() != nbr.shape() {
        return Err(Error::shape(
            "difference_map",
            format!("{:?} vs {:?}", reference.shape(), nbr.shape()),
        ));
    }
    if reference.tier() != Tier::Lr || nbr.tier() != Tier::Lr {
        return Err(Error::InvalidArgument(format!(
            "difference_map expects LR frames, got {:?} and {:?}",
            reference.tier(),
            nbr.tier()
        )));
    }
    let luma = |f: &Frame| if f.channels() == 3 { rgb_to_y(f) } else { Ok(f.clone()) };
    let (yr, yn) = (luma(reference)?, luma(nbr)?);
    yr.planes().zip_map(yn.planes(), "difference_map", |a, b| (a - b).abs())
}

/// Binarizes `diff < tau` as low-variance, cleans the mask and derives HV as
/// the complement.
pub fn build_masks(diff: &Tensor3<f32>, tau: f64, recipe: MorphRecipe) -> Result<DifferenceMasks> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidArgument(format!("tau must lie in (0, 1), got {tau}")));
    }
    if diff.channels() != 1 {
        return Err(Error::shape(
            "build_masks",
            format!("{} channels, expected 1", diff.channels()),
        ));
    }
    let raw = binarize_lv(diff, tau);
    let cleaned = morph_clean(&median3(&raw)?, recipe)?;
    DifferenceMasks::from_lv(cleaned)
}

/// The LV set before any cleaning.
pub fn binarize_lv(diff: &Tensor3<f32>, tau: f64) -> Tensor3<f32> {
    diff.map(|d| if (d as f64) < tau { 1.0 } else { 0.0 })
}

/// `i_lv = m_lv ⊙ nbr`, `i_hv = m_hv ⊙ nbr`, masks broadcast over channels.
pub fn split_regions(nbr: &Frame, masks: &DifferenceMasks) -> Result<RegionSplit> {
    let (c, h, w) = nbr.shape();
    if masks.m_lv.height() != h || masks.m_lv.width() != w {
        return Err(Error::shape(
            "split_regions",
            format!(
                "mask {}x{} vs frame {h}x{w}",
                masks.m_lv.height(),
                masks.m_lv.width()
            ),
        ));
    }
    let apply = |m: &Tensor3<f32>| {
        let mask = m.channel(0);
        Tensor3::from_fn(c, h, w, |ch, y, x| mask[y * w + x] * nbr.planes().get(ch, y, x))
    };
    Ok(RegionSplit {
        i_lv: Frame::new(apply(&masks.m_lv), nbr.tier())?,
        i_hv: Frame::new(apply(&masks.m_hv), nbr.tier())?,
    })
}
