//! Binary mask cleaning with 3x3 neighborhoods and reflect padding.

use crate::error::{Error, Result};
use crate::tensor::{reflect_index, Tensor3};

/// Post-median morphological sequence applied to region masks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MorphRecipe {
    /// Opening (erode, dilate) followed by closing (dilate, erode).
    #[default]
    OpenClose,
    /// Closing followed by opening.
    CloseOpen,
    /// Median filter only.
    None,
}

impl std::str::FromStr for MorphRecipe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open-close" => Ok(MorphRecipe::OpenClose),
            "close-open" => Ok(MorphRecipe::CloseOpen),
            "none" => Ok(MorphRecipe::None),
            other => Err(Error::Config(format!("unknown morphology recipe `{other}`"))),
        }
    }
}

pub fn check_binary(mask: &Tensor3<f32>, context: &'static str) -> Result<()> {
    if mask.channels() != 1 {
        return Err(Error::shape(
            context,
            format!("{} channels, expected 1", mask.channels()),
        ));
    }
    if let Some(v) = mask.data().iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidArgument(format!(
            "{context}: non-binary mask value {v}"
        )));
    }
    Ok(())
}

/// Applies `f` to the count of ones in each 3x3 reflect-padded neighborhood.
fn neighborhood(mask: &Tensor3<f32>, f: impl Fn(u32) -> bool) -> Tensor3<f32> {
    let (_, h, w) = mask.shape();
    let src = mask.channel(0);
    Tensor3::from_fn(1, h, w, |_, y, x| {
        let mut ones = 0;
        for dy in -1..=1 {
            let sy = reflect_index(y as isize + dy, h);
            for dx in -1..=1 {
                let sx = reflect_index(x as isize + dx, w);
                ones += (src[sy * w + sx] == 1.0) as u32;
            }
        }
        if f(ones) {
            1.0
        } else {
            0.0
        }
    })
}

/// 3x3 median of a binary mask, i.e. a majority vote over 9 values.
pub fn median3(mask: &Tensor3<f32>) -> Result<Tensor3<f32>> {
    check_binary(mask, "median3")?;
    Ok(neighborhood(mask, |ones| ones >= 5))
}

pub fn erode(mask: &Tensor3<f32>) -> Result<Tensor3<f32>> {
    check_binary(mask, "erode")?;
    Ok(neighborhood(mask, |ones| ones == 9))
}

pub fn dilate(mask: &Tensor3<f32>) -> Result<Tensor3<f32>> {
    check_binary(mask, "dilate")?;
    Ok(neighborhood(mask, |ones| ones > 0))
}

pub fn open(mask: &Tensor3<f32>) -> Result<Tensor3<f32>> {
    dilate(&erode(mask)?)
}

pub fn close(mask: &Tensor3<f32>) -> Result<Tensor3<f32>> {
    erode(&dilate(mask)?)
}

/// Opening then closing with the 3x3 all-ones structuring element.
pub fn morph_open_close(mask: &Tensor3<f32>) -> Result<Tensor3<f32>> {
    close(&open(mask)?)
}

pub fn morph_clean(mask: &Tensor3<f32>, recipe: MorphRecipe) -> Result<Tensor3<f32>> {
    match recipe {
        MorphRecipe::OpenClose => morph_open_close(mask),
        MorphRecipe::CloseOpen => open(&close(mask)?),
        MorphRecipe::None => {
            check_binary(mask, "morph_clean")?;
            Ok(mask.clone())
        }
    }
}
