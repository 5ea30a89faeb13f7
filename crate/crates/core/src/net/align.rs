use crate::error::Result;
use crate::image::Frame;
use crate::tensor::Tensor3;

/// Warps the previous hidden state onto the current reference frame before it
/// enters a branch.
pub trait AlignHook: Send + Sync {
    fn align(&self, hidden: &Tensor3<f32>, prev_ref: &Frame, cur_ref: &Frame) -> Result<Tensor3<f32>>;
}

/// No motion compensation.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityAlign;

impl AlignHook for IdentityAlign {
    fn align(&self, hidden: &Tensor3<f32>, _prev_ref: &Frame, _cur_ref: &Frame) -> Result<Tensor3<f32>> {
        Ok(hidden.clone())
    }
}
