use super::ResidualTriple;
use crate::error::{Error, Result};
use crate::image::Frame;
use crate::tensor::{pixel_unshuffle, Tensor3};

fn residual(hr: &Frame, up: &Frame) -> Result<Tensor3<f64>> {
    if hr.shape() != up.shape() {
        return Err(Error::shape(
            "oracle_heads",
            format!("hr {:?} vs up {:?}", hr.shape(), up.shape()),
        ));
    }
    hr.planes().cast::<f64>().sub(&up.planes().cast::<f64>())
}

/// Ground-truth heads for step t from HR and upsampled frames at t-1, t, t+1:
/// `S = hr_t - up_t`, `F = S_t - S_{t+1}`, `P = S_t - S_{t-1}`, each packed.
/// Differences are taken in f64 and rounded once.
pub fn oracle_heads(
    hr_prev: &Frame,
    hr_cur: &Frame,
    hr_next: &Frame,
    up_prev: &Frame,
    up_cur: &Frame,
    up_next: &Frame,
    r: usize,
) -> Result<ResidualTriple> {
    let s_prev = residual(hr_prev, up_prev)?;
    let s_cur = residual(hr_cur, up_cur)?;
    let s_next = residual(hr_next, up_next)?;
    let f = s_cur.sub(&s_next)?;
    let p = s_cur.sub(&s_prev)?;
    let pack = |x: &Tensor3<f64>| -> Result<Tensor3<f32>> { Ok(pixel_unshuffle(x, r)?.cast()) };
    ResidualTriple::new(pack(&s_cur)?, pack(&p)?, pack(&f)?)
}
