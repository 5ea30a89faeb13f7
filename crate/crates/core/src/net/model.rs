use super::{AlignHook, BranchWeights, NetworkWeights, ResidualTriple};
use crate::error::{Error, Result};
use crate::image::{Frame, Tier};
use crate::tensor::{concat_channels, conv2d, pixel_shuffle, residual_block, Padding, Tensor3};

/// Which region a branch consumes. The HV branch runs every convolution with
/// the configured dilation; the LV branch is undilated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchKind {
    Lv,
    Hv,
}

impl NetworkWeights {
    pub fn branch(&self, kind: BranchKind) -> &BranchWeights {
        match kind {
            BranchKind::Lv => &self.lv,
            BranchKind::Hv => &self.hv,
        }
    }
}

/// One recurrent update of a branch:
/// `entry([align(prev_h), nbr_prev_region, reference, nbr_next_region])`
/// followed by the branch's residual blocks.
pub fn branch_step(
    prev_h: &Tensor3<f32>,
    prev_ref: &Frame,
    reference: &Frame,
    nbr_prev_region: &Frame,
    nbr_next_region: &Frame,
    weights: &BranchWeights,
    align: &dyn AlignHook,
) -> Result<Tensor3<f32>> {
    let aligned = align.align(prev_h, prev_ref, reference)?;
    let input = concat_channels(&[
        &aligned,
        nbr_prev_region.planes(),
        reference.planes(),
        nbr_next_region.planes(),
    ])?;
    let mut h = conv2d(&input, &weights.entry, Padding::Zero)?;
    for blk in &weights.blocks {
        h = residual_block(&h, &blk.a, &blk.b)?;
    }
    Ok(h)
}

/// Fuses the two branch outputs, runs the shared trunk and the three heads.
pub fn run_heads(h_lv: &Tensor3<f32>, h_hv: &Tensor3<f32>, weights: &NetworkWeights) -> Result<ResidualTriple> {
    h_lv.expect_same_shape(h_hv, "run_heads")?;
    let mut x = conv2d(&concat_channels(&[h_lv, h_hv])?, &weights.fuse, Padding::Zero)?;
    for blk in &weights.trunk {
        x = residual_block(&x, &blk.a, &blk.b)?;
    }
    ResidualTriple::new(
        conv2d(&x, &weights.head_spatial, Padding::Zero)?,
        conv2d(&x, &weights.head_past, Padding::Zero)?,
        conv2d(&x, &weights.head_future, Padding::Zero)?,
    )
}

fn check_entries(s_cur: &Tensor3<f32>, entries: &[&Tensor3<f32>], n: usize, side: &str) -> Result<()> {
    if entries.len() != n {
        return Err(Error::InvalidArgument(format!(
            "refine expects {n} {side} entries, got {}",
            entries.len()
        )));
    }
    entries
        .iter()
        .try_for_each(|e| s_cur.expect_same_shape(e, "refine"))
}

/// Refined spatial residual `S'`.
///
/// `past` and `future` are in buffer-slot order (nearest step first). The
/// network sees them in temporal order: `[R(t-N) .. R(t-1), S, R(t+1) .. R(t+N)]`.
/// The output is added to `s_cur`, so an all-zero refinement net passes `S`
/// through unchanged.
pub fn refine(
    s_cur: &Tensor3<f32>,
    past: &[&Tensor3<f32>],
    future: &[&Tensor3<f32>],
    weights: &NetworkWeights,
) -> Result<Tensor3<f32>> {
    let n = weights.config().buffer_size;
    check_entries(s_cur, past, n, "past")?;
    check_entries(s_cur, future, n, "future")?;
    let mut ordered: Vec<&Tensor3<f32>> = past.iter().rev().copied().collect();
    ordered.push(s_cur);
    ordered.extend(future.iter().copied());
    let mut x = conv2d(&concat_channels(&ordered)?, &weights.refine_entry, Padding::Zero)?;
    for blk in &weights.refine_blocks {
        x = residual_block(&x, &blk.a, &blk.b)?;
    }
    let delta = conv2d(&x, &weights.refine_exit, Padding::Zero)?;
    s_cur.add(&delta)
}

/// Parameter-free refinement: elementwise mean of `s_cur` and `entries`.
pub fn average_refine(s_cur: &Tensor3<f32>, entries: &[&Tensor3<f32>]) -> Result<Tensor3<f32>> {
    entries
        .iter()
        .try_for_each(|e| s_cur.expect_same_shape(e, "average_refine"))?;
    let k = (entries.len() + 1) as f64;
    let data = (0..s_cur.data().len())
        .map(|i| {
            let sum: f64 = s_cur.data()[i] as f64 + entries.iter().map(|e| e.data()[i] as f64).sum::<f64>();
            (sum / k) as f32
        })
        .collect();
    let (c, h, w) = s_cur.shape();
    Tensor3::from_vec(c, h, w, data)
}

/// `up + pixel_shuffle(s_refined)` before clamping.
pub fn reconstruct_unclamped(s_refined: &Tensor3<f32>, ref_up: &Frame, r: usize) -> Result<Tensor3<f32>> {
    let residual = pixel_shuffle(s_refined, r)?;
    if residual.shape() != ref_up.shape() {
        return Err(Error::shape(
            "reconstruct",
            format!("shuffled residual {:?} vs upsampled frame {:?}", residual.shape(), ref_up.shape()),
        ));
    }
    ref_up.planes().add(&residual)
}

/// `clamp(up + pixel_shuffle(s_refined), 0, 1)` as an HR frame.
pub fn reconstruct(s_refined: &Tensor3<f32>, ref_up: &Frame, r: usize) -> Result<Frame> {
    let sum = reconstruct_unclamped(s_refined, ref_up, r)?;
    Frame::new(sum.map(|v| v.clamp(0.0, 1.0)), Tier::Hr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{IdentityAlign, NetworkConfig};
    use crate::tensor::{pixel_unshuffle, ConvSpec};

    fn tiny() -> NetworkConfig {
        NetworkConfig {
            branch_channels: 2,
            branch_blocks: 1,
            trunk_blocks: 1,
            refine_channels: 2,
            refine_blocks: 1,
            hv_dilation: 2,
            scale: 2,
            buffer_size: 2,
        }
    }

    fn lr(h: usize, w: usize, v: f32) -> Frame {
        Frame::filled(3, h, w, v, Tier::Lr)
    }

    #[test]
    fn zero_branch_outputs_zero() {
        let w = NetworkWeights::zeros(tiny()).unwrap();
        let h = Tensor3::filled(2, 5, 5, 0.3);
        let f = lr(5, 5, 0.7);
        let out = branch_step(&h, &f, &f, &f, &f, &w.lv, &IdentityAlign).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_heads_give_zero_triple_with_packed_shape() {
        let mut w = NetworkWeights::init(tiny(), 4).unwrap();
        w.zero_heads();
        let h = Tensor3::filled(2, 3, 4, 0.5);
        let t = run_heads(&h, &h, &w).unwrap();
        assert_eq!(t.shape(), (12, 3, 4));
        for x in [&t.s, &t.p, &t.f] {
            assert!(x.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn default_config_heads_emit_48_channels() {
        let cfg = NetworkConfig {
            trunk_blocks: 1,
            refine_blocks: 1,
            ..NetworkConfig::default()
        };
        let w = NetworkWeights::init(cfg, 1).unwrap();
        let h = Tensor3::zeros(96, 2, 3);
        assert_eq!(run_heads(&h, &h, &w).unwrap().shape(), (48, 2, 3));
    }

    #[test]
    fn zero_refinement_passes_s_through() {
        let mut w = NetworkWeights::init(tiny(), 2).unwrap();
        w.zero_refinement();
        let s = Tensor3::from_fn(12, 3, 3, |c, y, x| (c as f32 - 6.0) * 0.1 + (y * x) as f32 * 0.01);
        let e = Tensor3::filled(12, 3, 3, 0.5);
        let out = refine(&s, &[&e, &e], &[&e, &e], &w).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn refine_checks_entry_count() {
        let w = NetworkWeights::zeros(tiny()).unwrap();
        let s = Tensor3::zeros(12, 2, 2);
        assert!(refine(&s, &[&s], &[&s, &s], &w).is_err());
    }

    #[test]
    fn refine_output_shape_for_any_n() {
        for n in 1..=3 {
            let cfg = NetworkConfig { buffer_size: n, ..tiny() };
            let w = NetworkWeights::init(cfg, 8).unwrap();
            let s = Tensor3::filled(12, 3, 2, 0.1);
            let entries = vec![&s; n];
            assert_eq!(refine(&s, &entries, &entries, &w).unwrap().shape(), s.shape());
        }
    }

    #[test]
    fn reconstruct_inverse_composition() {
        let hr = Tensor3::from_fn(3, 4, 6, |c, y, x| ((c * 7 + y * 5 + x * 3) % 10) as f32 / 10.0);
        let up = Frame::filled(3, 4, 6, 0.5, Tier::Up);
        let s = pixel_unshuffle(&hr.sub(up.planes()).unwrap(), 2).unwrap();
        let out = reconstruct(&s, &up, 2).unwrap();
        assert!(out.planes().max_abs_diff(&hr).unwrap() < 1e-7);
        let zero = Tensor3::zeros(12, 2, 3);
        assert_eq!(reconstruct(&zero, &up, 2).unwrap().planes(), up.planes());
        assert!(reconstruct(&zero, &Frame::filled(3, 4, 4, 0.5, Tier::Up), 2).is_err());
    }

    #[test]
    fn average_refine_is_mean() {
        let a = Tensor3::filled(1, 1, 2, 1.0f32);
        let b = Tensor3::filled(1, 1, 2, 2.0f32);
        let c = Tensor3::filled(1, 1, 2, 6.0f32);
        assert_eq!(average_refine(&a, &[&b, &c]).unwrap().data(), &[3.0, 3.0]);
        assert_eq!(average_refine(&a, &[]).unwrap(), a);
    }

    #[test]
    fn hv_impulse_response_is_wider() {
        // Same 3x3 all-ones weights, only the dilation differs.
        let c = 1;
        let branch = |d: usize| BranchWeights {
            entry: ConvSpec::new(c + 9, c, 3, d, vec![1.0; (c + 9) * 9], vec![0.0]).unwrap(),
            blocks: vec![],
        };
        let (lv, hv) = (branch(1), branch(2));
        let n = 9;
        let zero = lr(n, n, 0.0);
        let mut impulse = Tensor3::zeros(3, n, n);
        impulse.set(0, n / 2, n / 2, 1.0);
        let reference = Frame::new(impulse, Tier::Lr).unwrap();
        let h = Tensor3::zeros(c, n, n);
        let run = |b: &BranchWeights| branch_step(&h, &zero, &reference, &zero, &zero, b, &IdentityAlign).unwrap();
        let (out_lv, out_hv) = (run(&lv), run(&hv));
        let footprint = |t: &Tensor3<f32>| t.data().iter().filter(|&&v| v != 0.0).count();
        assert_eq!(out_lv.get(0, n / 2 + 2, n / 2), 0.0);
        assert_eq!(out_hv.get(0, n / 2 + 2, n / 2), 1.0);
        assert_eq!(footprint(&out_lv), 9);
        assert_eq!(footprint(&out_hv), 9);
        assert_eq!(out_hv.get(0, n / 2 + 1, n / 2), 0.0);
    }
}
