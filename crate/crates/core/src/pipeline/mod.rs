//! Sequence driver: degradation, padding, the per-step network or oracle
//! heads, buffered refinement, reconstruction, metrics and losses.

mod config;
mod dump;
mod io;
mod loss;
mod report;

pub use config::ConfigFile;
pub use dump::DumpObserver;
pub use io::{
    frame_name, read_frames, read_png, read_raw, read_raw_tensor, write_frames, write_png, write_raw, FrameFormat,
};
pub use loss::{charbonnier, compute_losses, total_loss, LossNorm, StepLosses, CHARBONNIER_EPS};
pub use report::{FrameMetrics, SequenceReport, Summary};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::{bicubic_resize, gaussian_blur, quality, rgb_to_y, Frame, MorphRecipe, Tier};
use crate::net::{
    average_refine, branch_step, oracle_heads, reconstruct, refine, run_heads, AlignHook, HeadMode, HiddenState,
    NetworkWeights, ResidualTriple,
};
use crate::refinement::{Direction, PropagationFifo, RefinementBuffers};
use crate::region::{build_masks, difference_map, split_regions, DifferenceMasks, DEFAULT_TAU};
use crate::tensor::Tensor3;

pub const DEFAULT_SIGMA: f64 = 1.6;
pub const DEFAULT_SCALE: usize = 4;
pub const DEFAULT_BUFFER: usize = 3;

/// How `S` is combined with the buffer contents.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RefinerKind {
    #[default]
    Network,
    /// Mean of `S` and the filled buffer entries. No parameters.
    Average,
}

impl std::str::FromStr for RefinerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "network" => Ok(RefinerKind::Network),
            "average" => Ok(RefinerKind::Average),
            other => Err(Error::Config(format!("unknown refiner `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub scale: usize,
    pub sigma: f64,
    pub tau: f64,
    /// N. Zero disables refinement.
    pub buffer: usize,
    /// Future steps whose heads are available before frame t is emitted.
    /// `None` means N.
    pub lookahead: Option<usize>,
    pub heads: HeadMode,
    pub refiner: RefinerKind,
    pub morph: MorphRecipe,
    pub loss_norm: LossNorm,
    /// Round SR and HR to 8 bits before computing PSNR/SSIM.
    pub quantize_metrics: bool,
    /// Amplitude of uniform noise added to oracle `S` heads.
    pub oracle_noise: f64,
    pub noise_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            scale: DEFAULT_SCALE,
            sigma: DEFAULT_SIGMA,
            tau: DEFAULT_TAU,
            buffer: DEFAULT_BUFFER,
            lookahead: None,
            heads: HeadMode::Network,
            refiner: RefinerKind::Network,
            morph: MorphRecipe::OpenClose,
            loss_norm: LossNorm::PerPixel,
            quantize_metrics: true,
            oracle_noise: 0.0,
            noise_seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scale == 0 {
            return Err(Error::Config("scale must be >= 1".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Config(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        if !(self.oracle_noise >= 0.0 && self.oracle_noise.is_finite()) {
            return Err(Error::Config(format!("oracle noise must be >= 0, got {}", self.oracle_noise)));
        }
        Ok(())
    }

    pub fn lookahead(&self) -> usize {
        self.lookahead.unwrap_or(self.buffer)
    }

    fn needs_weights(&self) -> bool {
        self.heads == HeadMode::Network || (self.buffer > 0 && self.refiner == RefinerKind::Network)
    }
}

/// Per-step diagnostics hook.
pub trait StepObserver {
    fn on_masks(&mut self, _t: usize, _neighbor: &str, _masks: &DifferenceMasks) -> Result<()> {
        Ok(())
    }

    fn on_buffers(&mut self, _t: usize, _buffers: &RefinementBuffers<f32>) -> Result<()> {
        Ok(())
    }
}

/// Observer that ignores everything.
pub struct NoObserver;

impl StepObserver for NoObserver {}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceOutput {
    pub sr: Vec<Frame>,
    pub report: SequenceReport,
    /// FIFO updates performed. Always 0 when N = 0.
    pub buffer_updates: usize,
}

/// Blur then antialiased bicubic downscale by `1/scale`, per frame.
pub fn degrade_sequence(hr: &[Frame], scale: usize, sigma: f64) -> Result<Vec<Frame>> {
    if scale == 0 {
        return Err(Error::InvalidArgument("scale must be >= 1".into()));
    }
    hr.iter()
        .enumerate()
        .map(|(i, f)| {
            if f.height() % scale != 0 || f.width() % scale != 0 {
                return Err(Error::Input(format!(
                    "frame {i}: {}x{} is not divisible by scale {scale}",
                    f.height(),
                    f.width()
                )));
            }
            let blurred = gaussian_blur(f, sigma)?;
            Ok(bicubic_resize(&blurred, 1.0 / scale as f64, true)?.with_tier(Tier::Lr))
        })
        .collect()
}

/// Bicubic upsampling of an LR frame, no antialiasing.
pub fn upsample(lr: &Frame, scale: usize) -> Result<Frame> {
    Ok(bicubic_resize(lr, scale as f64, false)?.with_tier(Tier::Up))
}

/// `[A, B, C]` becomes `[A, A, B, C, C]`.
pub fn pad_sequence<T: Clone>(frames: &[T]) -> Result<Vec<T>> {
    let (first, last) = match (frames.first(), frames.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::Input("empty sequence".into())),
    };
    let mut out = Vec::with_capacity(frames.len() + 2);
    out.push(first.clone());
    out.extend_from_slice(frames);
    out.push(last.clone());
    Ok(out)
}

fn check_inputs(lr: &[Frame], hr: Option<&[Frame]>, config: &PipelineConfig) -> Result<()> {
    let first = lr.first().ok_or_else(|| Error::Input("empty LR sequence".into()))?;
    if let Some(i) = lr.iter().position(|f| f.shape() != first.shape()) {
        return Err(Error::Input(format!(
            "frame {i} is {:?}, sequence started at {:?}",
            lr[i].shape(),
            first.shape()
        )));
    }
    if first.channels() != 3 {
        return Err(Error::Input(format!("expected RGB frames, got {} channels", first.channels())));
    }
    match hr {
        None if config.heads == HeadMode::Oracle => {
            Err(Error::Input("oracle heads need HR ground truth".into()))
        }
        None => Ok(()),
        Some(hr) => {
            if hr.len() != lr.len() {
                return Err(Error::Input(format!("{} HR frames for {} LR frames", hr.len(), lr.len())));
            }
            let want = (3, first.height() * config.scale, first.width() * config.scale);
            match hr.iter().position(|f| f.shape() != want) {
                Some(i) => Err(Error::Input(format!(
                    "HR frame {i} is {:?}, expected {want:?}",
                    hr[i].shape()
                ))),
                None => Ok(()),
            }
        }
    }
}

fn check_weights(weights: &NetworkWeights, config: &PipelineConfig) -> Result<()> {
    let wc = weights.config();
    if wc.scale != config.scale {
        return Err(Error::weights(
            "head.spatial",
            format!("weights were built for scale {}, run uses {}", wc.scale, config.scale),
        ));
    }
    if config.buffer > 0 && config.refiner == RefinerKind::Network && wc.buffer_size != config.buffer {
        return Err(Error::weights(
            "refine.entry",
            format!("weights were built for N={}, run uses N={}", wc.buffer_size, config.buffer),
        ));
    }
    Ok(())
}

fn metric_frame(f: &Frame, quantize: bool) -> Result<Frame> {
    let f = if quantize { f.quantized_8bit() } else { f.clone() };
    if f.channels() == 3 {
        rgb_to_y(&f)
    } else {
        Ok(f)
    }
}

fn add_noise(s: &Tensor3<f32>, amplitude: f64, rng: &mut ChaCha8Rng) -> Result<Tensor3<f32>> {
    let (c, h, w) = s.shape();
    let data = s
        .data()
        .iter()
        .map(|&v| (v as f64 + rng.random_range(-amplitude..=amplitude)) as f32)
        .collect();
    Tensor3::from_vec(c, h, w, data)
}

/// Runs one sequence. `lr` is the original, unpadded sequence; `hr`, when
/// given, must be index-aligned with it. Weights are needed for network
/// heads and for the network refiner with N >= 1.
pub fn run_sequence(
    lr: &[Frame],
    hr: Option<&[Frame]>,
    config: &PipelineConfig,
    weights: Option<&NetworkWeights>,
    align: &dyn AlignHook,
    observer: &mut dyn StepObserver,
) -> Result<SequenceOutput> {
    config.validate()?;
    check_inputs(lr, hr, config)?;
    let weights = match (config.needs_weights(), weights) {
        (true, None) => return Err(Error::Config("this configuration needs network weights".into())),
        (true, Some(w)) => {
            check_weights(w, config)?;
            Some(w)
        }
        (false, _) => None,
    };
    let r = config.scale;
    let t_len = lr.len();
    let lr_pad = pad_sequence(&lr.iter().map(|f| f.clone().with_tier(Tier::Lr)).collect::<Vec<_>>())?;
    let up_pad = lr_pad.iter().map(|f| upsample(f, r)).collect::<Result<Vec<_>>>()?;
    let hr_pad = hr.map(pad_sequence).transpose()?;

    let (_, h, w) = lr[0].shape();
    let mut hidden = weights.map(|wt| HiddenState::zeros(wt.config(), h, w));
    let mut rng = ChaCha8Rng::seed_from_u64(config.noise_seed);
    let mut triples = Vec::with_capacity(t_len);
    let mut gts = Vec::with_capacity(t_len);
    for n in 1..=t_len {
        let (prev, cur, next) = (&lr_pad[n - 1], &lr_pad[n], &lr_pad[n + 1]);
        let m_prev = build_masks(&difference_map(cur, prev)?, config.tau, config.morph)?;
        let m_next = build_masks(&difference_map(cur, next)?, config.tau, config.morph)?;
        observer.on_masks(n - 1, "prev", &m_prev)?;
        observer.on_masks(n - 1, "next", &m_next)?;
        let gt = match &hr_pad {
            Some(hp) => Some(oracle_heads(
                &hp[n - 1],
                &hp[n],
                &hp[n + 1],
                &up_pad[n - 1],
                &up_pad[n],
                &up_pad[n + 1],
                r,
            )?),
            None => None,
        };
        let triple = match config.heads {
            HeadMode::Oracle => {
                let gt = gt.clone().expect("checked in check_inputs");
                if config.oracle_noise > 0.0 {
                    ResidualTriple::new(add_noise(&gt.s, config.oracle_noise, &mut rng)?, gt.p, gt.f)?
                } else {
                    gt
                }
            }
            HeadMode::Network => {
                let wt = weights.expect("network heads need weights");
                let st = hidden.as_mut().expect("hidden state exists with weights");
                let sp = split_regions(prev, &m_prev)?;
                let sn = split_regions(next, &m_next)?;
                st.h_lv = branch_step(&st.h_lv, prev, cur, &sp.i_lv, &sn.i_lv, &wt.lv, align)?;
                st.h_hv = branch_step(&st.h_hv, prev, cur, &sp.i_hv, &sn.i_hv, &wt.hv, align)?;
                run_heads(&st.h_lv, &st.h_hv, wt)?
            }
        };
        if triple.shape() != (config.scale * config.scale * 3, h, w) {
            return Err(Error::shape("run_sequence", format!("head output {:?}", triple.shape())));
        }
        triples.push(triple);
        gts.push(gt);
    }

    let n_buf = config.buffer;
    let k = config.lookahead();
    let shape = triples[0].shape();
    let mut buffer_updates = 0;
    let mut buffers = if n_buf > 0 {
        Some(RefinementBuffers::<f32>::new(n_buf, shape, 0, 0)?)
    } else {
        None
    };
    let mut sr = Vec::with_capacity(t_len);
    let mut frames = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let s = &triples[t].s;
        let refined = match buffers.as_mut() {
            None => s.clone(),
            Some(b) => {
                let top = (t + k).min(t_len - 1);
                let mut future = PropagationFifo::new(Direction::Back, n_buf, shape, top)?;
                for m in (t + 1..=top).rev() {
                    future.update(&triples[m].s, &triples[m].p)?;
                    buffer_updates += 1;
                }
                b.future = future;
                observer.on_buffers(t, b)?;
                let out = match config.refiner {
                    RefinerKind::Network => refine(
                        s,
                        &b.past.entries(),
                        &b.future.entries(),
                        weights.expect("network refiner needs weights"),
                    )?,
                    RefinerKind::Average => {
                        let mut e = b.past.filled_entries();
                        e.extend(b.future.filled_entries());
                        average_refine(s, &e)?
                    }
                };
                b.past.update(s, &triples[t].f)?;
                buffer_updates += 1;
                out
            }
        };
        let frame = reconstruct(&refined, &up_pad[t + 1], r)?;
        if let (Some(hr), Some(gt)) = (hr, &gts[t]) {
            let q = quality(
                &metric_frame(&frame, config.quantize_metrics)?,
                &metric_frame(&hr[t], config.quantize_metrics)?,
            )?;
            frames.push(FrameMetrics {
                index: t,
                psnr_db: q.psnr_db,
                ssim: q.ssim,
                losses: Some(compute_losses(&triples[t], &refined, gt, CHARBONNIER_EPS, config.loss_norm)?),
            });
        }
        sr.push(frame);
    }
    Ok(SequenceOutput {
        sr,
        report: SequenceReport { frames },
        buffer_updates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{IdentityAlign, NetworkConfig};

    fn hr_seq(t: usize, h: usize, w: usize) -> Vec<Frame> {
        (0..t)
            .map(|i| {
                Frame::new(
                    Tensor3::from_fn(3, h, w, |c, y, x| {
                        (((i * 13 + c * 7 + y * 3 + x * 5) % 29) as f32 / 29.0 * 255.0).round() / 255.0
                    }),
                    Tier::Hr,
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn padding_contract() {
        assert_eq!(pad_sequence(&["A"]).unwrap(), vec!["A"; 3]);
        assert_eq!(pad_sequence(&["A", "B", "C"]).unwrap(), vec!["A", "A", "B", "C", "C"]);
        assert!(pad_sequence::<u8>(&[]).is_err());
    }

    #[test]
    fn degrade_constant_and_divisibility() {
        let f = Frame::filled(3, 16, 12, 0.375, Tier::Hr);
        let lr = degrade_sequence(&[f], 4, 1.6).unwrap();
        assert_eq!(lr[0].shape(), (3, 4, 3));
        assert_eq!(lr[0].tier(), Tier::Lr);
        assert!(lr[0].planes().data().iter().all(|&v| (v - 0.375).abs() < 1e-6));
        assert!(degrade_sequence(&[Frame::filled(3, 10, 12, 0.0, Tier::Hr)], 4, 1.6).is_err());
    }

    #[test]
    fn oracle_run_is_exact_for_any_n() {
        let hr = hr_seq(4, 16, 16);
        let lr = degrade_sequence(&hr, 4, 1.6).unwrap();
        for n in [0, 1, 2] {
            let cfg = PipelineConfig {
                buffer: n,
                heads: HeadMode::Oracle,
                refiner: RefinerKind::Average,
                ..PipelineConfig::default()
            };
            let out = run_sequence(&lr, Some(&hr), &cfg, None, &IdentityAlign, &mut NoObserver).unwrap();
            assert_eq!(out.sr.len(), 4);
            for (sr, gt) in out.sr.iter().zip(&hr) {
                assert!(sr.planes().max_abs_diff(gt.planes()).unwrap() < 1e-6);
            }
            assert!(out.report.frames.iter().all(|f| f.psnr_db == f64::INFINITY && f.ssim == 1.0));
            if n == 0 {
                assert_eq!(out.buffer_updates, 0);
            }
        }
    }

    #[test]
    fn missing_hr_or_weights_rejected() {
        let lr = degrade_sequence(&hr_seq(3, 8, 8), 4, 1.6).unwrap();
        let oracle = PipelineConfig {
            heads: HeadMode::Oracle,
            ..PipelineConfig::default()
        };
        assert!(matches!(
            run_sequence(&lr, None, &oracle, None, &IdentityAlign, &mut NoObserver),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            run_sequence(&lr, None, &PipelineConfig::default(), None, &IdentityAlign, &mut NoObserver),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn zero_network_gives_bicubic() {
        let lr = degrade_sequence(&hr_seq(3, 8, 8), 4, 1.6).unwrap();
        let cfg = NetworkConfig {
            branch_channels: 4,
            trunk_blocks: 1,
            refine_blocks: 1,
            refine_channels: 4,
            buffer_size: 1,
            ..NetworkConfig::default()
        };
        let w = NetworkWeights::zeros(cfg).unwrap();
        let pc = PipelineConfig {
            buffer: 1,
            ..PipelineConfig::default()
        };
        let out = run_sequence(&lr, None, &pc, Some(&w), &IdentityAlign, &mut NoObserver).unwrap();
        for (sr, l) in out.sr.iter().zip(&lr) {
            assert_eq!(sr.planes(), upsample(l, 4).unwrap().clamped().planes());
        }
        assert!(out.report.frames.is_empty());
    }

    #[test]
    fn size_drift_rejected() {
        let mut lr = degrade_sequence(&hr_seq(2, 8, 8), 4, 1.6).unwrap();
        lr.push(Frame::filled(3, 3, 2, 0.0, Tier::Lr));
        let cfg = PipelineConfig {
            heads: HeadMode::Oracle,
            ..PipelineConfig::default()
        };
        assert!(matches!(
            run_sequence(&lr, None, &cfg, None, &IdentityAlign, &mut NoObserver),
            Err(Error::Input(_))
        ));
    }
}
