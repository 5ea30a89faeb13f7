use crate::error::{Error, Result};
use crate::net::ResidualTriple;
use crate::tensor::Tensor3;

pub const CHARBONNIER_EPS: f64 = 1e-3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LossNorm {
    /// Mean over elements of `sqrt(d² + ε²)`.
    #[default]
    PerPixel,
    /// `sqrt(‖d‖² + ε²)` over the whole tensor.
    Global,
}

impl std::str::FromStr for LossNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perpixel" => Ok(LossNorm::PerPixel),
            "global" => Ok(LossNorm::Global),
            other => Err(Error::Config(format!("unknown loss norm `{other}`"))),
        }
    }
}

/// `sqrt(x + ε²) - ε`, stable for small `x`.
fn excess(x: f64, eps: f64) -> f64 {
    x / ((x + eps * eps).sqrt() + eps)
}

pub fn charbonnier(pred: &Tensor3<f32>, target: &Tensor3<f32>, eps: f64, norm: LossNorm) -> Result<f64> {
    pred.expect_same_shape(target, "charbonnier")?;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    let sq = pred.data().iter().zip(target.data()).map(|(&a, &b)| {
        let d = a as f64 - b as f64;
        d * d
    });
    // Accumulating the excess over ε keeps the zero-difference case exactly ε.
    let over = match norm {
        LossNorm::PerPixel => {
            let n = pred.data().len().max(1) as f64;
            sq.map(|x| excess(x, eps)).sum::<f64>() / n
        }
        LossNorm::Global => excess(sq.sum(), eps),
    };
    Ok(eps + over)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepLosses {
    pub spatial: f64,
    pub refined: f64,
    pub future: f64,
    pub past: f64,
}

impl StepLosses {
    pub fn sum(&self) -> f64 {
        self.spatial + self.refined + self.future + self.past
    }
}

pub fn compute_losses(
    triple: &ResidualTriple,
    refined: &Tensor3<f32>,
    gt: &ResidualTriple,
    eps: f64,
    norm: LossNorm,
) -> Result<StepLosses> {
    Ok(StepLosses {
        spatial: charbonnier(&triple.s, &gt.s, eps, norm)?,
        refined: charbonnier(refined, &gt.s, eps, norm)?,
        future: charbonnier(&triple.f, &gt.f, eps, norm)?,
        past: charbonnier(&triple.p, &gt.p, eps, norm)?,
    })
}

/// Mean over steps of the per-step loss sums. `None` for no steps.
pub fn total_loss(steps: &[StepLosses]) -> Option<f64> {
    if steps.is_empty() {
        return None;
    }
    Some(steps.iter().map(StepLosses::sum).sum::<f64>() / steps.len() as f64)
}
