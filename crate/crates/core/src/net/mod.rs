//! The recurrent two-branch network: LV/HV branches with hidden states,
//! fused trunk, spatial/past/future residual heads and the refinement net.
//! Inference only.

mod align;
mod model;
mod oracle;
mod weights;

pub use align::{AlignHook, IdentityAlign};
pub use model::{average_refine, branch_step, reconstruct, refine, run_heads, BranchKind};
pub use oracle::oracle_heads;
pub use weights::{
    BranchWeights, LayerInfo, NetworkWeights, ResBlock, FORMAT_VERSION, MAGIC,
};

use crate::error::{Error, Result};
use crate::tensor::Tensor3;

/// Architecture hyper-parameters. Field order is also the order of the config
/// block in the weight file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NetworkConfig {
    pub branch_channels: usize,
    pub branch_blocks: usize,
    pub trunk_blocks: usize,
    pub refine_channels: usize,
    pub refine_blocks: usize,
    pub hv_dilation: usize,
    pub scale: usize,
    pub buffer_size: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            branch_channels: 96,
            branch_blocks: 2,
            trunk_blocks: 16,
            refine_channels: 64,
            refine_blocks: 16,
            hv_dilation: 2,
            scale: 4,
            buffer_size: 3,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = self.as_array();
        let names = [
            "branch_channels",
            "branch_blocks",
            "trunk_blocks",
            "refine_channels",
            "refine_blocks",
            "hv_dilation",
            "scale",
            "buffer_size",
        ];
        if let Some((name, _)) = names.iter().zip(fields).find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("network config field `{name}` must be >= 1")));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [usize; 8] {
        [
            self.branch_channels,
            self.branch_blocks,
            self.trunk_blocks,
            self.refine_channels,
            self.refine_blocks,
            self.hv_dilation,
            self.scale,
            self.buffer_size,
        ]
    }

    pub fn from_array(v: [usize; 8]) -> Self {
        NetworkConfig {
            branch_channels: v[0],
            branch_blocks: v[1],
            trunk_blocks: v[2],
            refine_channels: v[3],
            refine_blocks: v[4],
            hv_dilation: v[5],
            scale: v[6],
            buffer_size: v[7],
        }
    }

    /// Channels of one packed residual: `3 r²`.
    pub fn residual_channels(&self) -> usize {
        3 * self.scale * self.scale
    }
}

/// Per-branch recurrent features at LR resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenState {
    pub h_lv: Tensor3<f32>,
    pub h_hv: Tensor3<f32>,
}

impl HiddenState {
    pub fn zeros(config: &NetworkConfig, height: usize, width: usize) -> Self {
        HiddenState {
            h_lv: Tensor3::zeros(config.branch_channels, height, width),
            h_hv: Tensor3::zeros(config.branch_channels, height, width),
        }
    }
}

/// Head outputs at one step, each packed as `(3 r², H, W)`: spatial residual
/// `s`, past difference `p` and future difference `f`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualTriple {
    pub s: Tensor3<f32>,
    pub p: Tensor3<f32>,
    pub f: Tensor3<f32>,
}

impl ResidualTriple {
    pub fn new(s: Tensor3<f32>, p: Tensor3<f32>, f: Tensor3<f32>) -> Result<Self> {
        s.expect_same_shape(&p, "ResidualTriple")?;
        s.expect_same_shape(&f, "ResidualTriple")?;
        Ok(ResidualTriple { s, p, f })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        let z = Tensor3::zeros(channels, height, width);
        ResidualTriple {
            s: z.clone(),
            p: z.clone(),
            f: z,
        }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.s.shape()
    }
}

/// Where the residual triples come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HeadMode {
    #[default]
    Network,
    /// Exact residuals computed from HR ground truth.
    Oracle,
}

impl std::str::FromStr for HeadMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "network" => Ok(HeadMode::Network),
            "oracle" => Ok(HeadMode::Oracle),
            other => Err(Error::Config(format!("unknown head mode `{other}`"))),
        }
    }
}
