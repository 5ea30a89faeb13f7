//! Network parameters: seeded initialization and the binary weight file.
//!
//! File layout, all integers little-endian:
//!
//! ```text
//! "ETDM" | version: u32 | config: 8 x u32 (NetworkConfig field order)
//! per layer, twice (`<name>.weight` then `<name>.bias`):
//!     name_len: u32 | name: ASCII | dims: 4 x u32 | payload: f32 x prod(dims)
//! crc32: u32   (IEEE CRC-32 over all payload bytes, in file order)
//! ```
//!
//! Weight dims are `(out, in, kh, kw)`; bias dims are `(out, 1, 1, 1)`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::NetworkConfig;
use crate::error::{Error, Result};
use crate::tensor::ConvSpec;

pub const MAGIC: &[u8; 4] = b"ETDM";
pub const FORMAT_VERSION: u32 = 1;

/// Static description of one convolution layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerInfo {
    pub name: String,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
    pub dilation: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResBlock {
    pub a: ConvSpec<f32>,
    pub b: ConvSpec<f32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchWeights {
    pub entry: ConvSpec<f32>,
    pub blocks: Vec<ResBlock>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkWeights {
    config: NetworkConfig,
    pub lv: BranchWeights,
    pub hv: BranchWeights,
    pub fuse: ConvSpec<f32>,
    pub trunk: Vec<ResBlock>,
    pub head_spatial: ConvSpec<f32>,
    pub head_past: ConvSpec<f32>,
    pub head_future: ConvSpec<f32>,
    pub refine_entry: ConvSpec<f32>,
    pub refine_blocks: Vec<ResBlock>,
    pub refine_exit: ConvSpec<f32>,
}

/// Canonical layer list for `config`; also the record order in weight files.
pub fn layout(config: &NetworkConfig) -> Vec<LayerInfo> {
    let c = config.branch_channels;
    let rc = config.residual_channels();
    let mut layers = Vec::new();
    let mut push = |name: String, i: usize, o: usize, k: usize, d: usize| {
        layers.push(LayerInfo {
            name,
            in_channels: i,
            out_channels: o,
            kernel_size: k,
            dilation: d,
        })
    };
    for (prefix, d) in [("lv", 1), ("hv", config.hv_dilation)] {
        // prev hidden + three RGB frames
        push(format!("{prefix}.entry"), c + 9, c, 3, d);
        for i in 0..config.branch_blocks {
            push(format!("{prefix}.block{i}.a"), c, c, 3, d);
            push(format!("{prefix}.block{i}.b"), c, c, 3, d);
        }
    }
    push("fuse".into(), 2 * c, c, 1, 1);
    for i in 0..config.trunk_blocks {
        push(format!("trunk.block{i}.a"), c, c, 3, 1);
        push(format!("trunk.block{i}.b"), c, c, 3, 1);
    }
    for head in ["spatial", "past", "future"] {
        push(format!("head.{head}"), c, rc, 3, 1);
    }
    let rin = (2 * config.buffer_size + 1) * rc;
    let r = config.refine_channels;
    push("refine.entry".into(), rin, r, 3, 1);
    for i in 0..config.refine_blocks {
        push(format!("refine.block{i}.a"), r, r, 3, 1);
        push(format!("refine.block{i}.b"), r, r, 3, 1);
    }
    push("refine.exit".into(), r, rc, 3, 1);
    layers
}

impl NetworkWeights {
    /// Uniform initialization in `±1/sqrt(fan_in)` for weights and biases,
    /// from a ChaCha8 stream seeded with `seed`.
    pub fn init(config: NetworkConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let specs = layout(&config)
            .into_iter()
            .map(|l| {
                let fan_in = l.in_channels * l.kernel_size * l.kernel_size;
                let bound = 1.0 / (fan_in as f32).sqrt();
                let n = l.out_channels * fan_in;
                let weights = (0..n).map(|_| rng.random_range(-bound..bound)).collect();
                let bias = (0..l.out_channels).map(|_| rng.random_range(-bound..bound)).collect();
                ConvSpec::new(l.in_channels, l.out_channels, l.kernel_size, l.dilation, weights, bias)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(config, specs)
    }

    pub fn zeros(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let specs = layout(&config)
            .into_iter()
            .map(|l| ConvSpec::zeros(l.in_channels, l.out_channels, l.kernel_size, l.dilation))
            .collect();
        Self::assemble(config, specs)
    }

    fn assemble(config: NetworkConfig, specs: Vec<ConvSpec<f32>>) -> Result<Self> {
        let expected = layout(&config).len();
        if specs.len() != expected {
            return Err(Error::weights(
                "<network>",
                format!("{} layers, expected {expected}", specs.len()),
            ));
        }
        let mut it = specs.into_iter();
        let mut next = move || it.next().expect("length checked above");
        let lv = BranchWeights {
            entry: next(),
            blocks: res_blocks(&mut next, config.branch_blocks),
        };
        let hv = BranchWeights {
            entry: next(),
            blocks: res_blocks(&mut next, config.branch_blocks),
        };
        let fuse = next();
        let trunk = res_blocks(&mut next, config.trunk_blocks);
        let head_spatial = next();
        let head_past = next();
        let head_future = next();
        let refine_entry = next();
        let refine_blocks = res_blocks(&mut next, config.refine_blocks);
        let refine_exit = next();
        Ok(NetworkWeights {
            config,
            lv,
            hv,
            fuse,
            trunk,
            head_spatial,
            head_past,
            head_future,
            refine_entry,
            refine_blocks,
            refine_exit,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    /// All layers in canonical (file) order.
    pub fn specs(&self) -> Vec<&ConvSpec<f32>> {
        let mut v = Vec::new();
        for br in [&self.lv, &self.hv] {
            v.push(&br.entry);
            for blk in &br.blocks {
                v.extend([&blk.a, &blk.b]);
            }
        }
        v.push(&self.fuse);
        for blk in &self.trunk {
            v.extend([&blk.a, &blk.b]);
        }
        v.extend([&self.head_spatial, &self.head_past, &self.head_future]);
        v.push(&self.refine_entry);
        for blk in &self.refine_blocks {
            v.extend([&blk.a, &blk.b]);
        }
        v.push(&self.refine_exit);
        v
    }

    pub fn zero_heads(&mut self) {
        for spec in [&mut self.head_spatial, &mut self.head_past, &mut self.head_future] {
            zero_spec(spec);
        }
    }

    pub fn zero_refinement(&mut self) {
        zero_spec(&mut self.refine_entry);
        for blk in &mut self.refine_blocks {
            zero_spec(&mut blk.a);
            zero_spec(&mut blk.b);
        }
        zero_spec(&mut self.refine_exit);
    }

    pub fn refinement_is_zero(&self) -> bool {
        self.refine_entry.is_zero()
            && self.refine_exit.is_zero()
            && self.refine_blocks.iter().all(|b| b.a.is_zero() && b.b.is_zero())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        for v in self.config.as_array() {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        let mut crc = crc32fast::Hasher::new();
        for (info, spec) in layout(&self.config).iter().zip(self.specs()) {
            let k = spec.kernel_size as u32;
            let records = [
                (
                    format!("{}.weight", info.name),
                    [spec.out_channels as u32, spec.in_channels as u32, k, k],
                    &spec.weights,
                ),
                (
                    format!("{}.bias", info.name),
                    [spec.out_channels as u32, 1, 1, 1],
                    &spec.bias,
                ),
            ];
            for (name, dims, values) in records {
                out.extend_from_slice(&(name.len() as u32).to_le_bytes());
                out.extend_from_slice(name.as_bytes());
                for d in dims {
                    out.extend_from_slice(&d.to_le_bytes());
                }
                let start = out.len();
                for v in values {
                    out.extend_from_slice(&v.to_le_bytes());
                }
                crc.update(&out[start..]);
            }
        }
        out.extend_from_slice(&crc.finalize().to_le_bytes());
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Parses and fully validates a weight file image. Nothing is built unless
    /// every record and the checksum check out.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let header = "<header>";
        if r.take(4, header)? != MAGIC {
            return Err(Error::weights(header, "bad magic, not an ETDM weight file"));
        }
        let version = r.u32(header)?;
        if version != FORMAT_VERSION {
            return Err(Error::weights(header, format!("unsupported format version {version}")));
        }
        let mut fields = [0usize; 8];
        for f in &mut fields {
            *f = r.u32(header)? as usize;
        }
        let config = NetworkConfig::from_array(fields);
        config
            .validate()
            .map_err(|e| Error::weights(header, e.to_string()))?;

        let body_end = bytes
            .len()
            .checked_sub(4)
            .filter(|&end| end >= r.pos)
            .ok_or_else(|| Error::weights(header, "file truncated before checksum"))?;
        let mut crc = crc32fast::Hasher::new();
        let mut specs = Vec::new();
        for info in layout(&config) {
            let weight_name = format!("{}.weight", info.name);
            let (wdims, weights) = r.record(&weight_name, body_end, &mut crc)?;
            let [o, i, kh, kw] = wdims;
            if o != info.out_channels || i != info.in_channels {
                return Err(Error::weights(
                    &weight_name,
                    format!(
                        "dims {wdims:?}, config expects out={} in={}",
                        info.out_channels, info.in_channels
                    ),
                ));
            }
            if kh != kw || kh % 2 == 0 {
                return Err(Error::weights(&weight_name, format!("kernel {kh}x{kw} is not odd and square")));
            }
            let bias_name = format!("{}.bias", info.name);
            let (bdims, bias) = r.record(&bias_name, body_end, &mut crc)?;
            if bdims != [o, 1, 1, 1] {
                return Err(Error::weights(&bias_name, format!("dims {bdims:?}, expected [{o}, 1, 1, 1]")));
            }
            let spec = ConvSpec::new(i, o, kh, info.dilation, weights, bias)
                .map_err(|e| Error::weights(&info.name, e.to_string()))?;
            specs.push(spec);
        }
        if r.pos != body_end {
            return Err(Error::weights(
                "<trailer>",
                format!("{} unexpected bytes after the last layer", body_end - r.pos),
            ));
        }
        let stored = u32::from_le_bytes(bytes[body_end..].try_into().expect("4 bytes"));
        let computed = crc.finalize();
        if stored != computed {
            return Err(Error::weights(
                "<trailer>",
                format!("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}"),
            ));
        }
        Self::assemble(config, specs)
    }
}

fn res_blocks(next: &mut impl FnMut() -> ConvSpec<f32>, n: usize) -> Vec<ResBlock> {
    (0..n).map(|_| ResBlock { a: next(), b: next() }).collect()
}

fn zero_spec(spec: &mut ConvSpec<f32>) {
    spec.weights.iter_mut().for_each(|v| *v = 0.0);
    spec.bias.iter_mut().for_each(|v| *v = 0.0);
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, layer: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::weights(layer, "unexpected end of file"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, layer: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, layer)?.try_into().expect("4 bytes")))
    }

    fn record(
        &mut self,
        expected_name: &str,
        body_end: usize,
        crc: &mut crc32fast::Hasher,
    ) -> Result<([usize; 4], Vec<f32>)> {
        let len = self.u32(expected_name)? as usize;
        let name = self.take(len, expected_name)?;
        if name != expected_name.as_bytes() {
            return Err(Error::weights(
                expected_name,
                format!("found record `{}` instead", String::from_utf8_lossy(name)),
            ));
        }
        let mut dims = [0usize; 4];
        for d in &mut dims {
            *d = self.u32(expected_name)? as usize;
        }
        let count = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        let nbytes = count
            .and_then(|c| c.checked_mul(4))
            .ok_or_else(|| Error::weights(expected_name, "dims overflow"))?;
        if self.pos + nbytes > body_end {
            return Err(Error::weights(
                expected_name,
                format!("truncated payload: needs {nbytes} bytes, {} remain", body_end.saturating_sub(self.pos)),
            ));
        }
        let payload = self.take(nbytes, expected_name)?;
        crc.update(payload);
        let values: Vec<f32> = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::weights(expected_name, "non-finite parameter"));
        }
        Ok((dims, values))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> NetworkConfig {
        NetworkConfig {
            branch_channels: 4,
            branch_blocks: 1,
            trunk_blocks: 2,
            refine_channels: 3,
            refine_blocks: 1,
            hv_dilation: 2,
            scale: 2,
            buffer_size: 1,
        }
    }

    #[test]
    fn same_seed_same_weights() {
        let a = NetworkWeights::init(small(), 9).unwrap();
        let b = NetworkWeights::init(small(), 9).unwrap();
        let c = NetworkWeights::init(small(), 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn init_respects_fan_in_bound() {
        let w = NetworkWeights::init(small(), 1).unwrap();
        for (info, spec) in layout(&small()).iter().zip(w.specs()) {
            let bound = 1.0 / ((info.in_channels * info.kernel_size.pow(2)) as f32).sqrt();
            assert!(spec.weights.iter().all(|v| v.abs() <= bound), "{}", info.name);
            assert_eq!(spec.dilation, info.dilation);
        }
    }

    #[test]
    fn hv_layers_are_dilated() {
        let w = NetworkWeights::init(small(), 1).unwrap();
        assert_eq!(w.hv.entry.dilation, 2);
        assert!(w.hv.blocks.iter().all(|b| b.a.dilation == 2 && b.b.dilation == 2));
        assert_eq!(w.lv.entry.dilation, 1);
    }

    #[test]
    fn bytes_round_trip() {
        let w = NetworkWeights::init(small(), 5).unwrap();
        let bytes = w.to_bytes();
        assert_eq!(&bytes[..4], MAGIC);
        assert_eq!(NetworkWeights::from_bytes(&bytes).unwrap(), w);
    }

    #[test]
    fn truncated_payload_names_layer() {
        let bytes = NetworkWeights::init(small(), 5).unwrap().to_bytes();
        let cut = &bytes[..bytes.len() / 2];
        match NetworkWeights::from_bytes(cut) {
            Err(Error::Weights { layer, .. }) => assert!(layer.contains('.'), "{layer}"),
            other => panic!("expected weight error, got {other:?}"),
        }
    }

    #[test]
    fn corrupted_payload_fails_checksum() {
        let mut bytes = NetworkWeights::init(small(), 5).unwrap().to_bytes();
        let n = bytes.len();
        bytes[n - 10] ^= 0x01;
        assert!(matches!(
            NetworkWeights::from_bytes(&bytes),
            Err(Error::Weights { .. })
        ));
    }

    #[test]
    fn config_mismatch_names_layer() {
        let mut bytes = NetworkWeights::init(small(), 5).unwrap().to_bytes();
        // Bump branch_channels in the header: every layer dim now disagrees.
        bytes[8..12].copy_from_slice(&5u32.to_le_bytes());
        match NetworkWeights::from_bytes(&bytes) {
            Err(Error::Weights { layer, .. }) => assert_eq!(layer, "lv.entry.weight"),
            other => panic!("expected weight error, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic() {
        let mut bytes = NetworkWeights::zeros(small()).unwrap().to_bytes();
        bytes[0] = b'X';
        assert!(NetworkWeights::from_bytes(&bytes).is_err());
    }
}
