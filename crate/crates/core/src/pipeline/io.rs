//! Frame directories: `frame_%05d.png` (8-bit RGB) or `frame_%05d.f32`
//! (little-endian `u32` channels, height, width, then planar `f32` data).

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image::{Frame, Tier};
use crate::tensor::Tensor3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FrameFormat {
    #[default]
    Png,
    Raw,
}

impl FrameFormat {
    pub fn extension(self) -> &'static str {
        match self {
            FrameFormat::Png => "png",
            FrameFormat::Raw => "f32",
        }
    }
}

pub fn frame_name(index: usize, format: FrameFormat) -> String {
    format!("frame_{index:05}.{}", format.extension())
}

fn parse_name(name: &str) -> Option<(usize, FrameFormat)> {
    let rest = name.strip_prefix("frame_")?;
    let (num, ext) = rest.split_once('.')?;
    let format = match ext {
        "png" => FrameFormat::Png,
        "f32" => FrameFormat::Raw,
        _ => return None,
    };
    Some((num.parse().ok()?, format))
}

/// Reads `frame_00000 ..` from `dir`. Indices must be contiguous from 0 and
/// all files must share one format.
pub fn read_frames(dir: &Path, tier: Tier) -> Result<(Vec<Frame>, FrameFormat)> {
    let mut found: Vec<(usize, FrameFormat, PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if let Some((i, f)) = entry.file_name().to_str().and_then(parse_name) {
            found.push((i, f, entry.path()));
        }
    }
    if found.is_empty() {
        return Err(Error::Input(format!("no frame_%05d.png or .f32 files in {}", dir.display())));
    }
    found.sort_by_key(|(i, _, _)| *i);
    let format = found[0].1;
    if found.iter().any(|(_, f, _)| *f != format) {
        return Err(Error::Input(format!("{} mixes png and f32 frames", dir.display())));
    }
    if let Some((pos, (i, _, _))) = found.iter().enumerate().find(|(pos, (i, _, _))| pos != i) {
        return Err(Error::Input(format!(
            "{}: frame indices must be contiguous from 0, found {i} at position {pos}",
            dir.display()
        )));
    }
    let frames = found
        .iter()
        .map(|(_, f, p)| match f {
            FrameFormat::Png => read_png(p, tier),
            FrameFormat::Raw => read_raw(p, tier),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((frames, format))
}

pub fn write_frames(dir: &Path, frames: &[Frame], format: FrameFormat) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, f) in frames.iter().enumerate() {
        let path = dir.join(frame_name(i, format));
        match format {
            FrameFormat::Png => write_png(&path, f)?,
            FrameFormat::Raw => write_raw(&path, f.planes())?,
        }
    }
    Ok(())
}

pub fn read_png(path: &Path, tier: Tier) -> Result<Frame> {
    let img = image::open(path)
        .map_err(|source| Error::Image {
            path: path.into(),
            source,
        })?
        .into_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let raw = img.as_raw();
    let planes = Tensor3::from_fn(3, h, w, |c, y, x| raw[(y * w + x) * 3 + c] as f32 / 255.0);
    Frame::new(planes, tier)
}

/// 8-bit PNG of a 1- or 3-channel frame, clamped and rounded.
pub fn write_png(path: &Path, frame: &Frame) -> Result<()> {
    let (c, h, w) = frame.shape();
    let p = frame.planes();
    let to8 = |v: f32| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    let mut buf = Vec::with_capacity(h * w * c);
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                buf.push(to8(p.get(ch, y, x)));
            }
        }
    }
    let color = if c == 3 {
        image::ExtendedColorType::Rgb8
    } else {
        image::ExtendedColorType::L8
    };
    image::save_buffer(path, &buf, w as u32, h as u32, color).map_err(|source| Error::Image {
        path: path.into(),
        source,
    })
}

pub fn write_raw(path: &Path, t: &Tensor3<f32>) -> Result<()> {
    let (c, h, w) = t.shape();
    let mut buf = Vec::with_capacity(12 + t.data().len() * 4);
    for d in [c, h, w] {
        buf.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in t.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_raw_tensor(path: &Path) -> Result<Tensor3<f32>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |why: &str| Error::Input(format!("{}: {why}", path.display()));
    if bytes.len() < 12 {
        return Err(bad("truncated header"));
    }
    let dim = |i: usize| u32::from_le_bytes(bytes[i * 4..i * 4 + 4].try_into().unwrap()) as usize;
    let (c, h, w) = (dim(0), dim(1), dim(2));
    let n = c
        .checked_mul(h)
        .and_then(|v| v.checked_mul(w))
        .ok_or_else(|| bad("dimensions overflow"))?;
    if bytes.len() != 12 + n * 4 {
        return Err(bad(&format!("expected {} payload bytes for {c}x{h}x{w}, got {}", n * 4, bytes.len() - 12)));
    }
    let data = bytes[12..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Tensor3::from_vec(c, h, w, data).map_err(|e| bad(&e.to_string()))
}

pub fn read_raw(path: &Path, tier: Tier) -> Result<Frame> {
    Frame::new(read_raw_tensor(path)?, tier).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}
