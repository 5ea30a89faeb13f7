use std::fs;
use std::path::{Path, PathBuf};

use super::loss::{total_loss, StepLosses};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameMetrics {
    pub index: usize,
    pub psnr_db: f64,
    pub ssim: f64,
    pub losses: Option<StepLosses>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub frames: usize,
    pub evaluated: usize,
    pub psnr_db: f64,
    pub ssim: f64,
    pub loss: Option<f64>,
}

impl std::fmt::Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "frames={} evaluated={} mean_psnr_db={} mean_ssim={}",
            self.frames,
            self.evaluated,
            fmt_f64(self.psnr_db),
            fmt_f64(self.ssim)
        )?;
        if let Some(l) = self.loss {
            write!(f, " loss={}", fmt_f64(l))?;
        }
        Ok(())
    }
}

/// Per-frame metrics for one sequence, indexed by original (unpadded) frame.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SequenceReport {
    pub frames: Vec<FrameMetrics>,
}

const BASE_HEADER: [&str; 3] = ["index", "psnr_db", "ssim"];
const LOSS_HEADER: [&str; 5] = ["loss_s", "loss_s_refined", "loss_f", "loss_p", "loss_step"];

fn fmt_f64(v: f64) -> String {
    match v {
        f64::INFINITY => "inf".into(),
        f64::NEG_INFINITY => "-inf".into(),
        v => v.to_string(),
    }
}

fn parse_f64(s: &str, path: &Path) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Input(format!("{}: bad number `{s}`", path.display())))
}

impl SequenceReport {
    pub fn has_losses(&self) -> bool {
        !self.frames.is_empty() && self.frames.iter().all(|f| f.losses.is_some())
    }

    /// Frames that enter the aggregate: all but the first and the last.
    pub fn interior(&self) -> &[FrameMetrics] {
        if self.frames.len() < 3 {
            &[]
        } else {
            &self.frames[1..self.frames.len() - 1]
        }
    }

    /// Means over the interior frames, `None` for sequences shorter than 3.
    pub fn summary(&self) -> Option<Summary> {
        let inner = self.interior();
        if inner.is_empty() {
            return None;
        }
        let n = inner.len() as f64;
        let losses: Vec<StepLosses> = self.frames.iter().filter_map(|f| f.losses).collect();
        Some(Summary {
            frames: self.frames.len(),
            evaluated: inner.len(),
            psnr_db: inner.iter().map(|f| f.psnr_db).sum::<f64>() / n,
            ssim: inner.iter().map(|f| f.ssim).sum::<f64>() / n,
            loss: if self.has_losses() { total_loss(&losses) } else { None },
        })
    }

    pub fn summary_line(&self) -> String {
        match self.summary() {
            Some(s) => s.to_string(),
            None => format!("frames={} evaluated=0 (need at least 3 frames)", self.frames.len()),
        }
    }

    /// Sidecar path holding the summary line next to a CSV report.
    pub fn summary_path(csv_path: &Path) -> PathBuf {
        csv_path.with_extension("summary.txt")
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let with_losses = self.has_losses();
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        let mut header: Vec<&str> = BASE_HEADER.to_vec();
        if with_losses {
            header.extend(LOSS_HEADER);
        }
        w.write_record(&header).map_err(|e| csv_err(path, e))?;
        for f in &self.frames {
            let mut row = vec![f.index.to_string(), fmt_f64(f.psnr_db), fmt_f64(f.ssim)];
            if let (true, Some(l)) = (with_losses, f.losses) {
                row.extend([l.spatial, l.refined, l.future, l.past, l.sum()].map(fmt_f64));
            }
            w.write_record(&row).map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Writes the CSV and the summary sidecar.
    pub fn write(&self, csv_path: &Path) -> Result<()> {
        self.write_csv(csv_path)?;
        let summary = Self::summary_path(csv_path);
        fs::write(&summary, self.summary_line() + "\n").map_err(|e| Error::io(&summary, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
        let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
        let with_losses = header.len() == BASE_HEADER.len() + LOSS_HEADER.len();
        if header.iter().take(3).ne(BASE_HEADER) {
            return Err(Error::Input(format!("{}: unexpected header", path.display())));
        }
        let mut frames = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| csv_err(path, e))?;
            let num = |i: usize| parse_f64(&rec[i], path);
            let index = rec[0]
                .parse()
                .map_err(|_| Error::Input(format!("{}: bad index `{}`", path.display(), &rec[0])))?;
            let losses = if with_losses {
                Some(StepLosses {
                    spatial: num(3)?,
                    refined: num(4)?,
                    future: num(5)?,
                    past: num(6)?,
                })
            } else {
                None
            };
            frames.push(FrameMetrics {
                index,
                psnr_db: num(1)?,
                ssim: num(2)?,
                losses,
            });
        }
        Ok(SequenceReport { frames })
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Input(format!("{}: {e}", path.display()))
}
