use std::fs;
use std::path::PathBuf;

use super::io::{write_png, write_raw};
use super::StepObserver;
use crate::error::{Error, Result};
use crate::image::{Frame, Tier};
use crate::refinement::{PropagationFifo, RefinementBuffers};
use crate::region::DifferenceMasks;

/// Writes LV masks as PNG and buffer entries as raw tensors with a text
/// header next to each.
#[derive(Clone, Debug)]
pub struct DumpObserver {
    pub dir: PathBuf,
    pub masks: bool,
    pub buffers: bool,
}

impl DumpObserver {
    fn ensure_dir(&self) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))
    }

    fn dump_side(&self, t: usize, side: &str, fifo: &PropagationFifo<f32>) -> Result<()> {
        for (i, slot) in fifo.slots().iter().enumerate() {
            let stem = format!("buffer_{t:05}_{side}_{}", i + 1);
            write_raw(&self.dir.join(format!("{stem}.f32")), &slot.value)?;
            let (c, h, w) = slot.value.shape();
            let origin = slot.origin.map_or("none".to_string(), |o| o.to_string());
            let header = format!("shape={c},{h},{w}\nt={t}\nslot={}\nside={side}\norigin={origin}\n", i + 1);
            let path = self.dir.join(format!("{stem}.txt"));
            fs::write(&path, header).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

impl StepObserver for DumpObserver {
    fn on_masks(&mut self, t: usize, neighbor: &str, masks: &DifferenceMasks) -> Result<()> {
        if !self.masks {
            return Ok(());
        }
        self.ensure_dir()?;
        let frame = Frame::new(masks.lv().clone(), Tier::Lr)?;
        write_png(&self.dir.join(format!("mask_lv_{t:05}_{neighbor}.png")), &frame)
    }

    fn on_buffers(&mut self, t: usize, buffers: &RefinementBuffers<f32>) -> Result<()> {
        if !self.buffers {
            return Ok(());
        }
        self.ensure_dir()?;
        self.dump_side(t, "past", &buffers.past)?;
        self.dump_side(t, "future", &buffers.future)
    }
}
