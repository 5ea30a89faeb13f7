//! Recurrent video super-resolution inference.
//!
//! Each LR frame is upscaled by predicting a packed spatial residual on top
//! of a bicubic upsample. Neighboring frames are split into low- and
//! high-variance regions that feed two recurrent branches, and the spatial
//! residual is refined with residuals carried over from past and future steps.

pub mod error;
pub mod image;
pub mod net;
pub mod pipeline;
pub mod refinement;
pub mod region;
pub mod tensor;

pub use error::{Error, Result};
