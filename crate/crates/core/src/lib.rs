//! Single-image exposure synthesis and fusion toolkit.
//!
//! Given one 8-bit image and its camera response functions, the library
//! synthesizes a darker and a brighter exposure via intensity mapping
//! functions, gates them with exposedness masks, optionally refines them
//! through a pluggable residual refiner, and fuses the three exposures
//! into an information-enriched 8-bit image or merges them into a linear
//! radiance map. A synthetic-scene virtual camera and a metric suite
//! (MSE/PSNR/SSIM/MEF-SSIM plus the restoration objectives) support
//! verification end to end.

pub mod config;
pub mod crf;
pub mod error;
pub mod exposedness;
pub mod fuse;
pub mod harness;
pub mod image;
pub mod metrics;
pub mod nonlocal;
pub mod pfm;
pub mod pyramid;
pub mod synth;
pub mod tensor;

pub use config::{BrightRange, ExposureConfig, PipelineConfig};
pub use crf::Crf;
pub use error::{Error, Result};
pub use image::{quantize, LdrImage, Plane, RadianceImage, RealImage};
pub use synth::WeightMode;
