//! Skin tone estimation from dermoscopic images via the Individual Typology
//! Angle (ITA), plus the evaluation tooling around it: segmentation quality
//! as it affects ITA, per-skin-tone classifier accuracy with a linear trend
//! test, dataset audits and a synthetic data generator with planted ground
//! truth.

pub mod audit;
pub mod colorimetry;
pub mod config;
pub mod error;
pub mod formats;
pub mod ita;
pub mod seg_eval;
pub mod stats;
pub mod svg;
pub mod synth;

pub use colorimetry::{srgb_to_lab, GrayscaleMode, PixelLab, RgbPixel};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use ita::{
    categorize, compute_ita, ita_from_lab, ExclusionMask, ItaConfig, ItaEstimate, MaskPolarity, SkinToneCategory,
    TrimMode,
};

/// Version string embedded in every JSON and SVG artifact.
pub const TOOL_VERSION: &str = concat!("skintone ", env!("CARGO_PKG_VERSION"));
