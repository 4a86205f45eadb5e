//! Scoring predicted exclusion masks against ground truth.
//!
//! The positive class is "excluded" (diseased skin): a false negative is a
//! diseased pixel the prediction lets into the skin-tone estimate.

use image::RgbImage;
use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ita::{compute_ita, ExclusionMask, ItaConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelMetrics {
    pub accuracy: f64,
    pub false_negative_rate: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

pub fn confusion(pred: &ExclusionMask, gt: &ExclusionMask) -> Result<Confusion> {
    if pred.dimensions() != gt.dimensions() {
        return Err(Error::DimensionMismatch {
            image_w: gt.width(),
            image_h: gt.height(),
            mask_w: pred.width(),
            mask_h: pred.height(),
        });
    }
    let mut c = Confusion::default();
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        match (p, g) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Pixel accuracy and false negative rate of `pred` relative to `gt`.
/// Argument order matters for the FNR. When `gt` excludes nothing the FNR
/// is reported as 0.
pub fn mask_pixel_metrics(pred: &ExclusionMask, gt: &ExclusionMask) -> Result<PixelMetrics> {
    let c = confusion(pred, gt)?;
    let total = c.tp + c.tn + c.fp + c.fn_;
    if total == 0 {
        return Err(Error::EmptyInput("mask has no pixels"));
    }
    let positives = c.tp + c.fn_;
    Ok(PixelMetrics {
        accuracy: (c.tp + c.tn) as f64 / total as f64,
        false_negative_rate: if positives == 0 {
            0.0
        } else {
            c.fn_ as f64 / positives as f64
        },
    })
}

/// One image with its predicted and ground-truth masks.
#[derive(Debug, Clone)]
pub struct SegCase {
    pub image_id: String,
    pub image: RgbImage,
    pub pred: ExclusionMask,
    pub gt: ExclusionMask,
}

pub fn ita_abs_error(case: &SegCase, cfg: &ItaConfig) -> Result<f64> {
    let with_pred = compute_ita(&case.image, &case.pred, cfg).map_err(|e| e.for_image(&case.image_id))?;
    let with_gt = compute_ita(&case.image, &case.gt, cfg).map_err(|e| e.for_image(&case.image_id))?;
    Ok((with_pred.ita_degrees - with_gt.ita_degrees).abs())
}

/// Mean over images of `|ITA(pred) - ITA(gt)|`.
pub fn ita_mae(cases: &[SegCase], cfg: &ItaConfig) -> Result<f64> {
    if cases.is_empty() {
        return Err(Error::NoEvaluablePairs);
    }
    let errs = cases
        .par_iter()
        .map(|c| ita_abs_error(c, cfg))
        .collect::<Result<Vec<f64>>>()?;
    Ok(errs.iter().sum::<f64>() / errs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerImageSeg {
    pub image_id: String,
    pub accuracy: f64,
    pub false_negative_rate: f64,
    /// `None` when the ground-truth mask leaves no skin.
    pub abs_delta_ita: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegSkip {
    pub image_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegQualityReport {
    pub pixel_accuracy: f64,
    pub false_negative_rate: f64,
    /// `None` when no image had a usable ground-truth skin region.
    pub ita_mae_degrees: Option<f64>,
    pub n_images: usize,
    pub n_ita_pairs: usize,
    /// Aggregates are unweighted means of per-image values.
    pub aggregation: String,
    pub ita_skipped: Vec<SegSkip>,
    pub per_image: Vec<PerImageSeg>,
}

/// Scores every case. Images whose ground-truth mask excludes everything are
/// left out of the ITA error (with a warning) but still count towards the
/// pixel metrics. A predicted mask that excludes everything is an error.
pub fn evaluate_segmentation(cases: &[SegCase], cfg: &ItaConfig) -> Result<SegQualityReport> {
    if cases.is_empty() {
        return Err(Error::NoEvaluablePairs);
    }
    cfg.validate()?;
    let per_image = cases
        .par_iter()
        .map(|c| {
            let m = mask_pixel_metrics(&c.pred, &c.gt).map_err(|e| e.for_image(&c.image_id))?;
            let delta = if c.gt.all_excluded() {
                None
            } else {
                Some(ita_abs_error(c, cfg)?)
            };
            Ok(PerImageSeg {
                image_id: c.image_id.clone(),
                accuracy: m.accuracy,
                false_negative_rate: m.false_negative_rate,
                abs_delta_ita: delta,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n = per_image.len() as f64;
    let mut ita_skipped = Vec::new();
    let mut deltas = Vec::new();
    for p in &per_image {
        match p.abs_delta_ita {
            Some(d) => deltas.push(d),
            None => {
                warn!("{}: ground-truth mask excludes every pixel; left out of ITA error", p.image_id);
                ita_skipped.push(SegSkip {
                    image_id: p.image_id.clone(),
                    reason: "gt mask excludes every pixel".into(),
                });
            }
        }
    }
    Ok(SegQualityReport {
        pixel_accuracy: per_image.iter().map(|p| p.accuracy).sum::<f64>() / n,
        false_negative_rate: per_image.iter().map(|p| p.false_negative_rate).sum::<f64>() / n,
        ita_mae_degrees: (!deltas.is_empty()).then(|| deltas.iter().sum::<f64>() / deltas.len() as f64),
        n_images: per_image.len(),
        n_ita_pairs: deltas.len(),
        aggregation: "per_image_mean".into(),
        ita_skipped,
        per_image,
    })
}
