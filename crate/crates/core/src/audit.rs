//! Batch ITA estimation over a manifest, skin tone distribution and the
//! ITA versus grayscale correlation.

use std::path::Path;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigEcho, RunConfig};
use crate::error::{Error, Result};
use crate::formats::{load_mask, load_rgb, ItaResultRow, ManifestEntry};
use crate::ita::{compute_ita, ExclusionMask, ItaEstimate, SkinToneCategory};
use crate::seg_eval::SegCase;
use crate::stats::pearson;
use crate::TOOL_VERSION;

/// Flag attached to results computed without a mask.
pub const FLAG_NO_MASK: &str = "no_mask";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedImage {
    pub image_id: String,
    pub reason: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryCount {
    pub category: SkinToneCategory,
    pub count: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionReport {
    pub tool_version: &'static str,
    pub total_images: usize,
    pub n_estimated: usize,
    pub n_without_mask: usize,
    /// Lightest category first.
    pub categories: Vec<CategoryCount>,
    pub skipped: Vec<SkippedImage>,
    pub config: ConfigEcho,
}

impl DistributionReport {
    pub fn from_estimates<'a>(
        estimates: impl IntoIterator<Item = &'a ItaResultRow>,
        total_images: usize,
        skipped: Vec<SkippedImage>,
        cfg: &RunConfig,
    ) -> Self {
        let mut counts = [0usize; 8];
        let mut n = 0;
        let mut n_without_mask = 0;
        for row in estimates {
            counts[row.estimate.category.index()] += 1;
            n += 1;
            if row.flags.iter().any(|f| f == FLAG_NO_MASK) {
                n_without_mask += 1;
            }
        }
        let categories = SkinToneCategory::ALL
            .iter()
            .zip(counts)
            .map(|(&category, count)| CategoryCount {
                category,
                count,
                fraction: if n == 0 { 0.0 } else { count as f64 / n as f64 },
            })
            .collect();
        Self {
            tool_version: TOOL_VERSION,
            total_images,
            n_estimated: n,
            n_without_mask,
            categories,
            skipped,
            config: cfg.echo(),
        }
    }

    pub fn count(&self, cat: SkinToneCategory) -> usize {
        self.categories[cat.index()].count
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditOutput {
    pub results: Vec<ItaResultRow>,
    pub report: DistributionReport,
}

fn estimate_entry(entry: &ManifestEntry, cfg: &RunConfig) -> Result<ItaResultRow> {
    let image = load_rgb(&entry.image_path)?;
    let mut flags = Vec::new();
    let mask = match &entry.mask_path {
        Some(p) => load_mask(p, cfg.ita.mask_threshold, cfg.ita.mask_polarity)?,
        None => {
            flags.push(FLAG_NO_MASK.to_string());
            ExclusionMask::empty(image.width(), image.height())
        }
    };
    let estimate = compute_ita(&image, &mask, &cfg.ita)?;
    Ok(ItaResultRow {
        image_id: entry.image_id.clone(),
        estimate,
        flags,
    })
}

/// Runs `f` on a pool of `workers` threads (0 = rayon default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Estimates ITA for every manifest entry. Per-image failures become skip
/// records; they never abort the batch. Output order follows the manifest
/// regardless of scheduling.
pub fn run_audit(entries: &[ManifestEntry], cfg: &RunConfig) -> Result<AuditOutput> {
    cfg.validate()?;
    let outcomes: Vec<Result<ItaResultRow>> =
        with_workers(cfg.workers, || entries.par_iter().map(|e| estimate_entry(e, cfg)).collect())?;

    let mut results = Vec::with_capacity(entries.len());
    let mut skipped = Vec::new();
    for (entry, outcome) in entries.iter().zip(outcomes) {
        match outcome {
            Ok(row) => results.push(row),
            Err(e) => {
                warn!("skipping {}: {e}", entry.image_id);
                skipped.push(SkippedImage {
                    image_id: entry.image_id.clone(),
                    reason: e.kind().to_string(),
                    message: e.to_string(),
                });
            }
        }
    }
    let report = DistributionReport::from_estimates(&results, entries.len(), skipped, cfg);
    Ok(AuditOutput { results, report })
}

/// Loads image, predicted mask (`mask_path`) and ground-truth mask
/// (`gt_mask_path`) for every entry that has both. Entries lacking either
/// mask, or whose files fail to load, come back as skips in manifest order.
pub fn load_seg_cases(entries: &[ManifestEntry], cfg: &RunConfig) -> Result<(Vec<SegCase>, Vec<SkippedImage>)> {
    let load = |e: &ManifestEntry| -> Result<SegCase> {
        let (Some(pred), Some(gt)) = (&e.mask_path, &e.gt_mask_path) else {
            return Err(Error::EmptyInput("entry lacks mask_path or gt_mask_path"));
        };
        let (t, p) = (cfg.ita.mask_threshold, cfg.ita.mask_polarity);
        Ok(SegCase {
            image_id: e.image_id.clone(),
            image: load_rgb(&e.image_path)?,
            pred: load_mask(pred, t, p)?,
            gt: load_mask(gt, t, p)?,
        })
    };
    let outcomes: Vec<Result<SegCase>> = with_workers(cfg.workers, || entries.par_iter().map(load).collect())?;
    let mut cases = Vec::new();
    let mut skipped = Vec::new();
    for (entry, outcome) in entries.iter().zip(outcomes) {
        match outcome {
            Ok(c) => cases.push(c),
            Err(e) => {
                warn!("skipping {}: {e}", entry.image_id);
                skipped.push(SkippedImage {
                    image_id: entry.image_id.clone(),
                    reason: e.kind().to_string(),
                    message: e.to_string(),
                });
            }
        }
    }
    Ok((cases, skipped))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub n_images: usize,
    /// Pearson r between ITA and mean grayscale.
    pub r_mean: f64,
    /// Pearson r between ITA and median grayscale.
    pub r_median: f64,
}

pub fn correlation_report(estimates: &[ItaEstimate]) -> Result<CorrelationReport> {
    if estimates.len() < 2 {
        return Err(Error::EmptyInput("correlation needs at least two images"));
    }
    let ita: Vec<f64> = estimates.iter().map(|e| e.ita_degrees).collect();
    let mean: Vec<f64> = estimates.iter().map(|e| e.mean_gray).collect();
    let median: Vec<f64> = estimates.iter().map(|e| e.median_gray).collect();
    if ita.iter().chain(&mean).chain(&median).any(|v| !v.is_finite()) {
        return Err(Error::EmptyInput("non-finite ITA or grayscale value"));
    }
    Ok(CorrelationReport {
        n_images: estimates.len(),
        r_mean: pearson(&ita, &mean)?,
        r_median: pearson(&ita, &median)?,
    })
}

pub fn emit_histogram_svg(report: &DistributionReport, path: &Path) -> Result<()> {
    std::fs::write(path, crate::svg::histogram(report)).map_err(|e| Error::io(path, e))
}
