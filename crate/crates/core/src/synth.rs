//! Synthetic skin-like images, masks and classifier predictions with planted
//! ground truth.
//!
//! Randomness comes from ChaCha8 seeded with the spec seed. Image `i` draws
//! from stream `i` and predictions for split `s` from stream `s` of a second
//! generator, so results do not depend on generation order or threading.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use image::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::colorimetry::{lab_to_srgb, lab_to_srgb_f64, srgb_to_lab, PixelLab, RgbPixel};
use crate::config::{parse_bool, parse_key_values, parse_list, parse_value};
use crate::error::{Error, Result};
use crate::formats::{save_png_mask, save_png_rgb, write_manifest, write_predictions, ManifestEntry};
use crate::ita::{categorize, ita_from_lab, ExclusionMask, SkinToneCategory};
use crate::stats::{BinMidpoints, PredictionRecord};

const PREDICTION_SEED_SALT: u64 = 0x7072_6564_6963_7473;

pub const DEFAULT_LABELS: [&str; 7] = ["mel", "nv", "bcc", "akiec", "bkl", "df", "vasc"];

/// Where base skin colours come from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseSampler {
    /// Every image uses the same nominal (L, b).
    Fixed { l: f64, b: f64 },
    /// Pick a category by weight, then an ITA uniformly inside it (kept
    /// `margin` degrees from the edges) and a chroma radius uniformly in
    /// `chroma`; `L = 50 + r sin(ITA)`, `b = r cos(ITA)`.
    Categories {
        weights: [f64; 8],
        chroma: (f64, f64),
        margin: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LesionSpec {
    /// Lesion area as a fraction of the image, drawn uniformly per image.
    pub area_fraction: (f64, f64),
    pub color: PixelLab,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum AccuracyModel {
    /// Probability of a correct prediction per skin tone category.
    PerBin([f64; 8]),
    /// `p = intercept + slope * ITA`, clamped to `[0, 1]`.
    Linear { slope: f64, intercept: f64 },
}

impl AccuracyModel {
    pub fn probability(&self, ita: f64) -> f64 {
        match self {
            AccuracyModel::PerBin(p) => p[categorize(ita).index()],
            AccuracyModel::Linear { slope, intercept } => intercept + slope * ita,
        }
        .clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthSpec {
    pub n_images: usize,
    pub width: u32,
    pub height: u32,
    pub base: BaseSampler,
    /// Constant a* of the base colour.
    pub a_value: f64,
    /// Per-channel Gaussian sigma added in Lab space to every pixel.
    pub noise_sigma_lab: f64,
    pub lesion: Option<LesionSpec>,
    /// Fraction of lesion pixels the predicted mask lets through; 0 means no
    /// predicted masks are produced.
    pub pred_leak: f64,
    pub accuracy: Option<AccuracyModel>,
    pub n_splits: usize,
    pub labels: Vec<String>,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_images: 100,
            width: 64,
            height: 64,
            base: BaseSampler::Categories {
                weights: [1.0; 8],
                chroma: (15.0, 25.0),
                margin: 1.0,
            },
            a_value: 12.0,
            noise_sigma_lab: 2.0,
            lesion: Some(LesionSpec {
                area_fraction: (0.05, 0.25),
                color: PixelLab::new(38.0, 28.0, 22.0),
            }),
            pred_leak: 0.0,
            accuracy: None,
            n_splits: 0,
            labels: DEFAULT_LABELS.iter().map(|s| s.to_string()).collect(),
            seed: 0,
        }
    }
}

fn parse_triple(key: &str, value: &str) -> Result<[f64; 3]> {
    let v: Vec<f64> = parse_list(value)
        .iter()
        .map(|s| parse_value(key, s))
        .collect::<Result<_>>()?;
    v.try_into()
        .map_err(|_| Error::Config(format!("{key}: expected three comma-separated numbers")))
}

fn parse_pair(key: &str, value: &str) -> Result<(f64, f64)> {
    let v: Vec<f64> = parse_list(value)
        .iter()
        .map(|s| parse_value(key, s))
        .collect::<Result<_>>()?;
    match v.as_slice() {
        [x] => Ok((*x, *x)),
        [lo, hi] => Ok((*lo, *hi)),
        _ => Err(Error::Config(format!("{key}: expected one or two numbers"))),
    }
}

/// `very_lt:1, lt2:0.5, ...`; categories left out get `default`.
fn parse_per_category(key: &str, value: &str, default: f64) -> Result<[f64; 8]> {
    let mut out = [default; 8];
    for item in parse_list(value) {
        let (cat, v) = item
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("{key}: expected `category:value`, got `{item}`")))?;
        let cat: SkinToneCategory = cat.trim().parse().map_err(Error::Config)?;
        out[cat.index()] = parse_value(key, v.trim())?;
    }
    Ok(out)
}

impl SynthSpec {
    /// Reads a spec from `key = value` text; see the README for the keys.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut spec = Self::default();
        let mut fixed_l = None;
        let mut fixed_b = None;
        let (mut weights, mut chroma, mut margin) = ([1.0; 8], (15.0, 25.0), 1.0);
        let mut lesion_fraction = (0.05, 0.25);
        let mut lesion_color = PixelLab::new(38.0, 28.0, 22.0);
        let mut lesion_on = true;
        let (mut slope, mut intercept, mut bins) = (None, None, None);
        let mut n_splits = None;

        for (key, value) in parse_key_values(text)? {
            let (k, v) = (key.as_str(), value.as_str());
            match k {
                "n_images" => spec.n_images = parse_value(k, v)?,
                "width" => spec.width = parse_value(k, v)?,
                "height" => spec.height = parse_value(k, v)?,
                "seed" => spec.seed = parse_value(k, v)?,
                "base_l" => fixed_l = Some(parse_value(k, v)?),
                "base_b" => fixed_b = Some(parse_value(k, v)?),
                "category_weights" => weights = parse_per_category(k, v, 0.0)?,
                "chroma" => chroma = parse_pair(k, v)?,
                "ita_margin" => margin = parse_value(k, v)?,
                "a" | "a_value" => spec.a_value = parse_value(k, v)?,
                "noise_sigma" => spec.noise_sigma_lab = parse_value(k, v)?,
                "lesion" => lesion_on = parse_bool(k, v)?,
                "lesion_fraction" => lesion_fraction = parse_pair(k, v)?,
                "lesion_lab" => {
                    let [l, a, b] = parse_triple(k, v)?;
                    lesion_color = PixelLab::new(l, a, b);
                }
                "pred_leak" => spec.pred_leak = parse_value(k, v)?,
                "accuracy_bins" => bins = Some(parse_per_category(k, v, 1.0)?),
                "accuracy_slope" => slope = Some(parse_value(k, v)?),
                "accuracy_intercept" => intercept = Some(parse_value(k, v)?),
                "n_splits" => n_splits = Some(parse_value(k, v)?),
                "labels" => spec.labels = parse_list(v),
                other => return Err(Error::Config(format!("unknown synth key `{other}`"))),
            }
        }

        spec.base = match (fixed_l, fixed_b) {
            (Some(l), Some(b)) => BaseSampler::Fixed { l, b },
            (None, None) => BaseSampler::Categories {
                weights,
                chroma,
                margin,
            },
            _ => return Err(Error::Config("base_l and base_b must be given together".into())),
        };
        spec.lesion = (lesion_on && lesion_fraction.1 > 0.0).then_some(LesionSpec {
            area_fraction: lesion_fraction,
            color: lesion_color,
        });
        spec.accuracy = match (bins, slope, intercept) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(Error::Config(
                    "accuracy_bins cannot be combined with accuracy_slope/accuracy_intercept".into(),
                ))
            }
            (Some(b), None, None) => Some(AccuracyModel::PerBin(b)),
            (None, None, None) => None,
            (None, s, i) => Some(AccuracyModel::Linear {
                slope: s.unwrap_or(0.0),
                intercept: i.unwrap_or(0.7),
            }),
        };
        spec.n_splits = match (n_splits, &spec.accuracy) {
            (Some(n), _) => n,
            (None, Some(_)) => 10,
            (None, None) => 0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_images == 0 {
            return bad("n_images must be at least 1".into());
        }
        if self.width == 0 || self.height == 0 || self.width > 4096 || self.height > 4096 {
            return bad(format!("image size {}x{} out of range", self.width, self.height));
        }
        if self.n_images.saturating_mul(self.width as usize * self.height as usize) > 1 << 30 {
            return bad("dataset too large".into());
        }
        if !(self.noise_sigma_lab.is_finite() && self.noise_sigma_lab >= 0.0) {
            return bad("noise_sigma must be >= 0".into());
        }
        if !self.a_value.is_finite() {
            return bad("a must be finite".into());
        }
        if !(0.0..=1.0).contains(&self.pred_leak) {
            return bad("pred_leak must be in [0, 1]".into());
        }
        if self.labels.len() < 2 {
            return bad("at least two labels are required".into());
        }
        match &self.base {
            BaseSampler::Fixed { l, b } => {
                if !(l.is_finite() && b.is_finite()) {
                    return bad("base_l and base_b must be finite".into());
                }
            }
            BaseSampler::Categories {
                weights,
                chroma,
                margin,
            } => {
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || weights.iter().sum::<f64>() <= 0.0 {
                    return bad("category weights must be non-negative with a positive sum".into());
                }
                if !(chroma.0.is_finite() && chroma.1.is_finite() && 0.0 < chroma.0 && chroma.0 <= chroma.1) {
                    return bad("chroma must satisfy 0 < min <= max".into());
                }
                if !(margin.is_finite() && *margin >= 0.0) {
                    return bad("ita_margin must be >= 0".into());
                }
            }
        }
        if let Some(l) = &self.lesion {
            let (lo, hi) = l.area_fraction;
            if !(0.0 <= lo && lo <= hi && hi < 1.0) {
                return bad("lesion_fraction must satisfy 0 <= min <= max < 1".into());
            }
            if ![l.color.l, l.color.a, l.color.b].iter().all(|v| v.is_finite()) {
                return bad("lesion_lab must be finite".into());
            }
        }
        if let Some(AccuracyModel::PerBin(p)) = &self.accuracy {
            if p.iter().any(|v| !v.is_finite()) {
                return bad("accuracy_bins must be finite".into());
            }
        }
        if let Some(AccuracyModel::Linear { slope, intercept }) = &self.accuracy {
            if !(slope.is_finite() && intercept.is_finite()) {
                return bad("accuracy model must be finite".into());
            }
        }
        if self.n_splits > 1000 {
            return bad("n_splits must be at most 1000".into());
        }
        Ok(())
    }
}

/// ITA interval used when sampling a category. The open-ended categories
/// are closed off symmetrically around their default trend-fit midpoints.
pub fn sampling_range(cat: SkinToneCategory) -> (f64, f64) {
    let mid = BinMidpoints::default();
    match cat.bounds() {
        (Some(lo), Some(hi)) => (lo, hi),
        (Some(lo), None) => (lo, 2.0 * mid.very_lt - lo),
        (None, Some(hi)) => (2.0 * mid.dark - hi, hi),
        (None, None) => unreachable!("every category has at least one bound"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub image_id: String,
    /// Category the sampler aimed for; `None` for fixed-colour specs.
    pub planted_category: Option<SkinToneCategory>,
    /// ITA of the 8-bit base colour actually painted.
    pub true_ita: f64,
    pub category: SkinToneCategory,
    pub label: String,
    pub base: PixelLab,
    pub base_rgb: RgbPixel,
    pub lesion_pixels: usize,
    /// Number of noisy pixels that fell outside the sRGB gamut and were
    /// clamped.
    pub clamped_pixels: usize,
}

#[derive(Debug, Clone)]
pub struct SynthItem {
    pub truth: GroundTruth,
    pub image: RgbImage,
    pub gt_mask: ExclusionMask,
    pub pred_mask: Option<ExclusionMask>,
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub items: Vec<SynthItem>,
    pub predictions: Vec<PredictionRecord>,
}

fn in_gamut(lab: PixelLab) -> bool {
    lab_to_srgb_f64(lab).iter().all(|c| (-0.5..=255.5).contains(c))
}

/// Among the 8-bit colours surrounding `lab`, the one whose ITA is closest
/// to that of `lab` (ties broken by Lab distance). Plain rounding can shift
/// ITA by about a degree at moderate chroma.
fn quantize_preserving_ita(lab: PixelLab) -> RgbPixel {
    let target = (lab.l - 50.0).atan2(lab.b);
    let rgb = lab_to_srgb_f64(lab);
    let around = |c: f64| {
        let f = c.floor();
        [f - 2.0, f - 1.0, f, f + 1.0, f + 2.0, f + 3.0].map(|v| v.clamp(0.0, 255.0) as u8)
    };
    let (rs, gs, bs) = (around(rgb[0]), around(rgb[1]), around(rgb[2]));
    let mut best = (f64::INFINITY, f64::INFINITY, RgbPixel::new(rs[2], gs[2], bs[2]));
    for &r in &rs {
        for &g in &gs {
            for &b in &bs {
                let p = RgbPixel::new(r, g, b);
                let q = srgb_to_lab(p);
                let mut d_ita = ((q.l - 50.0).atan2(q.b) - target).abs();
                if d_ita > std::f64::consts::PI {
                    d_ita = 2.0 * std::f64::consts::PI - d_ita;
                }
                let d_lab = (q.l - lab.l).powi(2) + (q.a - lab.a).powi(2) + (q.b - lab.b).powi(2);
                if (d_ita, d_lab) < (best.0, best.1) {
                    best = (d_ita, d_lab, p);
                }
            }
        }
    }
    best.2
}

fn pick_weighted(rng: &mut ChaCha8Rng, weights: &[f64; 8]) -> SkinToneCategory {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (cat, w) in SkinToneCategory::ALL.iter().zip(weights) {
        if u < *w {
            return *cat;
        }
        u -= w;
    }
    // rounding at the top end: last category with positive weight
    *SkinToneCategory::ALL
        .iter()
        .zip(weights)
        .rev()
        .find(|(_, w)| **w > 0.0)
        .map(|(c, _)| c)
        .expect("validated: some weight is positive")
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        lo + (hi - lo) * rng.random::<f64>()
    } else {
        lo
    }
}

fn generate_item(spec: &SynthSpec, index: usize) -> Result<SynthItem> {
    let image_id = format!("synth_{index:05}");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);

    let (nominal, planted) = match &spec.base {
        BaseSampler::Fixed { l, b } => (PixelLab::new(*l, spec.a_value, *b), None),
        BaseSampler::Categories {
            weights,
            chroma,
            margin,
        } => {
            let cat = pick_weighted(&mut rng, weights);
            let (lo, hi) = sampling_range(cat);
            let m = margin.min((hi - lo) / 2.0);
            let theta = uniform(&mut rng, lo + m, hi - m).to_radians();
            let r = uniform(&mut rng, chroma.0, chroma.1);
            (
                PixelLab::new(50.0 + r * theta.sin(), spec.a_value, r * theta.cos()),
                Some(cat),
            )
        }
    };
    if !in_gamut(nominal) {
        return Err(Error::Unrepresentable {
            l: nominal.l,
            a: nominal.a,
            b: nominal.b,
        }
        .for_image(&image_id));
    }
    let base_rgb = quantize_preserving_ita(nominal);
    let base = srgb_to_lab(base_rgb);
    let true_ita = ita_from_lab(base.l, base.b).map_err(|e| e.for_image(&image_id))?;

    let label = spec.labels[rng.random_range(0..spec.labels.len())].clone();

    let (w, h) = (spec.width, spec.height);
    let gt_mask = match &spec.lesion {
        Some(lesion) => {
            let frac = uniform(&mut rng, lesion.area_fraction.0, lesion.area_fraction.1);
            let aspect = uniform(&mut rng, 0.75, 1.0 / 0.75);
            let area = frac * w as f64 * h as f64;
            let rx = (area / (std::f64::consts::PI * aspect)).sqrt();
            let ry = rx * aspect;
            let centre = |rng: &mut ChaCha8Rng, radius: f64, side: f64| {
                if 2.0 * radius < side {
                    uniform(rng, radius, side - radius)
                } else {
                    side / 2.0
                }
            };
            let cx = centre(&mut rng, rx, w as f64);
            let cy = centre(&mut rng, ry, h as f64);
            ExclusionMask::from_fn(w, h, |x, y| {
                if rx <= 0.0 || ry <= 0.0 {
                    return false;
                }
                let dx = (x as f64 + 0.5 - cx) / rx;
                let dy = (y as f64 + 0.5 - cy) / ry;
                dx * dx + dy * dy <= 1.0
            })
        }
        None => ExclusionMask::empty(w, h),
    };

    let lesion_color = spec.lesion.as_ref().map(|l| l.color);
    let noise = Normal::new(0.0, spec.noise_sigma_lab).map_err(|e| Error::Config(e.to_string()))?;
    let mut clamped_pixels = 0;
    let mut image = RgbImage::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let centre = if gt_mask.is_excluded(x, y) {
                lesion_color.expect("mask is only set when a lesion exists")
            } else {
                base
            };
            let px = if spec.noise_sigma_lab == 0.0 && !gt_mask.is_excluded(x, y) {
                base_rgb
            } else {
                let lab = PixelLab::new(
                    centre.l + noise.sample(&mut rng),
                    centre.a + noise.sample(&mut rng),
                    centre.b + noise.sample(&mut rng),
                );
                let (p, clamped) = lab_to_srgb(lab);
                clamped_pixels += clamped as usize;
                p
            };
            image.put_pixel(x, y, px.into());
        }
    }

    let pred_mask = (spec.pred_leak > 0.0).then(|| {
        let mut pred = gt_mask.clone();
        for y in 0..h {
            for x in 0..w {
                if gt_mask.is_excluded(x, y) && rng.random::<f64>() < spec.pred_leak {
                    pred.set(x, y, false);
                }
            }
        }
        pred
    });

    Ok(SynthItem {
        truth: GroundTruth {
            image_id,
            planted_category: planted,
            true_ita,
            category: categorize(true_ita),
            label,
            base,
            base_rgb,
            lesion_pixels: gt_mask.excluded_count(),
            clamped_pixels,
        },
        image,
        gt_mask,
        pred_mask,
    })
}

/// Builds the full dataset in memory, including predictions when the spec
/// carries an accuracy model.
pub fn generate_dataset(spec: &SynthSpec) -> Result<SynthDataset> {
    spec.validate()?;
    let items = (0..spec.n_images)
        .into_par_iter()
        .map(|i| generate_item(spec, i))
        .collect::<Result<Vec<_>>>()?;
    let predictions = match &spec.accuracy {
        Some(model) if spec.n_splits > 0 => {
            let truth: Vec<GroundTruth> = items.iter().map(|i| i.truth.clone()).collect();
            generate_predictions(&truth, model, spec.n_splits, &spec.labels, spec.seed)?
        }
        _ => Vec::new(),
    };
    Ok(SynthDataset { items, predictions })
}

/// For each split and image, the prediction is correct with probability
/// `model.probability(true_ita)`; otherwise it is a uniformly chosen wrong
/// label.
pub fn generate_predictions(
    truth: &[GroundTruth],
    model: &AccuracyModel,
    n_splits: usize,
    labels: &[String],
    seed: u64,
) -> Result<Vec<PredictionRecord>> {
    if n_splits == 0 {
        return Err(Error::Config("n_splits must be at least 1".into()));
    }
    if labels.len() < 2 {
        return Err(Error::Config("at least two labels are required".into()));
    }
    if let Some(t) = truth.iter().find(|t| !labels.contains(&t.label)) {
        return Err(Error::UnknownLabel(t.label.clone()));
    }
    let per_split: Vec<Vec<PredictionRecord>> = (0..n_splits)
        .into_par_iter()
        .map(|split| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ PREDICTION_SEED_SALT);
            rng.set_stream(split as u64);
            let split_id = format!("split{split:02}");
            truth
                .iter()
                .map(|t| {
                    let correct = rng.random::<f64>() < model.probability(t.true_ita);
                    let predicted = if correct {
                        t.label.clone()
                    } else {
                        let wrong: Vec<&String> = labels.iter().filter(|l| **l != t.label).collect();
                        wrong[rng.random_range(0..wrong.len())].clone()
                    };
                    PredictionRecord {
                        image_id: t.image_id.clone(),
                        split_id: split_id.clone(),
                        true_label: t.label.clone(),
                        predicted_label: predicted,
                    }
                })
                .collect()
        })
        .collect();
    Ok(per_split.into_iter().flatten().collect())
}

pub const GROUND_TRUTH_HEADER: &str =
    "image_id,planted_category,true_ita,category,label,base_l,base_a,base_b,base_r,base_g,base_b8,lesion_pixels,clamped_pixels";

pub fn write_ground_truth(truth: &[GroundTruth]) -> String {
    let mut s = String::from(GROUND_TRUTH_HEADER);
    s.push('\n');
    for t in truth {
        let _ = writeln!(
            s,
            "{},{},{:.6},{},{},{:.6},{:.6},{:.6},{},{},{},{},{}",
            t.image_id,
            t.planted_category.map(|c| c.abbreviation()).unwrap_or(""),
            t.true_ita,
            t.category.abbreviation(),
            t.label,
            t.base.l,
            t.base.a,
            t.base.b,
            t.base_rgb.r,
            t.base_rgb.g,
            t.base_rgb.b,
            t.lesion_pixels,
            t.clamped_pixels,
        );
    }
    s
}

/// Paths written by [`write_dataset`], relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrittenDataset {
    pub manifest: PathBuf,
    pub ground_truth: PathBuf,
    pub predictions: Option<PathBuf>,
}

/// Writes `images/`, `masks/` (and `pred_masks/` when present), plus
/// `manifest.csv`, `ground_truth.csv` and `predictions.csv`. Manifest paths
/// are relative to `dir`. When predicted masks exist they fill `mask_path`
/// and the ground truth goes to `gt_mask_path`.
pub fn write_dataset(ds: &SynthDataset, dir: &Path) -> Result<WrittenDataset> {
    let has_pred = ds.items.iter().any(|i| i.pred_mask.is_some());
    let mut subdirs = vec!["images", "masks"];
    if has_pred {
        subdirs.push("pred_masks");
    }
    for sub in subdirs {
        let p = dir.join(sub);
        std::fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }

    ds.items.par_iter().try_for_each(|item| -> Result<()> {
        let id = &item.truth.image_id;
        save_png_rgb(&item.image, &dir.join(format!("images/{id}.png")))?;
        save_png_mask(&item.gt_mask, &dir.join(format!("masks/{id}.png")))?;
        if let Some(pred) = &item.pred_mask {
            save_png_mask(pred, &dir.join(format!("pred_masks/{id}.png")))?;
        }
        Ok(())
    })?;

    let entries: Vec<ManifestEntry> = ds
        .items
        .iter()
        .map(|item| {
            let id = &item.truth.image_id;
            let gt = PathBuf::from(format!("masks/{id}.png"));
            let (mask, gt_mask) = match &item.pred_mask {
                Some(_) => (PathBuf::from(format!("pred_masks/{id}.png")), gt),
                None => (gt.clone(), gt),
            };
            ManifestEntry {
                image_id: id.clone(),
                image_path: PathBuf::from(format!("images/{id}.png")),
                mask_path: Some(mask),
                gt_mask_path: Some(gt_mask),
                label: Some(item.truth.label.clone()),
            }
        })
        .collect();

    let write = |name: &str, body: String| -> Result<PathBuf> {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        Ok(PathBuf::from(name))
    };
    let manifest = write("manifest.csv", write_manifest(&entries))?;
    let truth: Vec<GroundTruth> = ds.items.iter().map(|i| i.truth.clone()).collect();
    let ground_truth = write("ground_truth.csv", write_ground_truth(&truth))?;
    let predictions = if ds.predictions.is_empty() {
        None
    } else {
        Some(write("predictions.csv", write_predictions(&ds.predictions))?)
    };
    Ok(WrittenDataset {
        manifest,
        ground_truth,
        predictions,
    })
}
