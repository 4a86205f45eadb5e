//! Classifier metrics overall and per skin tone category, the accuracy
//! versus ITA trend line, and Pearson correlation.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use log::warn;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::ita::{categorize, SkinToneCategory};

/// One row of classifier output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub image_id: String,
    pub split_id: String,
    pub true_label: String,
    pub predicted_label: String,
}

impl PredictionRecord {
    pub fn is_correct(&self) -> bool {
        self.true_label == self.predicted_label
    }
}

pub fn overall_accuracy(preds: &[PredictionRecord]) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::EmptyInput("no prediction records"));
    }
    let correct = preds.iter().filter(|p| p.is_correct()).count();
    Ok(correct as f64 / preds.len() as f64)
}

/// Mean of per-class recall over the classes of `label_set` that occur as a
/// true label. Declared classes with no records are skipped with a warning.
pub fn balanced_accuracy(preds: &[PredictionRecord], label_set: &[String]) -> Result<f64> {
    let known: HashSet<&str> = label_set.iter().map(String::as_str).collect();
    let mut per_class: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for p in preds {
        for label in [&p.true_label, &p.predicted_label] {
            if !known.contains(label.as_str()) {
                return Err(Error::UnknownLabel(label.clone()));
            }
        }
        let e = per_class.entry(p.true_label.as_str()).or_default();
        e.1 += 1;
        if p.is_correct() {
            e.0 += 1;
        }
    }
    for label in label_set {
        if !per_class.contains_key(label.as_str()) {
            warn!("class `{label}` has no records; left out of balanced accuracy");
        }
    }
    if per_class.is_empty() {
        return Err(Error::EmptyInput("no prediction records"));
    }
    let sum: f64 = per_class
        .values()
        .map(|&(correct, total)| correct as f64 / total as f64)
        .sum();
    Ok(sum / per_class.len() as f64)
}

/// Sorted distinct true and predicted labels.
pub fn observed_labels(preds: &[PredictionRecord]) -> Vec<String> {
    let set: BTreeSet<&str> = preds
        .iter()
        .flat_map(|p| [p.true_label.as_str(), p.predicted_label.as_str()])
        .collect();
    set.into_iter().map(String::from).collect()
}

/// ITA value used as the x coordinate for each category in the trend fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinMidpoints {
    pub very_lt: f64,
    pub dark: f64,
}

impl Default for BinMidpoints {
    fn default() -> Self {
        Self {
            very_lt: 58.5,
            dark: 5.0,
        }
    }
}

impl BinMidpoints {
    pub fn midpoint(&self, cat: SkinToneCategory) -> f64 {
        match cat.bounds() {
            (Some(lo), Some(hi)) => 0.5 * (lo + hi),
            (Some(_), None) => self.very_lt,
            _ => self.dark,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAccuracy {
    pub split_id: String,
    pub accuracy: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerBinAccuracy {
    pub category: SkinToneCategory,
    /// Records in this bin summed over all splits.
    pub n: usize,
    pub mean_accuracy: Option<f64>,
    pub std_error: Option<f64>,
    pub per_split: Vec<SplitAccuracy>,
}

fn check_unique(preds: &[PredictionRecord]) -> Result<()> {
    let mut seen = HashSet::with_capacity(preds.len());
    for p in preds {
        if !seen.insert((p.image_id.as_str(), p.split_id.as_str())) {
            return Err(Error::DuplicateRecord {
                image_id: p.image_id.clone(),
                split_id: p.split_id.clone(),
            });
        }
    }
    Ok(())
}

/// Plain accuracy per (category, split), then the mean and standard error
/// across splits for each category. The standard error is the sample
/// standard deviation over splits divided by `sqrt(#splits)`, and is 0 for a
/// single split. Always returns all eight categories, lightest first.
pub fn per_bin_accuracy(
    preds: &[PredictionRecord],
    ita_by_image: &HashMap<String, f64>,
) -> Result<Vec<PerBinAccuracy>> {
    let cats: HashMap<String, SkinToneCategory> = ita_by_image
        .iter()
        .map(|(id, &ita)| (id.clone(), categorize(ita)))
        .collect();
    per_category_accuracy(preds, &cats)
}

/// [`per_bin_accuracy`] with categories already assigned, e.g. taken from
/// the category column of an ITA results file.
pub fn per_category_accuracy(
    preds: &[PredictionRecord],
    category_by_image: &HashMap<String, SkinToneCategory>,
) -> Result<Vec<PerBinAccuracy>> {
    check_unique(preds)?;
    let missing: BTreeSet<&str> = preds
        .iter()
        .filter(|p| !category_by_image.contains_key(&p.image_id))
        .map(|p| p.image_id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingIta(missing.into_iter().map(String::from).collect()));
    }

    // (correct, total) per category, per split
    let mut counts: Vec<BTreeMap<&str, (usize, usize)>> = vec![BTreeMap::new(); 8];
    for p in preds {
        let cat = category_by_image[&p.image_id];
        let e = counts[cat.index()].entry(p.split_id.as_str()).or_default();
        e.1 += 1;
        if p.is_correct() {
            e.0 += 1;
        }
    }

    Ok(SkinToneCategory::ALL
        .iter()
        .zip(counts)
        .map(|(&category, splits)| {
            let per_split: Vec<SplitAccuracy> = splits
                .into_iter()
                .map(|(split_id, (correct, total))| SplitAccuracy {
                    split_id: split_id.to_string(),
                    accuracy: correct as f64 / total as f64,
                    n: total,
                })
                .collect();
            let n = per_split.iter().map(|s| s.n).sum();
            let (mean_accuracy, std_error) = mean_and_se(per_split.iter().map(|s| s.accuracy));
            PerBinAccuracy {
                category,
                n,
                mean_accuracy,
                std_error,
                per_split,
            }
        })
        .collect())
}

fn mean_and_se(values: impl Iterator<Item = f64>) -> (Option<f64>, Option<f64>) {
    let v: Vec<f64> = values.collect();
    match v.len() {
        0 => (None, None),
        1 => (Some(v[0]), Some(0.0)),
        k => {
            let kf = k as f64;
            let mean = v.iter().sum::<f64>() / kf;
            let ss = v.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>();
            let sd = (ss / (kf - 1.0)).sqrt();
            (Some(mean), Some(sd / kf.sqrt()))
        }
    }
}

/// Least-squares line of accuracy against bin midpoint ITA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_std_error: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub n_points: usize,
    pub midpoints_used: Vec<f64>,
    pub weighted: bool,
}

/// Two-sided Student t critical value: the `p` quantile with `df` degrees of
/// freedom.
pub fn t_quantile(p: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df)
        .expect("degrees of freedom must be positive")
        .inverse_cdf(p)
}

/// Unweighted OLS of `y` on `x` with a t-based 95% interval on the slope.
pub fn trend_fit(points: &[(f64, f64)]) -> Result<TrendFit> {
    let weighted: Vec<(f64, f64, f64)> = points.iter().map(|&(x, y)| (x, y, 1.0)).collect();
    fit_line(&weighted, false)
}

/// Weighted least squares variant; `(x, y, weight)` triples, typically with
/// the bin sample count as weight.
pub fn trend_fit_weighted(points: &[(f64, f64, f64)]) -> Result<TrendFit> {
    fit_line(points, true)
}

fn fit_line(points: &[(f64, f64, f64)], weighted: bool) -> Result<TrendFit> {
    let n = points.len();
    if n < 3 {
        return Err(Error::InsufficientPoints(n));
    }
    let sw: f64 = points.iter().map(|p| p.2).sum();
    let xbar = points.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let ybar = points.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = points.iter().map(|p| p.2 * (p.0 - xbar).powi(2)).sum();
    if sxx <= 0.0 || !sxx.is_finite() {
        return Err(Error::DegenerateX);
    }
    let sxy: f64 = points.iter().map(|p| p.2 * (p.0 - xbar) * (p.1 - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;

    let df = (n - 2) as f64;
    let rss: f64 = points
        .iter()
        .map(|p| p.2 * (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let se = (rss / df / sxx).sqrt();
    let half = t_quantile(0.975, df) * se;
    Ok(TrendFit {
        slope,
        intercept,
        slope_std_error: se,
        ci95_low: slope - half,
        ci95_high: slope + half,
        n_points: n,
        midpoints_used: points.iter().map(|p| p.0).collect(),
        weighted,
    })
}

/// Fits the trend over every category that has data.
pub fn trend_from_bins(bins: &[PerBinAccuracy], midpoints: &BinMidpoints, weighted: bool) -> Result<TrendFit> {
    let pts: Vec<(f64, f64, f64)> = bins
        .iter()
        .filter_map(|b| {
            b.mean_accuracy
                .map(|m| (midpoints.midpoint(b.category), m, if weighted { b.n as f64 } else { 1.0 }))
        })
        .collect();
    fit_line(&pts, weighted)
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::EmptyInput("correlation needs at least two points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("first series"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("second series"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
