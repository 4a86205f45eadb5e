//! Individual Typology Angle estimation over the non-diseased part of an
//! image, with one-standard-deviation outlier trimming and the eight-bin
//! skin tone scheme.

use std::fmt;
use std::str::FromStr;

use image::{GrayImage, RgbImage};
use serde::{Deserialize, Serialize};

use crate::colorimetry::{grayscale, srgb_to_lab, GrayscaleMode, PixelLab, RgbPixel};
use crate::error::{Error, Result};

/// Relative slack applied to the inclusive trimming boundary. Without it a
/// pixel sitting exactly one standard deviation from the mean can fall on
/// either side depending on rounding in the mean.
pub const TRIM_BOUNDARY_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SkinToneCategory {
    #[serde(rename = "very_lt")]
    VeryLight,
    #[serde(rename = "lt2")]
    Light2,
    #[serde(rename = "lt1")]
    Light1,
    #[serde(rename = "int2")]
    Intermediate2,
    #[serde(rename = "int1")]
    Intermediate1,
    #[serde(rename = "tan2")]
    Tanned2,
    #[serde(rename = "tan1")]
    Tanned1,
    #[serde(rename = "dark")]
    Dark,
}

impl SkinToneCategory {
    /// Lightest first.
    pub const ALL: [SkinToneCategory; 8] = [
        SkinToneCategory::VeryLight,
        SkinToneCategory::Light2,
        SkinToneCategory::Light1,
        SkinToneCategory::Intermediate2,
        SkinToneCategory::Intermediate1,
        SkinToneCategory::Tanned2,
        SkinToneCategory::Tanned1,
        SkinToneCategory::Dark,
    ];

    pub fn abbreviation(self) -> &'static str {
        match self {
            SkinToneCategory::VeryLight => "very_lt",
            SkinToneCategory::Light2 => "lt2",
            SkinToneCategory::Light1 => "lt1",
            SkinToneCategory::Intermediate2 => "int2",
            SkinToneCategory::Intermediate1 => "int1",
            SkinToneCategory::Tanned2 => "tan2",
            SkinToneCategory::Tanned1 => "tan1",
            SkinToneCategory::Dark => "dark",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SkinToneCategory::VeryLight => "Very Light",
            SkinToneCategory::Light2 => "Light 2",
            SkinToneCategory::Light1 => "Light 1",
            SkinToneCategory::Intermediate2 => "Intermediate 2",
            SkinToneCategory::Intermediate1 => "Intermediate 1",
            SkinToneCategory::Tanned2 => "Tanned 2",
            SkinToneCategory::Tanned1 => "Tanned 1",
            SkinToneCategory::Dark => "Dark",
        }
    }

    /// `(lower, upper)` ITA bounds in degrees; lower exclusive, upper
    /// inclusive. `None` marks an unbounded side.
    pub fn bounds(self) -> (Option<f64>, Option<f64>) {
        match self {
            SkinToneCategory::VeryLight => (Some(55.0), None),
            SkinToneCategory::Light2 => (Some(48.0), Some(55.0)),
            SkinToneCategory::Light1 => (Some(41.0), Some(48.0)),
            SkinToneCategory::Intermediate2 => (Some(34.5), Some(41.0)),
            SkinToneCategory::Intermediate1 => (Some(28.0), Some(34.5)),
            SkinToneCategory::Tanned2 => (Some(19.0), Some(28.0)),
            SkinToneCategory::Tanned1 => (Some(10.0), Some(19.0)),
            SkinToneCategory::Dark => (None, Some(10.0)),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for SkinToneCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abbreviation())
    }
}

impl FromStr for SkinToneCategory {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        SkinToneCategory::ALL
            .into_iter()
            .find(|c| c.abbreviation() == s)
            .ok_or_else(|| format!("unknown skin tone category `{s}`"))
    }
}

pub fn categorize(ita_degrees: f64) -> SkinToneCategory {
    // NaN falls through to Dark; callers only pass finite angles
    match ita_degrees {
        x if x > 55.0 => SkinToneCategory::VeryLight,
        x if x > 48.0 => SkinToneCategory::Light2,
        x if x > 41.0 => SkinToneCategory::Light1,
        x if x > 34.5 => SkinToneCategory::Intermediate2,
        x if x > 28.0 => SkinToneCategory::Intermediate1,
        x if x > 19.0 => SkinToneCategory::Tanned2,
        x if x > 10.0 => SkinToneCategory::Tanned1,
        _ => SkinToneCategory::Dark,
    }
}

/// ITA in degrees, using the two-argument arctangent of `(l - 50, b)` so the
/// angle stays defined for `b <= 0`. Range is `(-180, 180]`.
pub fn ita_from_lab(l: f64, b: f64) -> Result<f64> {
    let rise = l - 50.0;
    if rise == 0.0 && b == 0.0 {
        return Err(Error::DegeneratePoint);
    }
    let deg = rise.atan2(b).to_degrees();
    Ok(if deg <= -180.0 { 180.0 } else { deg })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrimMode {
    /// ITA of the trimmed mean L and mean b.
    #[default]
    MeanOfMeans,
    /// Mean of the per-pixel ITA values of the trimmed pixels.
    MeanOfPixelItas,
}

impl TrimMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TrimMode::MeanOfMeans => "mean_of_means",
            TrimMode::MeanOfPixelItas => "mean_of_pixel_itas",
        }
    }
}

impl FromStr for TrimMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "mean_of_means" => Ok(TrimMode::MeanOfMeans),
            "mean_of_pixel_itas" => Ok(TrimMode::MeanOfPixelItas),
            other => Err(format!("unknown trim mode `{other}`")),
        }
    }
}

/// Which end of the mask's gray range marks excluded pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskPolarity {
    /// `value >= threshold` is excluded (lesion drawn white).
    #[default]
    WhiteExcluded,
    /// `value < threshold` is excluded.
    BlackExcluded,
}

impl MaskPolarity {
    pub fn as_str(self) -> &'static str {
        match self {
            MaskPolarity::WhiteExcluded => "white_excluded",
            MaskPolarity::BlackExcluded => "black_excluded",
        }
    }
}

impl FromStr for MaskPolarity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "white_excluded" => Ok(MaskPolarity::WhiteExcluded),
            "black_excluded" => Ok(MaskPolarity::BlackExcluded),
            other => Err(format!("unknown mask polarity `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItaConfig {
    pub trim_mode: TrimMode,
    pub trim_sigma: f64,
    pub mask_threshold: u8,
    pub mask_polarity: MaskPolarity,
    pub grayscale: GrayscaleMode,
}

impl Default for ItaConfig {
    fn default() -> Self {
        Self {
            trim_mode: TrimMode::MeanOfMeans,
            trim_sigma: 1.0,
            mask_threshold: 128,
            mask_polarity: MaskPolarity::WhiteExcluded,
            grayscale: GrayscaleMode::Rec601,
        }
    }
}

impl ItaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.trim_sigma.is_finite() && self.trim_sigma > 0.0) {
            return Err(Error::Config(format!(
                "trim_sigma must be a positive finite number, got {}",
                self.trim_sigma
            )));
        }
        Ok(())
    }
}

/// Per-pixel exclusion flags; `true` marks diseased skin, shadow or artifact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExclusionMask {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl ExclusionMask {
    pub fn new(width: u32, height: u32, data: Vec<bool>) -> Result<Self> {
        let expected = width as usize * height as usize;
        if data.len() != expected {
            return Err(Error::LengthMismatch {
                left: data.len(),
                right: expected,
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Mask that excludes nothing.
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![false; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_gray(img: &GrayImage, threshold: u8, polarity: MaskPolarity) -> Self {
        let data = img
            .pixels()
            .map(|p| match polarity {
                MaskPolarity::WhiteExcluded => p[0] >= threshold,
                MaskPolarity::BlackExcluded => p[0] < threshold,
            })
            .collect();
        Self {
            width: img.width(),
            height: img.height(),
            data,
        }
    }

    /// Renders the mask with excluded pixels white (255) and included black.
    pub fn to_gray(&self) -> GrayImage {
        let raw = self.data.iter().map(|&e| if e { 255 } else { 0 }).collect();
        GrayImage::from_raw(self.width, self.height, raw).expect("buffer size matches dimensions")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn is_excluded(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, excluded: bool) {
        let w = self.width as usize;
        self.data[y as usize * w + x as usize] = excluded;
    }

    pub fn excluded_count(&self) -> usize {
        self.data.iter().filter(|&&e| e).count()
    }

    pub fn all_excluded(&self) -> bool {
        self.data.iter().all(|&e| e)
    }
}

fn check_dims(image: &RgbImage, mask: &ExclusionMask) -> Result<()> {
    if image.dimensions() != mask.dimensions() {
        return Err(Error::DimensionMismatch {
            image_w: image.width(),
            image_h: image.height(),
            mask_w: mask.width,
            mask_h: mask.height,
        });
    }
    Ok(())
}

/// Pixels where the mask is `false`, in row-major order.
pub fn extract_nondiseased(image: &RgbImage, mask: &ExclusionMask) -> Result<Vec<RgbPixel>> {
    check_dims(image, mask)?;
    let pixels: Vec<RgbPixel> = image
        .pixels()
        .zip(&mask.data)
        .filter(|(_, &excluded)| !excluded)
        .map(|(p, _)| RgbPixel::from(*p))
        .collect();
    if pixels.is_empty() {
        return Err(Error::EmptyRegion);
    }
    Ok(pixels)
}

/// Mean computed about the first value, which makes it exact for constant
/// input and keeps the sum small for tightly clustered data.
fn shifted_mean(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let mut it = values.clone();
    let Some(x0) = it.next() else { return f64::NAN };
    let n = values.count() as f64;
    x0 + it.map(|v| v - x0).sum::<f64>() / n
}

fn mean_and_pop_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = shifted_mean(values.clone());
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Retention flags for the one-sigma rule: pixel `i` survives when both its L
/// and b lie within `sigma` population standard deviations of their means
/// (boundary inclusive). A zero-spread channel places no constraint.
///
/// If no pixel passes both conditions at once (possible for adversarial
/// joint distributions) the pixels with the smallest normalised deviation
/// `max(|dL|/sd_L, |db|/sd_b)` are kept, so the result is never empty for
/// nonempty input.
pub fn trim_membership(lab: &[PixelLab], sigma: f64) -> Vec<bool> {
    if lab.is_empty() {
        return Vec::new();
    }
    let (mean_l, sd_l) = mean_and_pop_std(lab.iter().map(|p| p.l));
    let (mean_b, sd_b) = mean_and_pop_std(lab.iter().map(|p| p.b));
    let lim_l = sigma * sd_l * (1.0 + TRIM_BOUNDARY_RTOL);
    let lim_b = sigma * sd_b * (1.0 + TRIM_BOUNDARY_RTOL);

    let keep: Vec<bool> = lab
        .iter()
        .map(|p| {
            (sd_l == 0.0 || (p.l - mean_l).abs() <= lim_l)
                && (sd_b == 0.0 || (p.b - mean_b).abs() <= lim_b)
        })
        .collect();
    if keep.iter().any(|&k| k) {
        return keep;
    }

    let score = |p: &PixelLab| {
        let dl = if sd_l == 0.0 { 0.0 } else { (p.l - mean_l).abs() / sd_l };
        let db = if sd_b == 0.0 { 0.0 } else { (p.b - mean_b).abs() / sd_b };
        dl.max(db)
    };
    let best = lab.iter().map(score).fold(f64::INFINITY, f64::min);
    lab.iter().map(|p| score(p) <= best).collect()
}

pub fn trim_one_sigma(lab: &[PixelLab], sigma: f64) -> Vec<PixelLab> {
    trim_membership(lab, sigma)
        .into_iter()
        .zip(lab)
        .filter_map(|(keep, p)| keep.then_some(*p))
        .collect()
}

/// Per-image result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItaEstimate {
    pub ita_degrees: f64,
    pub category: SkinToneCategory,
    pub n_total: usize,
    pub n_retained: usize,
    pub mean_l: f64,
    pub mean_b: f64,
    pub std_l: f64,
    pub std_b: f64,
    pub mean_gray: f64,
    pub median_gray: f64,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// ITA of an already extracted set of skin pixels.
pub fn ita_from_pixels(pixels: &[RgbPixel], cfg: &ItaConfig) -> Result<ItaEstimate> {
    if pixels.is_empty() {
        return Err(Error::EmptyRegion);
    }
    cfg.validate()?;

    let lab: Vec<PixelLab> = pixels.iter().map(|&p| srgb_to_lab(p)).collect();
    let (mean_l, std_l) = mean_and_pop_std(lab.iter().map(|p| p.l));
    let (mean_b, std_b) = mean_and_pop_std(lab.iter().map(|p| p.b));

    let retained = trim_one_sigma(&lab, cfg.trim_sigma);
    let ita_degrees = match cfg.trim_mode {
        TrimMode::MeanOfMeans => {
            let l = shifted_mean(retained.iter().map(|p| p.l));
            let b = shifted_mean(retained.iter().map(|p| p.b));
            ita_from_lab(l, b)?
        }
        TrimMode::MeanOfPixelItas => {
            let itas = retained
                .iter()
                .map(|p| ita_from_lab(p.l, p.b))
                .collect::<Result<Vec<f64>>>()?;
            shifted_mean(itas.iter().copied())
        }
    };

    let mut gray: Vec<f64> = pixels.iter().map(|&p| grayscale(p, cfg.grayscale)).collect();
    let mean_gray = gray.iter().sum::<f64>() / gray.len() as f64;
    let median_gray = median(&mut gray);

    Ok(ItaEstimate {
        ita_degrees,
        category: categorize(ita_degrees),
        n_total: pixels.len(),
        n_retained: retained.len(),
        mean_l,
        mean_b,
        std_l,
        std_b,
        mean_gray,
        median_gray,
    })
}

pub fn compute_ita(image: &RgbImage, mask: &ExclusionMask, cfg: &ItaConfig) -> Result<ItaEstimate> {
    let pixels = extract_nondiseased(image, mask)?;
    ita_from_pixels(&pixels, cfg)
}
