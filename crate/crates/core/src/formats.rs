//! On-disk formats: image and mask decoding, the dataset manifest, ITA
//! results, predictions and the various CSV reports.
//!
//! Every `parse_*` / `decode_*` function takes untrusted bytes and must
//! return an error rather than panic; the fuzz targets drive them directly.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::{Cursor, Read};
use std::path::{Path, PathBuf};

use image::{ColorType, DynamicImage, ImageFormat, ImageReader, Limits, RgbImage};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::ita::{ExclusionMask, ItaEstimate, MaskPolarity, SkinToneCategory};
use crate::seg_eval::PerImageSeg;
use crate::stats::{PerBinAccuracy, PredictionRecord};

pub const MANIFEST_HEADER: &str = "image_id,image_path,mask_path,gt_mask_path,label";
pub const ITA_RESULTS_HEADER: &str =
    "image_id,ita_degrees,category,n_total,n_retained,mean_l,mean_b,std_l,std_b,mean_gray,median_gray,flags";
pub const PREDICTIONS_HEADER: &str = "image_id,split_id,true_label,predicted_label";
pub const PER_BIN_HEADER: &str = "category,n,n_splits,mean_accuracy,std_error,midpoint";
pub const SEG_PER_IMAGE_HEADER: &str = "image_id,accuracy,false_negative_rate,abs_delta_ita";

/// Largest image side accepted by the decoders.
pub const MAX_IMAGE_SIDE: u32 = 1 << 15;
const MAX_DECODE_ALLOC: u64 = 1 << 30;

fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

fn fmt_opt6(v: Option<f64>) -> String {
    v.map(fmt6).unwrap_or_default()
}

fn decode_limited(bytes: &[u8], allowed: &[ImageFormat]) -> Result<DynamicImage> {
    let reader = ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| Error::Decode(e.to_string()))?;
    match reader.format() {
        Some(f) if allowed.contains(&f) => {}
        Some(f) => return Err(Error::Decode(format!("unsupported format {f:?}"))),
        None => return Err(Error::Decode("unrecognised image format".into())),
    }
    let mut limits = Limits::default();
    limits.max_image_width = Some(MAX_IMAGE_SIDE);
    limits.max_image_height = Some(MAX_IMAGE_SIDE);
    limits.max_alloc = Some(MAX_DECODE_ALLOC);
    let mut reader = reader;
    reader.limits(limits);
    let img = reader.decode().map_err(|e| Error::Decode(e.to_string()))?;
    match img.color() {
        ColorType::L8 | ColorType::La8 | ColorType::Rgb8 | ColorType::Rgba8 => Ok(img),
        other => Err(Error::Decode(format!("expected 8-bit channels, got {other:?}"))),
    }
}

/// Decodes an 8-bit PNG or JPEG into RGB; alpha is discarded.
pub fn decode_rgb(bytes: &[u8]) -> Result<RgbImage> {
    decode_limited(bytes, &[ImageFormat::Png, ImageFormat::Jpeg]).map(|img| img.to_rgb8())
}

/// Decodes an 8-bit PNG mask. Colour masks are reduced to luma first.
pub fn decode_mask(bytes: &[u8], threshold: u8, polarity: MaskPolarity) -> Result<ExclusionMask> {
    let img = decode_limited(bytes, &[ImageFormat::Png])?;
    Ok(ExclusionMask::from_gray(&img.to_luma8(), threshold, polarity))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    decode_rgb(&read_file(path)?)
}

pub fn load_mask(path: &Path, threshold: u8, polarity: MaskPolarity) -> Result<ExclusionMask> {
    decode_mask(&read_file(path)?, threshold, polarity)
}

pub fn save_png_rgb(img: &RgbImage, path: &Path) -> Result<()> {
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))
}

pub fn save_png_mask(mask: &ExclusionMask, path: &Path) -> Result<()> {
    mask.to_gray()
        .save_with_format(path, ImageFormat::Png)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(r)
}

fn require_columns(rdr: &mut csv::Reader<&[u8]>, what: &'static str, cols: &[&str]) -> Result<()> {
    let headers = rdr.headers()?.clone();
    for col in cols {
        if !headers.iter().any(|h| h == *col) {
            return Err(Error::Parse {
                what,
                line: 1,
                msg: format!("missing column `{col}`"),
            });
        }
    }
    Ok(())
}

fn record_line(rec: &csv::StringRecord) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct ManifestEntry {
    pub image_id: String,
    pub image_path: PathBuf,
    #[serde(default)]
    pub mask_path: Option<PathBuf>,
    #[serde(default)]
    pub gt_mask_path: Option<PathBuf>,
    #[serde(default)]
    pub label: Option<String>,
}

impl ManifestEntry {
    /// Makes relative paths relative to `base` (normally the manifest's
    /// directory).
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.image_path);
        if let Some(p) = self.mask_path.as_mut() {
            fix(p);
        }
        if let Some(p) = self.gt_mask_path.as_mut() {
            fix(p);
        }
    }
}

/// Parses a manifest CSV. `image_id` and `image_path` columns are required,
/// the other columns are optional and may be empty. Image ids must be unique.
pub fn parse_manifest(bytes: &[u8]) -> Result<Vec<ManifestEntry>> {
    let mut rdr = csv_reader(bytes);
    require_columns(&mut rdr, "manifest", &["image_id", "image_path"])?;
    let headers = rdr.headers()?.clone();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        let entry: ManifestEntry = rec.deserialize(Some(&headers))?;
        if entry.image_id.is_empty() {
            return Err(Error::Parse {
                what: "manifest",
                line,
                msg: "empty image_id".into(),
            });
        }
        if entry.image_path.as_os_str().is_empty() {
            return Err(Error::Parse {
                what: "manifest",
                line,
                msg: "empty image_path".into(),
            });
        }
        if !seen.insert(entry.image_id.clone()) {
            return Err(Error::Parse {
                what: "manifest",
                line,
                msg: format!("duplicate image_id `{}`", entry.image_id),
            });
        }
        out.push(entry);
    }
    Ok(out)
}

/// Reads a manifest file and resolves its relative paths against the
/// manifest's own directory.
pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let mut entries = parse_manifest(&read_file(path)?)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    for e in &mut entries {
        e.resolve_paths(base);
    }
    Ok(entries)
}

pub fn write_manifest(entries: &[ManifestEntry]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let p = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
    for e in entries {
        w.write_record([
            e.image_id.clone(),
            e.image_path.display().to_string(),
            p(&e.mask_path),
            p(&e.gt_mask_path),
            e.label.clone().unwrap_or_default(),
        ])
        .expect("writing to memory");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8");
    format!("{MANIFEST_HEADER}\n{body}")
}

/// One row of the ITA results table.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ItaResultRow {
    pub image_id: String,
    pub estimate: ItaEstimate,
    pub flags: Vec<String>,
}

pub fn write_ita_results(rows: &[ItaResultRow]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in rows {
        let e = &r.estimate;
        w.write_record([
            r.image_id.clone(),
            fmt6(e.ita_degrees),
            e.category.abbreviation().to_string(),
            e.n_total.to_string(),
            e.n_retained.to_string(),
            fmt6(e.mean_l),
            fmt6(e.mean_b),
            fmt6(e.std_l),
            fmt6(e.std_b),
            fmt6(e.mean_gray),
            fmt6(e.median_gray),
            r.flags.join(";"),
        ])
        .expect("writing to memory");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8");
    format!("{ITA_RESULTS_HEADER}\n{body}")
}

#[derive(Debug, Deserialize)]
struct RawItaRow {
    image_id: String,
    ita_degrees: f64,
    category: String,
    n_total: usize,
    n_retained: usize,
    mean_l: f64,
    mean_b: f64,
    std_l: f64,
    std_b: f64,
    mean_gray: f64,
    median_gray: f64,
    #[serde(default)]
    flags: Option<String>,
}

/// Parses an ITA results table. The category column must agree with the ITA
/// value; a mismatch means the file was edited or produced by a different
/// binning.
pub fn parse_ita_results(bytes: &[u8]) -> Result<Vec<ItaResultRow>> {
    let mut rdr = csv_reader(bytes);
    require_columns(&mut rdr, "ITA results", &["image_id", "ita_degrees", "category"])?;
    let headers = rdr.headers()?.clone();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        let raw: RawItaRow = rec.deserialize(Some(&headers))?;
        let bad = |msg: String| Error::Parse {
            what: "ITA results",
            line,
            msg,
        };
        if !raw.ita_degrees.is_finite() {
            return Err(bad("non-finite ita_degrees".into()));
        }
        let category: SkinToneCategory = raw.category.parse().map_err(bad)?;
        // six-decimal output can land a value from just above a bin edge
        // exactly on it, so allow half a unit in the last written place
        let fits = [0.0, -5e-7, 5e-7]
            .iter()
            .any(|d| crate::ita::categorize(raw.ita_degrees + d) == category);
        if !fits {
            return Err(bad(format!(
                "category `{}` does not match ITA {}",
                raw.category, raw.ita_degrees
            )));
        }
        if !seen.insert(raw.image_id.clone()) {
            return Err(bad(format!("duplicate image_id `{}`", raw.image_id)));
        }
        out.push(ItaResultRow {
            image_id: raw.image_id,
            estimate: ItaEstimate {
                ita_degrees: raw.ita_degrees,
                category,
                n_total: raw.n_total,
                n_retained: raw.n_retained,
                mean_l: raw.mean_l,
                mean_b: raw.mean_b,
                std_l: raw.std_l,
                std_b: raw.std_b,
                mean_gray: raw.mean_gray,
                median_gray: raw.median_gray,
            },
            flags: raw
                .flags
                .map(|f| f.split(';').filter(|s| !s.is_empty()).map(String::from).collect())
                .unwrap_or_default(),
        });
    }
    Ok(out)
}

/// Parses a predictions CSV. `(image_id, split_id)` pairs must be unique.
pub fn parse_predictions(bytes: &[u8]) -> Result<Vec<PredictionRecord>> {
    let mut rdr = csv_reader(bytes);
    require_columns(
        &mut rdr,
        "predictions",
        &["image_id", "split_id", "true_label", "predicted_label"],
    )?;
    let headers = rdr.headers()?.clone();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        let p: PredictionRecord = rec.deserialize(Some(&headers))?;
        if p.image_id.is_empty() || p.true_label.is_empty() || p.predicted_label.is_empty() {
            return Err(Error::Parse {
                what: "predictions",
                line,
                msg: "empty image_id or label".into(),
            });
        }
        if !seen.insert((p.image_id.clone(), p.split_id.clone())) {
            return Err(Error::Parse {
                what: "predictions",
                line,
                msg: format!("duplicate (image_id, split_id) = ({}, {})", p.image_id, p.split_id),
            });
        }
        out.push(p);
    }
    Ok(out)
}

pub fn write_predictions(rows: &[PredictionRecord]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in rows {
        w.write_record([&r.image_id, &r.split_id, &r.true_label, &r.predicted_label])
            .expect("writing to memory");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8");
    format!("{PREDICTIONS_HEADER}\n{body}")
}

pub fn write_per_bin(bins: &[PerBinAccuracy], midpoints: &crate::stats::BinMidpoints) -> String {
    let mut s = String::from(PER_BIN_HEADER);
    s.push('\n');
    for b in bins {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            b.category.abbreviation(),
            b.n,
            b.per_split.len(),
            fmt_opt6(b.mean_accuracy),
            fmt_opt6(b.std_error),
            fmt6(midpoints.midpoint(b.category)),
        );
    }
    s
}

pub fn write_seg_per_image(rows: &[PerImageSeg]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in rows {
        w.write_record([
            r.image_id.clone(),
            fmt6(r.accuracy),
            fmt6(r.false_negative_rate),
            fmt_opt6(r.abs_delta_ita),
        ])
        .expect("writing to memory");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8");
    format!("{SEG_PER_IMAGE_HEADER}\n{body}")
}
