//! Run configuration and the flat `key = value` file format shared by
//! configuration and synthetic-dataset spec files.

use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::colorimetry::{GrayscaleMode, COLOR_PIPELINE_ID};
use crate::error::{Error, Result};
use crate::ita::{ItaConfig, MaskPolarity, TrimMode};
use crate::stats::BinMidpoints;

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped, as is anything after a `#` on a value line. Keys may repeat; the
/// caller decides whether the last one wins.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            what: "config",
            line: idx as u64 + 1,
            msg: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(Error::Parse {
                what: "config",
                line: idx as u64 + 1,
                msg: format!("invalid key `{key}`"),
            });
        }
        out.push((key.replace('-', "_"), value.trim().to_string()));
    }
    Ok(out)
}

pub(crate) fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| Error::Config(format!("{key}: cannot parse `{value}`: {e}")))
}

pub(crate) fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got `{value}`"))),
    }
}

pub(crate) fn parse_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub ita: ItaConfig,
    pub midpoints: BinMidpoints,
    /// Weight the trend fit by bin sample counts.
    pub weighted_trend: bool,
    pub out_dir: PathBuf,
    /// 0 means one worker per available CPU.
    pub workers: usize,
    pub seed: u64,
    /// Declared label set; `None` uses the labels seen in the predictions.
    pub labels: Option<Vec<String>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            ita: ItaConfig::default(),
            midpoints: BinMidpoints::default(),
            weighted_trend: false,
            out_dir: PathBuf::from("out"),
            workers: 0,
            seed: 0,
            labels: None,
        }
    }
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, v) in parse_key_values(text)? {
            cfg.set(&k, &v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "trim_mode" => self.ita.trim_mode = parse_value(key, value)?,
            "trim_sigma" => self.ita.trim_sigma = parse_value(key, value)?,
            "mask_threshold" => self.ita.mask_threshold = parse_value(key, value)?,
            "mask_polarity" => self.ita.mask_polarity = parse_value::<MaskPolarity>(key, value)?,
            "grayscale" | "grayscale_mode" => self.ita.grayscale = parse_value::<GrayscaleMode>(key, value)?,
            "midpoint_very_lt" => self.midpoints.very_lt = parse_value(key, value)?,
            "midpoint_dark" => self.midpoints.dark = parse_value(key, value)?,
            "weighted_trend" => self.weighted_trend = parse_bool(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "workers" => self.workers = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "labels" => {
                let l = parse_list(value);
                self.labels = (!l.is_empty()).then_some(l);
            }
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.ita.validate()?;
        if !self.midpoints.very_lt.is_finite() || !self.midpoints.dark.is_finite() {
            return Err(Error::Config("bin midpoints must be finite".into()));
        }
        Ok(())
    }

    /// The settings that influence results. Output location and worker
    /// count are left out so artifacts do not depend on them.
    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            trim_mode: self.ita.trim_mode,
            trim_sigma: self.ita.trim_sigma,
            trim_rule: "joint_l_b_inclusive_population_sd",
            mask_threshold: self.ita.mask_threshold,
            mask_polarity: self.ita.mask_polarity,
            grayscale: self.ita.grayscale,
            midpoint_very_lt: self.midpoints.very_lt,
            midpoint_dark: self.midpoints.dark,
            weighted_trend: self.weighted_trend,
            seed: self.seed,
            labels: self.labels.clone(),
            color_pipeline: COLOR_PIPELINE_ID,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub trim_mode: TrimMode,
    pub trim_sigma: f64,
    pub trim_rule: &'static str,
    pub mask_threshold: u8,
    pub mask_polarity: MaskPolarity,
    pub grayscale: GrayscaleMode,
    pub midpoint_very_lt: f64,
    pub midpoint_dark: f64,
    pub weighted_trend: bool,
    pub seed: u64,
    pub labels: Option<Vec<String>>,
    pub color_pipeline: &'static str,
}
