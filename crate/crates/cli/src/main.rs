use std::collections::HashMap;
use std::panic;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::Serialize;

use skintone::audit::{self, correlation_report, load_seg_cases, run_audit, SkippedImage};
use skintone::config::{ConfigEcho, RunConfig};
use skintone::formats::{
    load_manifest, parse_ita_results, parse_predictions, write_ita_results, write_per_bin, write_seg_per_image,
    ItaResultRow,
};
use skintone::seg_eval::{evaluate_segmentation, SegSkip};
use skintone::stats::{
    balanced_accuracy, observed_labels, overall_accuracy, per_category_accuracy, trend_from_bins, BinMidpoints,
    PerBinAccuracy, TrendFit,
};
use skintone::synth::{generate_dataset, write_dataset, SynthSpec};
use skintone::{svg, Error, SkinToneCategory, TOOL_VERSION};

/// Skin tone estimation and fairness evaluation for dermatology image datasets.
#[derive(Parser)]
#[command(name = "skintone", version, about)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Manifest CSV (image_id,image_path,mask_path,gt_mask_path,label)
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// `key = value` configuration file; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (0 = one per CPU)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// mean_of_means or mean_of_pixel_itas
    #[arg(long, global = true)]
    trim_mode: Option<String>,
    /// white_excluded or black_excluded
    #[arg(long, global = true)]
    mask_polarity: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Extra configuration override, repeatable
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate ITA per image and report the skin tone distribution
    Ita,
    /// Score predicted masks against ground-truth masks
    Segeval,
    /// Per skin tone accuracy and the accuracy-vs-ITA trend
    Fairness {
        #[arg(long)]
        predictions: PathBuf,
        /// ITA results CSV from `ita`; computed from --manifest when absent
        #[arg(long)]
        ita_results: Option<PathBuf>,
        /// Comma-separated label set for balanced accuracy
        #[arg(long, value_delimiter = ',')]
        labels: Option<Vec<String>>,
        /// Weight the trend fit by per-bin sample counts
        #[arg(long)]
        weighted: bool,
    },
    /// Generate a synthetic dataset with planted ground truth
    Synth {
        /// Spec file; built-in defaults when absent
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Correlation between ITA and grayscale intensity
    Correlate {
        #[arg(long)]
        ita_results: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Failure::Usage(m),
            e => Failure::Data(e),
        }
    }
}

type CmdResult = Result<(), Failure>;

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
    exit_code: u8,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    tool_version: &'static str,
    error: ErrorBody<'a>,
}

fn report_error(kind: &str, message: String, exit_code: u8) -> ExitCode {
    let body = ErrorReport {
        tool_version: TOOL_VERSION,
        error: ErrorBody {
            kind,
            message,
            exit_code,
        },
    };
    eprintln!("{}", serde_json::to_string(&body).expect("error report serialises"));
    ExitCode::from(exit_code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return report_error("usage", e.kind().to_string(), 1);
        }
    };

    panic::set_hook(Box::new(|_| {}));
    match panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure::Usage(m))) => report_error("usage", m, 1),
        Ok(Err(Failure::Data(e))) => report_error(e.kind(), e.to_string(), 2),
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "internal error".into());
            report_error("internal", msg, 3)
        }
    }
}

fn effective_config(c: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &c.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            RunConfig::from_text(&text)?
        }
        None => RunConfig::default(),
    };
    let mut overrides: Vec<(String, String)> = Vec::new();
    if let Some(v) = &c.trim_mode {
        overrides.push(("trim_mode".into(), v.clone()));
    }
    if let Some(v) = &c.mask_polarity {
        overrides.push(("mask_polarity".into(), v.clone()));
    }
    for kv in &c.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        overrides.push((k.trim().replace('-', "_"), v.trim().to_string()));
    }
    for (k, v) in overrides {
        cfg.set(&k, &v)?;
    }
    if let Some(d) = &c.out_dir {
        cfg.out_dir = d.clone();
    }
    if let Some(w) = c.workers {
        cfg.workers = w;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> CmdResult {
    let cfg = effective_config(&cli.common)?;
    let manifest = cli.common.manifest.as_deref();
    match cli.command {
        Command::Ita => cmd_ita(require_manifest(manifest)?, &cfg),
        Command::Segeval => cmd_segeval(require_manifest(manifest)?, &cfg),
        Command::Fairness {
            predictions,
            ita_results,
            labels,
            weighted,
        } => {
            let mut cfg = cfg;
            if labels.is_some() {
                cfg.labels = labels;
            }
            cfg.weighted_trend |= weighted;
            cmd_fairness(&predictions, ita_results.as_deref(), manifest, &cfg)
        }
        Command::Synth { spec } => cmd_synth(spec.as_deref(), cli.common.seed, &cfg),
        Command::Correlate { ita_results } => cmd_correlate(ita_results.as_deref(), manifest, &cfg),
    }
}

fn require_manifest(m: Option<&Path>) -> Result<&Path, Failure> {
    m.ok_or_else(|| Failure::Usage("--manifest is required for this command".into()))
}

fn out_dir(cfg: &RunConfig) -> Result<&Path, Failure> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    Ok(&cfg.out_dir)
}

fn write_file(path: &Path, body: impl AsRef<[u8]>) -> CmdResult {
    std::fs::write(path, body).map_err(|e| Error::io(path, e))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> CmdResult {
    let mut s = serde_json::to_string_pretty(value).map_err(Error::from)?;
    s.push('\n');
    write_file(path, s)
}

fn read_file(path: &Path) -> Result<Vec<u8>, Failure> {
    Ok(std::fs::read(path).map_err(|e| Error::io(path, e))?)
}

fn cmd_ita(manifest: &Path, cfg: &RunConfig) -> CmdResult {
    let entries = load_manifest(manifest)?;
    let out = run_audit(&entries, cfg)?;
    let dir = out_dir(cfg)?;
    write_file(&dir.join("ita_results.csv"), write_ita_results(&out.results))?;
    write_json(&dir.join("distribution.json"), &out.report)?;
    write_file(&dir.join("histogram.svg"), svg::histogram(&out.report))?;
    println!(
        "ita: {} of {} images estimated, {} skipped",
        out.report.n_estimated,
        out.report.total_images,
        out.report.skipped.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct SegQualityJson<'a> {
    tool_version: &'static str,
    pixel_accuracy: f64,
    false_negative_rate: f64,
    ita_mae_degrees: Option<f64>,
    n_images: usize,
    n_ita_pairs: usize,
    aggregation: &'a str,
    ita_skipped: &'a [SegSkip],
    skipped: &'a [SkippedImage],
    config: ConfigEcho,
}

fn cmd_segeval(manifest: &Path, cfg: &RunConfig) -> CmdResult {
    let entries = load_manifest(manifest)?;
    let (cases, skipped) = load_seg_cases(&entries, cfg)?;
    let report = audit::with_workers(cfg.workers, || evaluate_segmentation(&cases, &cfg.ita))??;
    let dir = out_dir(cfg)?;
    write_json(
        &dir.join("seg_quality.json"),
        &SegQualityJson {
            tool_version: TOOL_VERSION,
            pixel_accuracy: report.pixel_accuracy,
            false_negative_rate: report.false_negative_rate,
            ita_mae_degrees: report.ita_mae_degrees,
            n_images: report.n_images,
            n_ita_pairs: report.n_ita_pairs,
            aggregation: &report.aggregation,
            ita_skipped: &report.ita_skipped,
            skipped: &skipped,
            config: cfg.echo(),
        },
    )?;
    write_file(&dir.join("seg_per_image.csv"), write_seg_per_image(&report.per_image))?;
    println!(
        "segeval: accuracy {:.6}, fnr {:.6}, ita mae {} over {} images",
        report.pixel_accuracy,
        report.false_negative_rate,
        report
            .ita_mae_degrees
            .map(|m| format!("{m:.6}"))
            .unwrap_or_else(|| "n/a".into()),
        report.n_images
    );
    Ok(())
}

/// ITA results either from a results CSV or by running the audit.
fn ita_rows(ita_results: Option<&Path>, manifest: Option<&Path>, cfg: &RunConfig) -> Result<Vec<ItaResultRow>, Failure> {
    match (ita_results, manifest) {
        (Some(p), _) => Ok(parse_ita_results(&read_file(p)?)?),
        (None, Some(m)) => {
            let out = run_audit(&load_manifest(m)?, cfg)?;
            for s in &out.report.skipped {
                warn!("{} has no ITA ({})", s.image_id, s.reason);
            }
            Ok(out.results)
        }
        (None, None) => Err(Failure::Usage("either --ita-results or --manifest is required".into())),
    }
}

#[derive(Serialize)]
struct TrendJson<'a> {
    tool_version: &'static str,
    n_predictions: usize,
    labels: &'a [String],
    overall_accuracy: f64,
    balanced_accuracy: f64,
    midpoints: BinMidpoints,
    bins: &'a [PerBinAccuracy],
    trend: Option<TrendFit>,
    trend_error: Option<String>,
    config: ConfigEcho,
}

fn cmd_fairness(predictions: &Path, ita_results: Option<&Path>, manifest: Option<&Path>, cfg: &RunConfig) -> CmdResult {
    let preds = parse_predictions(&read_file(predictions)?)?;
    if preds.is_empty() {
        return Err(Error::EmptyInput("predictions file has no rows").into());
    }
    let rows = ita_rows(ita_results, manifest, cfg)?;
    let categories: HashMap<String, SkinToneCategory> = rows
        .iter()
        .map(|r| (r.image_id.clone(), r.estimate.category))
        .collect();

    let labels = cfg.labels.clone().unwrap_or_else(|| observed_labels(&preds));
    let overall = overall_accuracy(&preds)?;
    let balanced = balanced_accuracy(&preds, &labels)?;
    let bins = per_category_accuracy(&preds, &categories)?;
    let (trend, trend_error) = match trend_from_bins(&bins, &cfg.midpoints, cfg.weighted_trend) {
        Ok(t) => (Some(t), None),
        Err(e @ (Error::InsufficientPoints(_) | Error::DegenerateX)) => {
            warn!("no trend fit: {e}");
            (None, Some(e.to_string()))
        }
        Err(e) => return Err(e.into()),
    };

    let dir = out_dir(cfg)?;
    write_file(&dir.join("per_bin.csv"), write_per_bin(&bins, &cfg.midpoints))?;
    write_json(
        &dir.join("trend.json"),
        &TrendJson {
            tool_version: TOOL_VERSION,
            n_predictions: preds.len(),
            labels: &labels,
            overall_accuracy: overall,
            balanced_accuracy: balanced,
            midpoints: cfg.midpoints,
            bins: &bins,
            trend: trend.clone(),
            trend_error,
            config: cfg.echo(),
        },
    )?;
    write_file(
        &dir.join("accuracy_vs_ita.svg"),
        svg::accuracy_plot(&bins, &cfg.midpoints, trend.as_ref(), &cfg.echo()),
    )?;
    match trend {
        Some(t) => println!(
            "fairness: accuracy {overall:.4}, balanced {balanced:.4}, slope {:.6} (95% CI {:.6} to {:.6})",
            t.slope, t.ci95_low, t.ci95_high
        ),
        None => println!("fairness: accuracy {overall:.4}, balanced {balanced:.4}, no trend fit"),
    }
    Ok(())
}

#[derive(Serialize)]
struct SynthJson<'a> {
    tool_version: &'static str,
    n_images: usize,
    n_predictions: usize,
    manifest: &'a Path,
    ground_truth: &'a Path,
    predictions: Option<&'a Path>,
    prng: &'static str,
    spec: &'a SynthSpec,
}

fn cmd_synth(spec_path: Option<&Path>, seed: Option<u64>, cfg: &RunConfig) -> CmdResult {
    let mut spec = match spec_path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            SynthSpec::from_text(&text)?
        }
        None => SynthSpec::default(),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    let dir = out_dir(cfg)?;
    let written = audit::with_workers(cfg.workers, || -> skintone::Result<_> {
        let ds = generate_dataset(&spec)?;
        let w = write_dataset(&ds, dir)?;
        Ok((ds.items.len(), ds.predictions.len(), w))
    })??;
    let (n_images, n_predictions, w) = written;
    write_json(
        &dir.join("synth.json"),
        &SynthJson {
            tool_version: TOOL_VERSION,
            n_images,
            n_predictions,
            manifest: &w.manifest,
            ground_truth: &w.ground_truth,
            predictions: w.predictions.as_deref(),
            prng: "chacha8, stream per image index / split index",
            spec: &spec,
        },
    )?;
    println!("synth: {n_images} images, {n_predictions} predictions in {}", dir.display());
    Ok(())
}

#[derive(Serialize)]
struct CorrelationJson {
    tool_version: &'static str,
    n_images: usize,
    r_mean: f64,
    r_median: f64,
    config: ConfigEcho,
}

fn cmd_correlate(ita_results: Option<&Path>, manifest: Option<&Path>, cfg: &RunConfig) -> CmdResult {
    let rows = ita_rows(ita_results, manifest, cfg)?;
    let estimates: Vec<_> = rows.into_iter().map(|r| r.estimate).collect();
    let r = correlation_report(&estimates)?;
    let dir = out_dir(cfg)?;
    write_json(
        &dir.join("correlation.json"),
        &CorrelationJson {
            tool_version: TOOL_VERSION,
            n_images: r.n_images,
            r_mean: r.r_mean,
            r_median: r.r_median,
            config: cfg.echo(),
        },
    )?;
    println!("correlate: r_mean {:.6}, r_median {:.6} over {} images", r.r_mean, r.r_median, r.n_images);
    Ok(())
}
