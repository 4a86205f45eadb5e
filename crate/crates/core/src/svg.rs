//! Hand-written SVG charts. Output is a pure function of the input so the
//! same report always renders to the same bytes.

use std::fmt::Write as _;

use crate::audit::DistributionReport;
use crate::config::ConfigEcho;
use crate::ita::SkinToneCategory;
use crate::stats::{BinMidpoints, PerBinAccuracy, TrendFit};
use crate::TOOL_VERSION;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn open(svg: &mut String, title: &str, config: &ConfigEcho) {
    let cfg = serde_json::to_string(config).expect("config echo serialises");
    let _ = writeln!(
        svg,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<metadata>{}|{}</metadata>
<title>{}</title>
<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        escape(TOOL_VERSION),
        escape(&cfg),
        escape(title),
        WIDTH / 2.0,
        escape(title),
    );
}

fn axes(svg: &mut String, x_label: &str, y_label: &str) {
    let (x0, y0, x1, y1) = (LEFT, HEIGHT - BOTTOM, WIDTH - RIGHT, TOP);
    let _ = writeln!(
        svg,
        r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="black"/>
<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}" stroke="black"/>
<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>
<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        escape(x_label),
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label),
    );
}

/// Bar chart of image counts per skin tone category, lightest on the left.
pub fn histogram(report: &DistributionReport) -> String {
    let mut svg = String::new();
    open(&mut svg, "ITA skin tone distribution", &report.config);
    axes(&mut svg, "skin tone category", "images");

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let slot = plot_w / 8.0;
    let bar_w = slot * 0.7;
    let max = report.categories.iter().map(|c| c.count).max().unwrap_or(0);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{max}</text>"#,
        LEFT - 4.0,
        TOP + 4.0
    );
    for (i, c) in report.categories.iter().enumerate() {
        let h = if max == 0 {
            0.0
        } else {
            plot_h * c.count as f64 / max as f64
        };
        let x = LEFT + slot * i as f64 + (slot - bar_w) / 2.0;
        let y = HEIGHT - BOTTOM - h;
        let label = c.category.abbreviation();
        let _ = writeln!(
            svg,
            r##"<rect class="bar" data-category="{label}" data-count="{}" x="{x:.2}" y="{y:.2}" width="{bar_w:.2}" height="{h:.2}" fill="#b07850"/>
<text x="{:.2}" y="{:.2}" text-anchor="middle">{label}</text>
<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10">{}</text>"##,
            c.count,
            x + bar_w / 2.0,
            HEIGHT - BOTTOM + 16.0,
            x + bar_w / 2.0,
            y - 4.0,
            c.count,
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Per-bin mean accuracy against bin midpoint ITA, with standard-error bars
/// and the fitted trend line when one is available.
pub fn accuracy_plot(
    bins: &[PerBinAccuracy],
    midpoints: &BinMidpoints,
    trend: Option<&TrendFit>,
    config: &ConfigEcho,
) -> String {
    let mut svg = String::new();
    open(&mut svg, "Classification accuracy versus ITA", config);
    axes(&mut svg, "ITA (degrees, bin midpoint)", "mean accuracy");

    let xs: Vec<f64> = SkinToneCategory::ALL.iter().map(|&c| midpoints.midpoint(c)).collect();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min) - 5.0;
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 5.0;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - lo) / (hi - lo) * plot_w;
    let py = |y: f64| HEIGHT - BOTTOM - y.clamp(0.0, 1.0) * plot_h;

    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{tick:.2}</text>"#,
            LEFT - 4.0,
            py(tick) + 4.0
        );
    }
    for b in bins {
        let x = px(midpoints.midpoint(b.category));
        let label = b.category.abbreviation();
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="10">{label}</text>"#,
            HEIGHT - BOTTOM + 16.0
        );
        let Some(mean) = b.mean_accuracy else { continue };
        let se = b.std_error.unwrap_or(0.0);
        let _ = writeln!(
            svg,
            r#"<line class="errbar" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>
<circle class="point" data-category="{label}" cx="{x:.2}" cy="{:.2}" r="4" fill="black"/>"#,
            py(mean - se),
            py(mean + se),
            py(mean),
        );
    }
    if let Some(t) = trend {
        let (x0, x1) = (lo, hi);
        let _ = writeln!(
            svg,
            r##"<line class="trend" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#c03030" stroke-dasharray="6 3"/>
<text x="{:.2}" y="{:.2}" text-anchor="end" fill="#c03030">slope {:.6}/deg, 95% CI ({:.6}, {:.6})</text>"##,
            px(x0),
            py(t.intercept + t.slope * x0),
            px(x1),
            py(t.intercept + t.slope * x1),
            WIDTH - RIGHT,
            TOP + 8.0,
            t.slope,
            t.ci95_low,
            t.ci95_high,
        );
    }
    svg.push_str("</svg>\n");
    svg
}
