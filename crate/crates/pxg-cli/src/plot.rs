//! Decorative SVG output: hand-rolled polyline plots, no plotting crate.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use pxg_core::io;
use pxg_core::{PxgError, Result};

use crate::{Cli, PlotKind};

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

pub(crate) fn cmd_plot(
    cli: &Cli,
    summary_path: &Path,
    kind: PlotKind,
    out: Option<&Path>,
) -> Result<()> {
    let summary = io::read_summary_json(summary_path)?;
    let (series, x_label, y_label) = match kind {
        PlotKind::Loglog => (
            loglog_series(&summary),
            "log10 t".to_string(),
            "log10 value".to_string(),
        ),
        PlotKind::Survival => (
            survival_series(&summary),
            "r".to_string(),
            "log10 survival".to_string(),
        ),
    };
    if series.is_empty() {
        return Err(PxgError::config(
            "plot: summary contains no non-empty series for this plot kind",
        ));
    }
    let title = summary
        .get("experiment")
        .and_then(Value::as_str)
        .unwrap_or("experiment");
    let svg = render(&series, title, &x_label, &y_label);
    let path = match out {
        Some(p) => p.to_path_buf(),
        None => {
            let dir = cli
                .out_dir
                .clone()
                .or_else(|| std::env::var_os("PXG_OUT_DIR").map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&dir)?;
            let stem = summary_path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("summary");
            let kind_name = match kind {
                PlotKind::Loglog => "loglog",
                PlotKind::Survival => "survival",
            };
            dir.join(format!("{stem}_{kind_name}.svg"))
        }
    };
    std::fs::write(&path, svg)?;
    println!("{}", json!({ "plot": path }));
    Ok(())
}

fn per_t(summary: &Value) -> &[Value] {
    summary
        .get("per_t")
        .and_then(Value::as_array)
        .map(Vec::as_slice)
        .unwrap_or(&[])
}

/// One log-log series per per-t metric that stays positive.
fn loglog_series(summary: &Value) -> Vec<Series> {
    let mut out = Vec::new();
    for key in ["variance", "d_kolmogorov", "d_wasserstein1", "mean_radius"] {
        let mut points = Vec::new();
        for row in per_t(summary) {
            let t = row.get("t").and_then(Value::as_f64);
            let v = row.get(key).and_then(Value::as_f64);
            if let (Some(t), Some(v)) = (t, v) {
                if t > 0.0 && v > 0.0 {
                    points.push((t.log10(), v.log10()));
                }
            }
        }
        if points.len() >= 2 {
            out.push(Series {
                label: key.to_string(),
                points,
            });
        }
    }
    out
}

/// One survival polyline per t from the embedded curves.
fn survival_series(summary: &Value) -> Vec<Series> {
    let mut out = Vec::new();
    for row in per_t(summary) {
        let t = row.get("t").and_then(Value::as_f64).unwrap_or(f64::NAN);
        let mut points = Vec::new();
        for pair in row
            .get("curve")
            .and_then(Value::as_array)
            .map(Vec::as_slice)
            .unwrap_or(&[])
        {
            let r = pair.get(0).and_then(Value::as_f64);
            let s = pair.get(1).and_then(Value::as_f64);
            if let (Some(r), Some(s)) = (r, s) {
                if s > 0.0 {
                    points.push((r, s.log10()));
                }
            }
        }
        if points.len() >= 2 {
            out.push(Series {
                label: format!("t={t}"),
                points,
            });
        }
    }
    out
}

fn render(series: &[Series], title: &str, x_label: &str, y_label: &str) -> String {
    let (w, h) = (720.0, 520.0);
    let (left, right, top, bottom) = (80.0, 690.0, 40.0, 460.0);
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for s in series {
        for &(x, y) in &s.points {
            xs.push(x);
            ys.push(y);
        }
    }
    let (x_lo, x_hi) = padded_range(&xs);
    let (y_lo, y_hi) = padded_range(&ys);
    let px = |x: f64| left + (x - x_lo) / (x_hi - x_lo) * (right - left);
    let py = |y: f64| bottom - (y - y_lo) / (y_hi - y_lo) * (bottom - top);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{title}</text>\n",
        (left + right) / 2.0
    ));
    svg.push_str(&format!(
        "<rect x=\"{left}\" y=\"{top}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
        right - left,
        bottom - top
    ));
    for i in 0..=4 {
        let fx = x_lo + (x_hi - x_lo) * i as f64 / 4.0;
        let fy = y_lo + (y_hi - y_lo) * i as f64 / 4.0;
        let gx = px(fx);
        let gy = py(fy);
        svg.push_str(&format!(
            "<line x1=\"{gx}\" y1=\"{bottom}\" x2=\"{gx}\" y2=\"{}\" stroke=\"#444\"/>\n",
            bottom + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{gx}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{fx:.2}</text>\n",
            bottom + 18.0
        ));
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{gy}\" x2=\"{left}\" y2=\"{gy}\" stroke=\"#444\"/>\n",
            left - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{fy:.2}</text>\n",
            left - 8.0,
            gy + 4.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{x_label}</text>\n",
        (left + right) / 2.0,
        h - 14.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{y_label}</text>\n",
        (top + bottom) / 2.0,
        (top + bottom) / 2.0
    ));
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            pts.join(" ")
        ));
        for &(x, y) in &s.points {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>\n",
                px(x),
                py(y)
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{color}\">{}</text>\n",
            right - 150.0,
            top + 18.0 + 16.0 * i as f64,
            s.label
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn padded_range(vals: &[f64]) -> (f64, f64) {
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-9);
    (lo - 0.05 * span, hi + 0.05 * span)
}
