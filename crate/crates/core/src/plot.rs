//! Deterministic SVG figures for experiment reports.
//!
//! The output is plain hand-assembled SVG with all coordinates formatted to
//! six decimals, so a fixed report yields identical bytes on every run.

use thiserror::Error;

use crate::experiments::{CsvTable, ExperimentReport};
use crate::stats;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("report kind `{0}` has no distributional plot")]
    UnsupportedKind(String),
    #[error("report table is missing column `{0}`")]
    MissingColumn(String),
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 56.0;

struct Frame {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.x_lo) / (self.x_hi - self.x_lo) * (W - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        H - MARGIN - (v - self.y_lo) / (self.y_hi - self.y_lo) * (H - 2.0 * MARGIN)
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

fn polyline(frame: &Frame, pts: &[(f64, f64)], style: &str) -> String {
    let coords: Vec<String> = pts
        .iter()
        .map(|(x, y)| format!("{},{}", fmt(frame.x(*x)), fmt(frame.y(*y))))
        .collect();
    format!("<polyline fill=\"none\" {} points=\"{}\"/>\n", style, coords.join(" "))
}

fn text(x: f64, y: f64, anchor: &str, content: &str) -> String {
    format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"{anchor}\" font-family=\"monospace\" font-size=\"12\">{content}</text>\n",
        fmt(x),
        fmt(y)
    )
}

fn document(title: &str, x_label: &str, y_label: &str, frame: &Frame, body: &str) -> String {
    let mut svg = String::new();
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
        W as u32, H as u32, W as u32, H as u32
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt(MARGIN),
        fmt(H - MARGIN),
        fmt(W - MARGIN),
        fmt(H - MARGIN)
    ));
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt(MARGIN),
        fmt(MARGIN),
        fmt(MARGIN),
        fmt(H - MARGIN)
    ));
    for (v, label_axis) in [(frame.x_lo, true), (frame.x_hi, true)] {
        let _ = label_axis;
        svg.push_str(&text(frame.x(v), H - MARGIN + 16.0, "middle", &fmt(v)));
    }
    for v in [frame.y_lo, frame.y_hi] {
        svg.push_str(&text(MARGIN - 6.0, frame.y(v) + 4.0, "end", &fmt(v)));
    }
    svg.push_str(&text(W / 2.0, H - 12.0, "middle", x_label));
    svg.push_str(&text(14.0, H / 2.0, "middle", y_label));
    svg.push_str(&text(W / 2.0, 24.0, "middle", title));
    svg.push_str(body);
    svg.push_str("</svg>\n");
    svg
}

fn empirical_cdf_points(sample: &mut [f64]) -> Vec<(f64, f64)> {
    sample.sort_unstable_by(f64::total_cmp);
    let n = sample.len() as f64;
    let mut pts = Vec::with_capacity(2 * sample.len());
    let mut prev = 0.0;
    for (i, &x) in sample.iter().enumerate() {
        pts.push((x, prev));
        prev = (i + 1) as f64 / n;
        pts.push((x, prev));
    }
    pts
}

fn curve(frame: &Frame, f: impl Fn(f64) -> f64, lo: f64, hi: f64, style: &str) -> String {
    let pts: Vec<(f64, f64)> = (0..=256)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / 256.0;
            (x, f(x))
        })
        .collect();
    polyline(frame, &pts, style)
}

fn summary_f64(report: &ExperimentReport, key: &str) -> f64 {
    report.summary.get(key).and_then(|v| v.as_f64()).unwrap_or(f64::NAN)
}

/// Renders the report's distributional content as a standalone SVG.
pub fn emit_plot(report: &ExperimentReport, table: &CsvTable) -> Result<String, PlotError> {
    match report.kind.as_str() {
        "ds" => {
            let mut sample = table
                .column_f64("normalized")
                .ok_or_else(|| PlotError::MissingColumn("normalized".into()))?;
            let x_hi = sample.iter().cloned().fold(1.0, f64::max);
            let frame = Frame { x_lo: 0.0, x_hi, y_lo: 0.0, y_hi: 1.0 };
            let mut body = String::new();
            body.push_str(&polyline(&frame, &empirical_cdf_points(&mut sample), "stroke=\"steelblue\" stroke-width=\"1.5\""));
            body.push_str(&curve(
                &frame,
                |v| stats::cdf_exp_half_chi2(v.clamp(0.0, 1.0)).unwrap_or(1.0),
                0.0,
                x_hi,
                "stroke=\"black\"",
            ));
            body.push_str(&curve(
                &frame,
                |v| stats::cdf_exp_chi2(v.clamp(0.0, 1.0)).unwrap_or(1.0),
                0.0,
                x_hi,
                "stroke=\"gray\" stroke-dasharray=\"4 3\"",
            ));
            body.push_str(&text(
                W - MARGIN,
                MARGIN + 14.0,
                "end",
                &format!(
                    "ks_half_chi2={} ks_exp_chi2={}",
                    crate::experiments::json_num(summary_f64(report, "ks_half_chi2")),
                    crate::experiments::json_num(summary_f64(report, "ks_exp_chi2"))
                ),
            ));
            Ok(document(
                "normalized occupancy vs limit laws",
                "normalized occupancy",
                "CDF",
                &frame,
                &body,
            ))
        }
        "clt" => {
            let mut sample = table
                .column_f64("z")
                .ok_or_else(|| PlotError::MissingColumn("z".into()))?;
            let frame = Frame { x_lo: -4.0, x_hi: 4.0, y_lo: 0.0, y_hi: 1.0 };
            let mut body = String::new();
            body.push_str(&polyline(&frame, &empirical_cdf_points(&mut sample), "stroke=\"steelblue\" stroke-width=\"1.5\""));
            body.push_str(&curve(&frame, stats::normal_cdf, -4.0, 4.0, "stroke=\"black\""));
            body.push_str(&text(
                W - MARGIN,
                MARGIN + 14.0,
                "end",
                &format!("ks={}", crate::experiments::json_num(summary_f64(report, "ks"))),
            ));
            Ok(document(
                "scaled sums vs standard Gaussian",
                "z",
                "CDF",
                &frame,
                &body,
            ))
        }
        "lemma-final" => {
            let mut sample = table
                .column_f64("measured")
                .ok_or_else(|| PlotError::MissingColumn("measured".into()))?;
            let x_hi = sample.iter().cloned().fold(f64::MIN, f64::max).max(1e-9);
            let frame = Frame { x_lo: 0.0, x_hi, y_lo: 0.0, y_hi: 1.0 };
            let mut body = String::new();
            body.push_str(&polyline(&frame, &empirical_cdf_points(&mut sample), "stroke=\"steelblue\" stroke-width=\"1.5\""));
            body.push_str(&text(
                W - MARGIN,
                MARGIN + 14.0,
                "end",
                &format!(
                    "pass_fraction={}",
                    crate::experiments::json_num(summary_f64(report, "pass_fraction"))
                ),
            ));
            Ok(document(
                "scaled occupancy at the block rank",
                "sqrt(l_n)/n * S_n",
                "CDF",
                &frame,
                &body,
            ))
        }
        "bre" => {
            let ns = table
                .column_f64("n")
                .ok_or_else(|| PlotError::MissingColumn("n".into()))?;
            let ys = table
                .column_f64("normalized")
                .ok_or_else(|| PlotError::MissingColumn("normalized".into()))?;
            // Mean normalized occupancy per schedule entry.
            let mut per_n: Vec<(f64, Vec<f64>)> = Vec::new();
            for (&n, &y) in ns.iter().zip(&ys) {
                match per_n.iter_mut().find(|(m, _)| *m == n) {
                    Some((_, v)) => v.push(y),
                    None => per_n.push((n, vec![y])),
                }
            }
            per_n.sort_by(|a, b| a.0.total_cmp(&b.0));
            let pts: Vec<(f64, f64)> = per_n
                .iter()
                .map(|(n, v)| (n.ln(), stats::mean(v)))
                .collect();
            let y_hi = pts.iter().map(|p| p.1).fold(f64::MIN, f64::max) * 1.5;
            let frame = Frame {
                x_lo: pts.first().map(|p| p.0).unwrap_or(0.0),
                x_hi: pts.last().map(|p| p.0).unwrap_or(1.0),
                y_lo: 0.0,
                y_hi,
            };
            let mut body = polyline(&frame, &pts, "stroke=\"steelblue\" stroke-width=\"1.5\"");
            body.push_str(&text(
                W - MARGIN,
                MARGIN + 14.0,
                "end",
                &format!(
                    "slope={}",
                    crate::experiments::json_num(summary_f64(report, "slope"))
                ),
            ));
            Ok(document(
                "normalized mean occupancy vs log n",
                "log n",
                "mean S_n sqrt(log n)/n",
                &frame,
                &body,
            ))
        }
        "llt" => {
            let ns = table
                .column_f64("n")
                .ok_or_else(|| PlotError::MissingColumn("n".into()))?;
            let ts = table
                .column_f64("t")
                .ok_or_else(|| PlotError::MissingColumn("t".into()))?;
            let scaled = table
                .column_f64("scaled")
                .ok_or_else(|| PlotError::MissingColumn("scaled".into()))?;
            let n_hi = ns.iter().cloned().fold(f64::MIN, f64::max);
            let frame = Frame { x_lo: -3.5, x_hi: 3.5, y_lo: 0.0, y_hi: 0.5 };
            let mut body = String::new();
            body.push_str(&curve(
                &frame,
                |t| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt(),
                -3.5,
                3.5,
                "stroke=\"black\"",
            ));
            for ((&n, &t), &s) in ns.iter().zip(&ts).zip(&scaled) {
                if n == n_hi && t.abs() <= 3.5 {
                    body.push_str(&format!(
                        "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"steelblue\"/>\n",
                        fmt(frame.x(t)),
                        fmt(frame.y(s.min(0.5)))
                    ));
                }
            }
            body.push_str(&text(
                W - MARGIN,
                MARGIN + 14.0,
                "end",
                &format!(
                    "max_rel_err_t2={}",
                    crate::experiments::json_num(summary_f64(report, "max_rel_err_t2"))
                ),
            ));
            Ok(document(
                "profile vs Gaussian density",
                "t",
                "scaled level mass",
                &frame,
                &body,
            ))
        }
        other => Err(PlotError::UnsupportedKind(other.to_string())),
    }
}
