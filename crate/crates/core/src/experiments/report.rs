//! Report and table types plus their persisted JSON/CSV forms.
//!
//! Numbers destined for human eyes go through [`json_num`] so the stdout
//! summary, the JSON report and the CSV rows agree byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use super::{ExperimentConfig, ExperimentError};

/// Canonical decimal form of a float: exactly the bytes `serde_json` emits.
pub fn json_num(x: f64) -> String {
    if x.is_finite() {
        serde_json::to_string(&x).expect("finite float")
    } else {
        "null".into()
    }
}

/// Summary report of one experiment run. Serializes with sorted summary
/// keys, so the JSON bytes are a pure function of the contents.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub beta: String,
    pub n: u64,
    pub trials: u64,
    pub seed: u64,
    pub sigma2: f64,
    pub mean_m: f64,
    pub resamples: u64,
    pub verdict: String,
    pub summary: Value,
    pub config: ExperimentConfig,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }

    /// One-line stdout summary; every numeric equals its JSON form.
    pub fn stdout_line(&self) -> String {
        let mut line = format!(
            "{} beta={} n={} trials={} seed={} verdict={}",
            self.kind, self.beta, self.n, self.trials, self.seed, self.verdict
        );
        if let Value::Object(map) = &self.summary {
            for (k, v) in map {
                if let Some(x) = v.as_f64() {
                    line.push_str(&format!(" {}={}", k, json_num(x)));
                }
            }
        }
        line
    }
}

/// A per-trial table with a fixed header.
#[derive(Debug, Clone, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Column values parsed back as floats (for plotting).
    pub fn column_f64(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        let mut out = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            out.push(row.get(idx)?.parse::<f64>().ok()?);
        }
        Some(out)
    }
}

/// Output file paths of a persisted run.
#[derive(Debug, Clone)]
pub struct WrittenPaths {
    pub json: PathBuf,
    pub csv: PathBuf,
    pub svg: Option<PathBuf>,
}

fn sanitize(tag: &str) -> String {
    tag.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '-' })
        .collect()
}

/// Base name `{kind}_{beta}_{n}_{seed}`.
pub fn output_basename(report: &ExperimentReport) -> String {
    format!(
        "{}_{}_{}_{}",
        report.kind,
        sanitize(&report.beta),
        report.n,
        report.seed
    )
}

/// Persists JSON + CSV (+ SVG when requested) under `out_dir`.
pub fn write_outputs(
    out_dir: &Path,
    output: &super::RunOutput,
    plot: bool,
) -> Result<WrittenPaths, ExperimentError> {
    fs::create_dir_all(out_dir)?;
    let base = output_basename(&output.report);
    let json_path = out_dir.join(format!("{base}.json"));
    let csv_path = out_dir.join(format!("{base}.csv"));
    fs::write(&json_path, output.report.to_json())?;
    fs::write(&csv_path, output.table.to_csv())?;
    let svg = if plot {
        let svg_path = out_dir.join(format!("{base}.svg"));
        let svg_text = crate::plot::emit_plot(&output.report, &output.table)
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        fs::write(&svg_path, svg_text)?;
        Some(svg_path)
    } else {
        None
    };
    Ok(WrittenPaths {
        json: json_path,
        csv: csv_path,
        svg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_num_matches_serde_json() {
        for x in [0.1, 1.0, 0.03, 12.565, 1e-9] {
            assert_eq!(json_num(x), serde_json::to_string(&x).unwrap());
        }
        assert_eq!(json_num(f64::NAN), "null");
    }

    #[test]
    fn csv_round_trip() {
        let mut t = CsvTable::new(&["trial", "value"]);
        t.push(vec!["0".into(), json_num(0.5)]);
        t.push(vec!["1".into(), json_num(0.25)]);
        assert_eq!(t.to_csv(), "trial,value\n0,0.5\n1,0.25\n");
        assert_eq!(t.column_f64("value").unwrap(), vec![0.5, 0.25]);
    }

    #[test]
    fn basename_sanitizes_beta() {
        let report = ExperimentReport {
            kind: "ds".into(),
            beta: "5/2".into(),
            n: 100,
            trials: 10,
            seed: 7,
            sigma2: 0.0,
            mean_m: 0.0,
            resamples: 0,
            verdict: "PASS".into(),
            summary: serde_json::json!({}),
            config: super::super::ExperimentConfig::new(super::super::ExperimentKind::Ds),
        };
        assert_eq!(output_basename(&report), "ds_5-2_100_7");
    }
}
