//! Persisted run artifacts: `capacity.csv`, `run.meta` and the optional
//! plot script.
//!
//! `capacity.csv` is UTF-8 with LF line endings and the header
//! `scheme,snr_db,mean_capacity_bps_hz,std_capacity_bps_hz,trials`. Floats
//! use 9 significant digits in C `%.9g` style; rows are sorted by scheme name
//! and then by SNR.

use thiserror::Error;

use crate::config::RunConfig;
use crate::eval::{CampaignReport, CapacityCurve, Scheme};

pub const CSV_HEADER: &str = "scheme,snr_db,mean_capacity_bps_hz,std_capacity_bps_hz,trials";
pub const CSV_FILE: &str = "capacity.csv";
pub const META_FILE: &str = "run.meta";
pub const PLOT_FILE: &str = "plot.script";

#[derive(Debug, Clone, PartialEq, Error)]
#[error("capacity.csv line {line}: {msg}")]
pub struct CsvError {
    pub line: usize,
    pub msg: String,
}

/// Formats `x` like C's `%.{digits}g`.
pub fn format_sig(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_fraction(mantissa), sign, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn fmt9(x: f64) -> String {
    format_sig(x, 9)
}

/// One data row of `capacity.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub scheme: Scheme,
    pub snr_db: f64,
    pub mean: f64,
    pub std: f64,
    pub trials: usize,
}

pub fn capacity_rows(curves: &[CapacityCurve]) -> Vec<CsvRow> {
    let mut rows: Vec<CsvRow> = curves
        .iter()
        .flat_map(|c| {
            c.points.iter().map(move |p| CsvRow {
                scheme: c.scheme,
                snr_db: p.snr_db,
                mean: p.mean,
                std: p.std,
                trials: p.trials,
            })
        })
        .collect();
    rows.sort_by(|a, b| a.scheme.cmp(&b.scheme).then(a.snr_db.total_cmp(&b.snr_db)));
    rows
}

pub fn write_capacity_csv(rows: &[CsvRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.scheme.as_str(),
            fmt9(r.snr_db),
            fmt9(r.mean),
            fmt9(r.std),
            r.trials
        ));
    }
    out
}

pub fn capacity_csv(curves: &[CapacityCurve]) -> String {
    write_capacity_csv(&capacity_rows(curves))
}

/// Parses a `capacity.csv` document.
pub fn parse_capacity_csv(text: &str) -> Result<Vec<CsvRow>, CsvError> {
    let body = text
        .strip_suffix('\n')
        .ok_or_else(|| CsvError { line: text.lines().count().max(1), msg: "missing final newline".into() })?;
    let mut lines = body.split('\n');
    if lines.next() != Some(CSV_HEADER) {
        return Err(CsvError { line: 1, msg: "missing or unexpected header".into() });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let err = |msg: String| CsvError { line: line_no, msg };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(err(format!("expected 5 fields, got {}", fields.len())));
        }
        let scheme: Scheme = fields[0].parse().map_err(|e: crate::Error| err(e.to_string()))?;
        let num = |s: &str| -> Result<f64, CsvError> {
            s.parse::<f64>().map_err(|_| err(format!("'{s}' is not a number")))
        };
        rows.push(CsvRow {
            scheme,
            snr_db: num(fields[1])?,
            mean: num(fields[2])?,
            std: num(fields[3])?,
            trials: fields[4].parse().map_err(|_| err(format!("'{}' is not a count", fields[4])))?,
        });
    }
    Ok(rows)
}

/// `run.meta`: the full configuration as `key=value` lines (loadable with
/// `--config`), preceded by comment lines with the tool version and trial
/// accounting.
pub fn run_meta(config: &RunConfig, report: &CampaignReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("# prmimo {}\n", env!("CARGO_PKG_VERSION")));
    out.push_str(&format!("# master-seed={}\n", config.seed));
    out.push_str(&format!("# trials-completed={}\n", report.outcomes.len()));
    out.push_str(&format!("# trials-failed={}\n", report.failures.len()));
    let fallbacks: usize = report.outcomes.iter().map(|o| o.fallbacks).sum();
    out.push_str(&format!("# safeguard-fallbacks={fallbacks}\n"));
    for (k, v) in config.to_key_values() {
        out.push_str(&format!("{k}={v}\n"));
    }
    out
}

/// Self-contained matplotlib script that plots `capacity.csv` from its own
/// directory into `capacity.png`.
pub const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Plot capacity versus SNR from capacity.csv (written by prmimo)."""
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
src = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, "capacity.csv")
dst = sys.argv[2] if len(sys.argv) > 2 else os.path.join(here, "capacity.png")

curves = {}
with open(src, newline="") as f:
    for row in csv.DictReader(f):
        pts = curves.setdefault(row["scheme"], ([], [], []))
        pts[0].append(float(row["snr_db"]))
        pts[1].append(float(row["mean_capacity_bps_hz"]))
        pts[2].append(float(row["std_capacity_bps_hz"]))

styles = {"ideal": "k--", "pattern": "o-", "physical": "s-"}
fig, ax = plt.subplots(figsize=(6, 4.5))
for scheme, (snr, mean, std) in sorted(curves.items()):
    ax.plot(snr, mean, styles.get(scheme, "-"), label=scheme)
ax.set_xlabel("Transmit SNR (dB)")
ax.set_ylabel("Capacity (bits/s/Hz)")
ax.grid(True, alpha=0.4)
ax.legend()
fig.tight_layout()
fig.savefig(dst, dpi=150)
print(dst)
"#;
