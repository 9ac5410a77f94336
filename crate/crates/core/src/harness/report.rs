//! Report rows and CSV emission.
//!
//! Trial-based experiments share one fixed schema; per-cell summary rows
//! ride along in the same file, flagged by the `summary` column, with the
//! summarized quantity in `dist` (and, for quantile rows, `ratio`).  The
//! rip-table experiment reports per-cell estimates and gets its own schema.
//! Floats are written in shortest round-trip form, so re-running a config
//! reproduces the file byte for byte (timing column aside).

use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

use crate::error::{AmpError, Result};

/// One solver trial (or one summary line when `summary` is non-empty).
///
/// `ratio` is `dist * sqrt(m) / ||eta||_2`, the quantity the error bounds
/// sandwich; it is written as 0 for noiseless rows.  `feasible` and
/// `support_ok` are `true`/`false` where they apply and empty otherwise
/// (the degenerate experiment reuses `feasible` for its bit-equality flag).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrialRow {
    pub experiment: String,
    pub trial: usize,
    pub m: usize,
    pub d: usize,
    pub k: usize,
    pub ensemble: String,
    pub noise_kind: String,
    pub sigma: f64,
    pub mu: f64,
    pub eta_l2: f64,
    pub eta_sum: f64,
    pub bias_ratio: f64,
    pub epsilon: f64,
    pub dist: f64,
    pub ratio: f64,
    pub lifted_dist: f64,
    pub iterations: usize,
    pub stationarity: f64,
    pub converged: bool,
    pub wall_time_ms: f64,
    pub seed: u64,
    pub summary: String,
    pub feasible: String,
    pub support_ok: String,
}

impl TrialRow {
    /// A summary row carrying `dist`/`ratio` aggregates for one cell,
    /// copying the cell's identifying columns from a template trial row.
    pub fn summary_from(template: &TrialRow, kind: &str, dist: f64, ratio: f64) -> TrialRow {
        TrialRow {
            trial: 0,
            dist,
            ratio,
            lifted_dist: 0.0,
            iterations: 0,
            stationarity: 0.0,
            converged: true,
            wall_time_ms: 0.0,
            seed: 0,
            summary: kind.to_string(),
            feasible: String::new(),
            support_ok: String::new(),
            eta_l2: 0.0,
            eta_sum: 0.0,
            bias_ratio: 0.0,
            ..template.clone()
        }
    }
}

/// One rip-table cell.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RipRow {
    pub experiment: String,
    pub cell: usize,
    pub ensemble: String,
    pub d: usize,
    pub k: usize,
    pub m: usize,
    pub beta0: f64,
    pub trials: usize,
    pub witness: bool,
    pub c_minus: f64,
    pub c_plus: f64,
    pub strong_c_minus: f64,
    pub hist_lo: f64,
    pub hist_hi: f64,
    /// Space-separated 50-bin counts over `[hist_lo, hist_hi]`.
    pub hist_counts: String,
    pub wall_time_ms: f64,
    pub seed: u64,
}

/// Full output of one experiment run; exactly one of the row vectors is
/// populated.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub experiment: String,
    pub rows: Vec<TrialRow>,
    pub rip_rows: Vec<RipRow>,
}

impl ExperimentReport {
    pub fn from_trials(experiment: &str, rows: Vec<TrialRow>) -> Self {
        ExperimentReport {
            experiment: experiment.to_string(),
            rows,
            rip_rows: Vec::new(),
        }
    }

    pub fn from_rip(experiment: &str, rip_rows: Vec<RipRow>) -> Self {
        ExperimentReport {
            experiment: experiment.to_string(),
            rows: Vec::new(),
            rip_rows,
        }
    }

    /// Trial rows only (summary lines excluded).
    pub fn trial_rows(&self) -> impl Iterator<Item = &TrialRow> {
        self.rows.iter().filter(|r| r.summary.is_empty())
    }

    /// Summary rows of one kind.
    pub fn summaries<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a TrialRow> + 'a {
        self.rows.iter().filter(move |r| r.summary == kind)
    }

    /// The whole report as one CSV document.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.rip_rows.is_empty() {
            for row in &self.rows {
                w.serialize(row)?;
            }
        } else {
            for row in &self.rip_rows {
                w.serialize(row)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| AmpError::Config(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| AmpError::Config(e.to_string()))
    }

    /// Per-cell `(x, median, q05, q95)` table ready for plotting: `x` is `m`
    /// for trial experiments and the cell index for rip tables (where the
    /// columns carry `c_minus`, `strong_c_minus`, `c_plus`).
    pub fn plot_data(&self) -> String {
        let mut out = String::from("x,median,q05,q95\n");
        if self.rip_rows.is_empty() {
            let med: Vec<&TrialRow> = self.summaries("median").collect();
            let q05: Vec<&TrialRow> = self.summaries("q05").collect();
            let q95: Vec<&TrialRow> = self.summaries("q95").collect();
            for ((m, lo), hi) in med.iter().zip(q05.iter()).zip(q95.iter()) {
                out.push_str(&format!("{},{},{},{}\n", m.m, m.dist, lo.dist, hi.dist));
            }
        } else {
            for r in &self.rip_rows {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    r.cell, r.c_minus, r.strong_c_minus, r.c_plus
                ));
            }
        }
        out
    }
}

/// Write the report CSV (and nothing else) to `path`.
pub fn write_report(report: &ExperimentReport, path: &Path) -> Result<()> {
    fs::write(path, report.to_csv()?)?;
    Ok(())
}

/// Parse a trial-schema CSV back into rows.
pub fn read_trial_rows(path: &Path) -> Result<Vec<TrialRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

/// Parse a rip-schema CSV back into rows.
pub fn read_rip_rows(path: &Path) -> Result<Vec<RipRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

/// Linear-interpolation quantile (the `h = (n-1)p` convention).
/// Non-finite values are ignored; empty input gives NaN.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut xs: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let p = p.clamp(0.0, 1.0);
    let h = (xs.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        xs[lo]
    } else {
        xs[lo] + (h - lo as f64) * (xs[hi] - xs[lo])
    }
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}
