//! Experiment runners.
//!
//! Every experiment walks a grid of cells (usually over `m`); within a cell,
//! trials run concurrently, each on seeds derived from the master seed and
//! the trial's global index, and the report is assembled in (cell, trial)
//! order.  A re-run with the same config is therefore byte-identical apart
//! from wall-clock columns, and any single row can be reproduced from its
//! recorded seed alone (see [`replay_trial`]).

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use std::time::Instant;

use crate::error::{AmpError, Result};
use crate::harness::config::{Experiment, ExperimentConfig, SolverChoice};
use crate::harness::report::{quantile, ExperimentReport, RipRow, TrialRow};
use crate::measurements::{
    chi_square_epsilon, make_noise, observe, sample_matrix, NoiseKind,
};
use crate::metrics::{lifted_dist, phase_dist};
use crate::rip::{estimate_rip_constants_with, witness_sample};
use crate::rng::{rng_from_seed, sub_seed, trial_seed};
use crate::solvers::{alternating_projection, amplitude_flow, SolverResult};
use crate::sparse_solvers::{feasibility_check, sparse_amplitude_flow, zero_solution_check, SparseConfig};

/// Labels for the per-trial sub-streams, so the matrix, signal, noise, and
/// probe draws never share a generator state.
pub const SUB_MATRIX: u64 = 0;
pub const SUB_SIGNAL: u64 = 1;
pub const SUB_NOISE: u64 = 2;
pub const SUB_PROBE: u64 = 3;

/// Run the experiment the config names.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match cfg.experiment {
        Experiment::ErrorScaling => run_error_scaling(cfg),
        Experiment::Sharpness => run_sharpness(cfg),
        Experiment::ZeroMean => run_zero_mean(cfg),
        Experiment::Sparse => run_sparse(cfg),
        Experiment::SparseSharpness => run_sparse_sharpness(cfg),
        Experiment::RipTable => run_rip_table(cfg),
        Experiment::Degenerate => run_degenerate(cfg),
    }
}

/// A unit-norm signal with independent complex-gaussian coordinates.
fn unit_signal(d: usize, seed: u64) -> DVector<Complex64> {
    let dist = crate::measurements::EntryDistribution::complex_gaussian();
    let mut rng = rng_from_seed(seed);
    loop {
        let x = DVector::from_iterator(d, (0..d).map(|_| dist.sample_one(&mut rng)));
        let n = x.norm();
        if n > 0.0 {
            return x / Complex64::new(n, 0.0);
        }
    }
}

/// A unit-norm `k`-sparse signal; returns the sorted support too.
fn sparse_unit_signal(d: usize, k: usize, seed: u64) -> (DVector<Complex64>, Vec<usize>) {
    let dist = crate::measurements::EntryDistribution::complex_gaussian();
    let mut rng = rng_from_seed(seed);
    let mut support = rand::seq::index::sample(&mut rng, d, k).into_vec();
    support.sort_unstable();
    loop {
        let mut x = DVector::from_element(d, Complex64::new(0.0, 0.0));
        for &i in &support {
            x[i] = dist.sample_one(&mut rng);
        }
        let n = x.norm();
        if n > 0.0 {
            return (x / Complex64::new(n, 0.0), support);
        }
    }
}

/// The `k` indices with the largest moduli, as a sorted set.
fn top_k_support(x: &DVector<Complex64>, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&p, &q| {
        x[q].norm()
            .partial_cmp(&x[p].norm())
            .expect("finite moduli")
            .then(p.cmp(&q))
    });
    order.truncate(k);
    order.sort_unstable();
    order
}

fn bool_col(v: bool) -> String {
    if v { "true".into() } else { "false".into() }
}

/// Noise radius column: the chi-square calibration at the configured sigma,
/// or 0 below the m >= 2 domain.
fn epsilon_col(m: usize, sigma: f64) -> f64 {
    if m >= 2 {
        chi_square_epsilon(m, sigma).unwrap_or(0.0)
    } else {
        0.0
    }
}

fn ratio_col(dist: f64, m: usize, eta_l2: f64) -> f64 {
    if eta_l2 > 0.0 {
        dist * (m as f64).sqrt() / eta_l2
    } else {
        0.0
    }
}

/// A row for a trial whose solve failed outright: metrics are NaN, the
/// converged flag is down, and the seed is kept for replay.
fn failure_row(cfg: &ExperimentConfig, m: usize, ti: usize, ts: u64) -> TrialRow {
    TrialRow {
        experiment: cfg.experiment.name().into(),
        trial: ti,
        m,
        d: cfg.d,
        k: cfg.k,
        ensemble: cfg.ensemble.kind.clone(),
        noise_kind: cfg.noise.kind.clone(),
        sigma: cfg.noise.sigma_param(),
        mu: cfg.noise.mu_param(),
        eta_l2: f64::NAN,
        eta_sum: f64::NAN,
        bias_ratio: f64::NAN,
        epsilon: epsilon_col(m, cfg.noise.sigma_param()),
        dist: f64::NAN,
        ratio: f64::NAN,
        lifted_dist: f64::NAN,
        iterations: 0,
        stationarity: f64::NAN,
        converged: false,
        wall_time_ms: 0.0,
        seed: ts,
        summary: String::new(),
        feasible: String::new(),
        support_ok: String::new(),
    }
}

/// One trial of the dense or sparse solver experiments.
fn try_solver_trial(
    cfg: &ExperimentConfig,
    m: usize,
    ti: usize,
    ts: u64,
) -> Result<TrialRow> {
    let dist = cfg.ensemble.to_distribution()?;
    let a = sample_matrix(&dist, m, cfg.d, sub_seed(ts, SUB_MATRIX))?;
    let sparse = cfg.experiment == Experiment::Sparse;
    let (x0, support) = if sparse {
        let (x, s) = sparse_unit_signal(cfg.d, cfg.k, sub_seed(ts, SUB_SIGNAL));
        (x, Some(s))
    } else {
        (unit_signal(cfg.d, sub_seed(ts, SUB_SIGNAL)), None)
    };
    let eta = make_noise(&cfg.noise.to_kind()?, m, sub_seed(ts, SUB_NOISE))?;
    let ms = observe(&a, &x0, &eta)?;
    let epsilon = epsilon_col(m, cfg.noise.sigma_param());

    let res: SolverResult = if sparse {
        let radius: f64 = x0.iter().map(|v| v.norm()).sum();
        let scfg = SparseConfig {
            base: cfg.solver_cfg.clone(),
            radius,
            epsilon,
            k: Some(cfg.k),
        };
        sparse_amplitude_flow(&a, &ms.b, &scfg, None)?
    } else {
        match cfg.solver {
            SolverChoice::AmplitudeFlow => amplitude_flow(&a, &ms.b, &cfg.solver_cfg, None)?,
            SolverChoice::AlternatingProjection => {
                alternating_projection(&a, &ms.b, &cfg.solver_cfg, None)?
            }
        }
    };

    let dist_val = phase_dist(&x0, &res.x)?;
    let lifted = lifted_dist(&x0, &res.x)?;
    let (feasible, support_ok) = if sparse {
        let (ok, _) = feasibility_check(&a, &ms.b, &res.x, epsilon)?;
        let hit = top_k_support(&res.x, cfg.k) == support.expect("sparse support");
        (bool_col(ok), bool_col(hit))
    } else {
        (String::new(), String::new())
    };

    Ok(TrialRow {
        experiment: cfg.experiment.name().into(),
        trial: ti,
        m,
        d: cfg.d,
        k: cfg.k,
        ensemble: a.ensemble.clone(),
        noise_kind: cfg.noise.kind.clone(),
        sigma: cfg.noise.sigma_param(),
        mu: cfg.noise.mu_param(),
        eta_l2: ms.noise_l2,
        eta_sum: ms.noise_sum,
        bias_ratio: ms.noise_bias_ratio,
        epsilon,
        dist: dist_val,
        ratio: ratio_col(dist_val, m, ms.noise_l2),
        lifted_dist: lifted,
        iterations: res.iterations,
        stationarity: res.stationarity,
        converged: res.converged,
        wall_time_ms: res.wall_time_ms,
        seed: ts,
        summary: String::new(),
        feasible,
        support_ok,
    })
}

fn solver_trial(cfg: &ExperimentConfig, m: usize, ti: usize, ts: u64) -> TrialRow {
    try_solver_trial(cfg, m, ti, ts).unwrap_or_else(|_| failure_row(cfg, m, ti, ts))
}

/// One seed of the fixed sharpness construction: `x0 = e1`, all-ones noise,
/// `eps = sqrt(8m)`.  No solver runs; the row records whether the zero
/// vector is feasible (in which case the l1-minimal point misses `x0` by
/// `||x0|| = 1`).
fn sparse_sharpness_trial(cfg: &ExperimentConfig, m: usize, ti: usize, ts: u64) -> Result<TrialRow> {
    let started = Instant::now();
    let dist = cfg.ensemble.to_distribution()?;
    let a = sample_matrix(&dist, m, cfg.d, sub_seed(ts, SUB_MATRIX))?;
    let mut x0 = DVector::from_element(cfg.d, Complex64::new(0.0, 0.0));
    x0[0] = Complex64::new(1.0, 0.0);
    let eta = make_noise(&cfg.noise.to_kind()?, m, sub_seed(ts, SUB_NOISE))?;
    let ms = observe(&a, &x0, &eta)?;
    let epsilon = (8.0 * m as f64).sqrt();
    let zero_ok = zero_solution_check(&ms.b, epsilon);
    let zero = DVector::from_element(cfg.d, Complex64::new(0.0, 0.0));
    let dist_val = phase_dist(&x0, &zero)?;
    Ok(TrialRow {
        experiment: cfg.experiment.name().into(),
        trial: ti,
        m,
        d: cfg.d,
        k: 1,
        ensemble: a.ensemble.clone(),
        noise_kind: cfg.noise.kind.clone(),
        sigma: cfg.noise.sigma_param(),
        mu: cfg.noise.mu_param(),
        eta_l2: ms.noise_l2,
        eta_sum: ms.noise_sum,
        bias_ratio: ms.noise_bias_ratio,
        epsilon,
        dist: dist_val,
        ratio: ratio_col(dist_val, m, ms.noise_l2),
        lifted_dist: lifted_dist(&x0, &zero)?,
        iterations: 0,
        stationarity: 0.0,
        converged: true,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        seed: ts,
        summary: String::new(),
        feasible: bool_col(zero_ok),
        support_ok: String::new(),
    })
}

/// One seed of the degeneracy check: compare the observations of `e1` and
/// `e2` bit for bit, then let the solver pick whichever it likes and record
/// the distance to the nearer basis vector.
fn degenerate_trial(cfg: &ExperimentConfig, m: usize, ti: usize, ts: u64) -> Result<TrialRow> {
    if cfg.d < 2 {
        return Err(AmpError::invalid("d", "the degeneracy check needs d >= 2"));
    }
    let dist = cfg.ensemble.to_distribution()?;
    let a = sample_matrix(&dist, m, cfg.d, sub_seed(ts, SUB_MATRIX))?;
    let mut e1 = DVector::from_element(cfg.d, Complex64::new(0.0, 0.0));
    let mut e2 = e1.clone();
    e1[0] = Complex64::new(1.0, 0.0);
    e2[1] = Complex64::new(1.0, 0.0);
    let eta = make_noise(&NoiseKind::Constant { value: 0.0 }, m, 0)?;
    let b1 = observe(&a, &e1, &eta)?;
    let b2 = observe(&a, &e2, &eta)?;
    let equal = b1
        .b
        .iter()
        .zip(b2.b.iter())
        .all(|(p, q)| p.to_bits() == q.to_bits());

    let res = amplitude_flow(&a, &b1.b, &cfg.solver_cfg, None)?;
    let d1 = phase_dist(&res.x, &e1)?;
    let d2 = phase_dist(&res.x, &e2)?;
    let l1 = lifted_dist(&res.x, &e1)?;
    let l2 = lifted_dist(&res.x, &e2)?;
    Ok(TrialRow {
        experiment: cfg.experiment.name().into(),
        trial: ti,
        m,
        d: cfg.d,
        k: 0,
        ensemble: a.ensemble.clone(),
        noise_kind: "none".into(),
        sigma: 0.0,
        mu: 0.0,
        eta_l2: 0.0,
        eta_sum: 0.0,
        bias_ratio: 0.0,
        epsilon: 0.0,
        dist: d1.min(d2),
        ratio: 0.0,
        lifted_dist: l1.min(l2),
        iterations: res.iterations,
        stationarity: res.stationarity,
        converged: res.converged,
        wall_time_ms: res.wall_time_ms,
        seed: ts,
        summary: String::new(),
        feasible: bool_col(equal),
        support_ok: String::new(),
    })
}

/// Re-run a single trial from its recorded seed; reproduces the row's
/// non-timing columns exactly.  `m` and `ti` come from the row.
pub fn replay_trial(cfg: &ExperimentConfig, m: usize, ti: usize, ts: u64) -> Result<TrialRow> {
    match cfg.experiment {
        Experiment::RipTable => Err(AmpError::invalid(
            "experiment",
            "rip-table rows are per-cell, not per-trial",
        )),
        Experiment::SparseSharpness => sparse_sharpness_trial(cfg, m, ti, ts),
        Experiment::Degenerate => degenerate_trial(cfg, m, ti, ts),
        _ => Ok(solver_trial(cfg, m, ti, ts)),
    }
}

/// Quantile summary rows for one cell.
fn quantile_rows(template: &TrialRow, dists: &[f64], ratios: &[f64]) -> Vec<TrialRow> {
    [("median", 0.5), ("q05", 0.05), ("q95", 0.95)]
        .iter()
        .map(|(kind, p)| {
            TrialRow::summary_from(template, kind, quantile(dists, *p), quantile(ratios, *p))
        })
        .collect()
}

/// Fraction of rows whose flag column reads "true".
fn rate(rows: &[TrialRow], col: fn(&TrialRow) -> &str) -> f64 {
    rows.iter().filter(|r| col(r) == "true").count() as f64 / rows.len() as f64
}

/// Shared body of the dense-solver experiments: one cell per `m`, quantile
/// summaries per cell, plus experiment-specific extras.
fn run_cells(
    cfg: &ExperimentConfig,
    trial: fn(&ExperimentConfig, usize, usize, u64) -> Result<TrialRow>,
) -> Result<Vec<TrialRow>> {
    let mut rows = Vec::new();
    for (ci, &m) in cfg.m_list.iter().enumerate() {
        let cell: Vec<TrialRow> = (0..cfg.trials)
            .into_par_iter()
            .map(|ti| {
                let ts = trial_seed(cfg.seed, (ci * cfg.trials + ti) as u64);
                trial(cfg, m, ti, ts).unwrap_or_else(|_| failure_row(cfg, m, ti, ts))
            })
            .collect();
        let dists: Vec<f64> = cell.iter().map(|r| r.dist).collect();
        let ratios: Vec<f64> = cell.iter().map(|r| r.ratio).collect();
        let mut summaries = quantile_rows(&cell[0], &dists, &ratios);
        match cfg.experiment {
            Experiment::Sparse => {
                summaries.push(TrialRow::summary_from(
                    &cell[0],
                    "feasible-rate",
                    rate(&cell, |r| &r.feasible),
                    0.0,
                ));
                summaries.push(TrialRow::summary_from(
                    &cell[0],
                    "support-rate",
                    rate(&cell, |r| &r.support_ok),
                    0.0,
                ));
            }
            Experiment::SparseSharpness => {
                summaries.push(TrialRow::summary_from(
                    &cell[0],
                    "zero-feasible-rate",
                    rate(&cell, |r| &r.feasible),
                    0.0,
                ));
            }
            Experiment::Degenerate => {
                summaries.push(TrialRow::summary_from(
                    &cell[0],
                    "equal-rate",
                    rate(&cell, |r| &r.feasible),
                    0.0,
                ));
            }
            Experiment::ZeroMean => {
                // Theoretical error model at this cell, for side-by-side
                // reading: sqrt(d ln m / m) sigma max(||x0||, same).
                let sigma = cfg.noise.sigma_param();
                let s = (cfg.d as f64 * (m as f64).ln() / m as f64).sqrt() * sigma;
                summaries.push(TrialRow::summary_from(&cell[0], "model", s * s.max(1.0), 0.0));
            }
            _ => {}
        }
        rows.extend(cell);
        rows.extend(summaries);
    }
    Ok(rows)
}

fn solver_trial_res(cfg: &ExperimentConfig, m: usize, ti: usize, ts: u64) -> Result<TrialRow> {
    Ok(solver_trial(cfg, m, ti, ts))
}

pub fn run_error_scaling(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let rows = run_cells(cfg, solver_trial_res)?;
    Ok(ExperimentReport::from_trials(cfg.experiment.name(), rows))
}

pub fn run_sharpness(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let rows = run_cells(cfg, solver_trial_res)?;
    Ok(ExperimentReport::from_trials(cfg.experiment.name(), rows))
}

pub fn run_zero_mean(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut rows = run_cells(cfg, solver_trial_res)?;
    // Log-log regression of median dist against m across cells, reported as
    // one grid-wide summary row (m = 0 marks it as global).
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.summary == "median" && r.dist.is_finite() && r.dist > 0.0)
        .map(|r| ((r.m as f64).ln(), r.dist.ln()))
        .collect();
    if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let template = rows[0].clone();
        let mut slope_row = TrialRow::summary_from(&template, "slope", sxy / sxx, 0.0);
        slope_row.m = 0;
        rows.push(slope_row);
    }
    Ok(ExperimentReport::from_trials(cfg.experiment.name(), rows))
}

pub fn run_sparse(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let rows = run_cells(cfg, solver_trial_res)?;
    Ok(ExperimentReport::from_trials(cfg.experiment.name(), rows))
}

pub fn run_sparse_sharpness(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let rows = run_cells(cfg, sparse_sharpness_trial)?;
    Ok(ExperimentReport::from_trials(cfg.experiment.name(), rows))
}

pub fn run_degenerate(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let rows = run_cells(cfg, degenerate_trial)?;
    Ok(ExperimentReport::from_trials(cfg.experiment.name(), rows))
}

/// One row per (ensemble, k, m, repeat) cell; probes within a cell run
/// concurrently inside the estimator.
pub fn run_rip_table(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut rows = Vec::new();
    let mut ci = 0usize;
    for ens in &cfg.ensembles {
        let dist = ens.to_distribution()?;
        for &k in &cfg.k_list {
            for &m in &cfg.m_list {
                for _rep in 0..cfg.repeats {
                    let started = Instant::now();
                    let cell_seed = trial_seed(cfg.seed, ci as u64);
                    let a = sample_matrix(&dist, m, cfg.d, sub_seed(cell_seed, SUB_MATRIX))?;
                    let extras = if cfg.witness && cfg.d >= 2 {
                        vec![witness_sample(cfg.d)?]
                    } else {
                        Vec::new()
                    };
                    let est = estimate_rip_constants_with(
                        &a,
                        k,
                        cfg.trials,
                        cfg.beta0,
                        sub_seed(cell_seed, SUB_PROBE),
                        &extras,
                    )?;
                    let counts: Vec<String> =
                        est.histogram.counts.iter().map(|c| c.to_string()).collect();
                    rows.push(RipRow {
                        experiment: cfg.experiment.name().into(),
                        cell: ci,
                        ensemble: a.ensemble.clone(),
                        d: cfg.d,
                        k,
                        m,
                        beta0: cfg.beta0,
                        trials: est.trials,
                        witness: !extras.is_empty(),
                        c_minus: est.c_minus,
                        c_plus: est.c_plus,
                        strong_c_minus: est.strong_c_minus,
                        hist_lo: est.histogram.lo,
                        hist_hi: est.histogram.hi,
                        hist_counts: counts.join(" "),
                        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
                        seed: cell_seed,
                    });
                    ci += 1;
                }
            }
        }
    }
    Ok(ExperimentReport::from_rip(cfg.experiment.name(), rows))
}
