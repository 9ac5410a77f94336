//! Experiment configuration: JSON schema, per-experiment defaults, and
//! validation.
//!
//! Config files are strict: unknown keys are rejected and every diagnostic
//! names the offending field.  Fields left out of the file fall back to the
//! experiment's defaults, so a bare `{"experiment": "error-scaling"}` is a
//! complete config.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use crate::error::{AmpError, Result};
use crate::measurements::{EntryDistribution, NoiseKind};
use crate::solvers::SolverConfig;

/// The experiments the harness knows how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    ErrorScaling,
    Sharpness,
    ZeroMean,
    Sparse,
    SparseSharpness,
    RipTable,
    Degenerate,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::ErrorScaling => "error-scaling",
            Experiment::Sharpness => "sharpness",
            Experiment::ZeroMean => "zero-mean",
            Experiment::Sparse => "sparse",
            Experiment::SparseSharpness => "sparse-sharpness",
            Experiment::RipTable => "rip-table",
            Experiment::Degenerate => "degenerate",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "error-scaling" => Experiment::ErrorScaling,
            "sharpness" => Experiment::Sharpness,
            "zero-mean" => Experiment::ZeroMean,
            "sparse" => Experiment::Sparse,
            "sparse-sharpness" => Experiment::SparseSharpness,
            "rip-table" => Experiment::RipTable,
            "degenerate" => Experiment::Degenerate,
            other => {
                return Err(AmpError::Config(format!(
                    "experiment: unknown experiment {other:?} (expected one of error-scaling, \
                     sharpness, zero-mean, sparse, sparse-sharpness, rip-table, degenerate)"
                )))
            }
        })
    }
}

/// Measurement-ensemble choice as it appears in config files.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
}

impl EnsembleSpec {
    pub fn gaussian() -> Self {
        EnsembleSpec {
            kind: "complex-gaussian".into(),
            p: None,
            atoms: None,
            probs: None,
        }
    }

    pub fn rademacher() -> Self {
        EnsembleSpec {
            kind: "complex-rademacher".into(),
            p: None,
            atoms: None,
            probs: None,
        }
    }

    pub fn ternary(p: f64) -> Self {
        EnsembleSpec {
            kind: "ternary".into(),
            p: Some(p),
            atoms: None,
            probs: None,
        }
    }

    pub fn to_distribution(&self) -> Result<EntryDistribution> {
        let no = |field: &'static str, kind: &str| -> Result<()> {
            Err(AmpError::Config(format!(
                "ensemble.{field}: does not apply to ensemble kind {kind:?}"
            )))
        };
        match self.kind.as_str() {
            "complex-gaussian" | "complex-rademacher" => {
                if self.p.is_some() {
                    no("p", &self.kind)?;
                }
                if self.atoms.is_some() {
                    no("atoms", &self.kind)?;
                }
                if self.probs.is_some() {
                    no("probs", &self.kind)?;
                }
                Ok(if self.kind == "complex-gaussian" {
                    EntryDistribution::complex_gaussian()
                } else {
                    EntryDistribution::complex_rademacher()
                })
            }
            "ternary" => {
                if self.atoms.is_some() {
                    no("atoms", "ternary")?;
                }
                if self.probs.is_some() {
                    no("probs", "ternary")?;
                }
                let p = self.p.ok_or_else(|| {
                    AmpError::Config("ensemble.p: required for the ternary ensemble".into())
                })?;
                EntryDistribution::ternary(p)
            }
            "custom-discrete" => {
                if self.p.is_some() {
                    no("p", "custom-discrete")?;
                }
                let atoms = self.atoms.as_ref().ok_or_else(|| {
                    AmpError::Config("ensemble.atoms: required for custom-discrete".into())
                })?;
                let probs = self.probs.as_ref().ok_or_else(|| {
                    AmpError::Config("ensemble.probs: required for custom-discrete".into())
                })?;
                let atoms = atoms
                    .iter()
                    .map(|&[re, im]| num_complex::Complex64::new(re, im))
                    .collect();
                EntryDistribution::custom_discrete(atoms, probs.clone())
            }
            other => Err(AmpError::Config(format!(
                "ensemble.kind: unknown kind {other:?} (expected complex-gaussian, ternary, \
                 complex-rademacher, or custom-discrete)"
            ))),
        }
    }
}

/// Noise model as it appears in config files.  `mu` is the deterministic
/// shift (the mean of shifted-gaussian noise, or the constant's value).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            kind: "none".into(),
            sigma: None,
            mu: None,
            value: None,
            values: None,
        }
    }

    pub fn constant(value: f64) -> Self {
        NoiseSpec {
            value: Some(value),
            kind: "constant".into(),
            ..NoiseSpec::none()
        }
    }

    pub fn zero_mean(sigma: f64) -> Self {
        NoiseSpec {
            sigma: Some(sigma),
            kind: "zero-mean-gaussian".into(),
            ..NoiseSpec::none()
        }
    }

    pub fn to_kind(&self) -> Result<NoiseKind> {
        let no = |field: &'static str, kind: &str| -> Result<()> {
            Err(AmpError::Config(format!(
                "noise.{field}: does not apply to noise kind {kind:?}"
            )))
        };
        let need = |field: &'static str, v: Option<f64>| -> Result<f64> {
            v.ok_or_else(|| AmpError::Config(format!("noise.{field}: required for this noise kind")))
        };
        match self.kind.as_str() {
            "none" => {
                for (f, set) in [
                    ("sigma", self.sigma.is_some()),
                    ("mu", self.mu.is_some()),
                    ("value", self.value.is_some()),
                    ("values", self.values.is_some()),
                ] {
                    if set {
                        no(f, "none")?;
                    }
                }
                Ok(NoiseKind::Constant { value: 0.0 })
            }
            "zero-mean-gaussian" => {
                if self.mu.is_some() {
                    no("mu", &self.kind)?;
                }
                if self.value.is_some() {
                    no("value", &self.kind)?;
                }
                if self.values.is_some() {
                    no("values", &self.kind)?;
                }
                Ok(NoiseKind::ZeroMeanGaussian {
                    sigma: need("sigma", self.sigma)?,
                })
            }
            "shifted-gaussian" => {
                if self.value.is_some() {
                    no("value", &self.kind)?;
                }
                if self.values.is_some() {
                    no("values", &self.kind)?;
                }
                Ok(NoiseKind::ShiftedGaussian {
                    mu: need("mu", self.mu)?,
                    sigma: need("sigma", self.sigma)?,
                })
            }
            "constant" => {
                if self.sigma.is_some() {
                    no("sigma", &self.kind)?;
                }
                if self.mu.is_some() {
                    no("mu", &self.kind)?;
                }
                if self.values.is_some() {
                    no("values", &self.kind)?;
                }
                Ok(NoiseKind::Constant {
                    value: need("value", self.value)?,
                })
            }
            "explicit" => {
                if self.sigma.is_some() {
                    no("sigma", &self.kind)?;
                }
                if self.mu.is_some() {
                    no("mu", &self.kind)?;
                }
                if self.value.is_some() {
                    no("value", &self.kind)?;
                }
                let values = self.values.clone().ok_or_else(|| {
                    AmpError::Config("noise.values: required for explicit noise".into())
                })?;
                Ok(NoiseKind::Explicit { values })
            }
            other => Err(AmpError::Config(format!(
                "noise.kind: unknown kind {other:?} (expected none, zero-mean-gaussian, \
                 shifted-gaussian, constant, or explicit)"
            ))),
        }
    }

    /// Gaussian standard deviation, 0 for deterministic kinds.
    pub fn sigma_param(&self) -> f64 {
        self.sigma.unwrap_or(0.0)
    }

    /// Deterministic shift: the shifted-gaussian mean or the constant value.
    pub fn mu_param(&self) -> f64 {
        match self.kind.as_str() {
            "constant" => self.value.unwrap_or(0.0),
            _ => self.mu.unwrap_or(0.0),
        }
    }
}

/// Solver selection for the dense experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    AmplitudeFlow,
    AlternatingProjection,
}

impl SolverChoice {
    pub fn name(self) -> &'static str {
        match self {
            SolverChoice::AmplitudeFlow => "amplitude-flow",
            SolverChoice::AlternatingProjection => "alternating-projection",
        }
    }

    fn from_name(name: &str) -> Result<Self> {
        match name {
            "amplitude-flow" => Ok(SolverChoice::AmplitudeFlow),
            "alternating-projection" => Ok(SolverChoice::AlternatingProjection),
            other => Err(AmpError::Config(format!(
                "solver: unknown solver {other:?} (expected amplitude-flow or \
                 alternating-projection)"
            ))),
        }
    }
}

/// On-disk config document.  Everything except `experiment` is optional and
/// falls back to the experiment's defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensembles: Option<Vec<EnsembleSpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_rel_change: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trunc_gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oversampling: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeats: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<bool>,
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ConfigFile = serde_json::from_str(text)
            .map_err(|e| AmpError::Config(format!("config: {e}")))?;
        if file.experiment.is_none() {
            return Err(AmpError::Config("config: missing field `experiment`".into()));
        }
        Ok(file)
    }
}

/// Fully resolved experiment parameters.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub ensemble: EnsembleSpec,
    /// Ensemble grid; only the rip-table experiment uses more than one.
    pub ensembles: Vec<EnsembleSpec>,
    pub d: usize,
    pub m_list: Vec<usize>,
    /// Sparsity of the planted signal (sparse experiment only).
    pub k: usize,
    /// Support-size grid for the rip-table experiment.
    pub k_list: Vec<usize>,
    pub noise: NoiseSpec,
    pub solver: SolverChoice,
    pub solver_cfg: SolverConfig,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// `c` in the sparse default `m = ceil(c k ln(e d / k))`.
    pub oversampling: f64,
    pub beta0: f64,
    /// Independent matrix draws per rip-table cell.
    pub repeats: usize,
    /// Inject the rank-two cancellation witness into every rip-table cell.
    pub witness: bool,
}

impl ExperimentConfig {
    /// Baseline parameters for each experiment, sized so a default run
    /// reproduces the corresponding claim at desk scale.
    pub fn defaults_for(experiment: Experiment) -> Self {
        let base = ExperimentConfig {
            experiment,
            ensemble: EnsembleSpec::gaussian(),
            ensembles: vec![EnsembleSpec::gaussian()],
            d: 16,
            m_list: vec![],
            k: 0,
            k_list: vec![16],
            noise: NoiseSpec::none(),
            solver: SolverChoice::AmplitudeFlow,
            solver_cfg: SolverConfig::default(),
            trials: 100,
            seed: 7,
            out: None,
            oversampling: 8.0,
            beta0: 0.25,
            repeats: 5,
            witness: true,
        };
        match experiment {
            Experiment::ErrorScaling => ExperimentConfig {
                m_list: vec![128, 256, 512, 1024, 2048],
                noise: NoiseSpec::constant(0.05),
                ..base
            },
            Experiment::Sharpness => ExperimentConfig {
                m_list: vec![1024],
                noise: NoiseSpec::constant(0.05),
                trials: 200,
                ..base
            },
            Experiment::ZeroMean => ExperimentConfig {
                m_list: vec![256, 512, 1024, 2048, 4096, 8192],
                noise: NoiseSpec::zero_mean(0.1),
                ..base
            },
            Experiment::Sparse => ExperimentConfig {
                d: 256,
                k: 8,
                // m defaults to ceil(oversampling * k * ln(e d / k)),
                // resolved after overrides land.
                m_list: vec![],
                noise: NoiseSpec::zero_mean(0.01),
                ..base
            },
            Experiment::SparseSharpness => ExperimentConfig {
                m_list: vec![1000],
                noise: NoiseSpec::constant(1.0),
                trials: 200,
                ..base
            },
            Experiment::RipTable => ExperimentConfig {
                m_list: vec![640],
                k_list: vec![16],
                ensembles: vec![
                    EnsembleSpec::gaussian(),
                    EnsembleSpec::ternary(0.45),
                    EnsembleSpec::ternary(0.25),
                    EnsembleSpec::ternary(0.1),
                    EnsembleSpec::rademacher(),
                ],
                trials: 2000,
                ..base
            },
            Experiment::Degenerate => ExperimentConfig {
                ensemble: EnsembleSpec::rademacher(),
                d: 4,
                m_list: vec![32],
                ..base
            },
        }
    }

    /// Layer a config file over the defaults, then CLI overrides on top.
    pub fn resolve(
        experiment: Experiment,
        file: Option<&ConfigFile>,
        seed: Option<u64>,
        trials: Option<usize>,
        out: Option<PathBuf>,
    ) -> Result<(Self, Vec<String>)> {
        let mut cfg = Self::defaults_for(experiment);
        if let Some(f) = file {
            if let Some(name) = &f.experiment {
                let named = Experiment::from_name(name)?;
                if named != experiment {
                    return Err(AmpError::Config(format!(
                        "experiment: config file is for {:?} but the {:?} experiment was \
                         requested",
                        name,
                        experiment.name()
                    )));
                }
            }
            if let Some(v) = &f.ensemble {
                cfg.ensemble = v.clone();
                cfg.ensembles = vec![v.clone()];
            }
            if let Some(v) = &f.ensembles {
                cfg.ensembles = v.clone();
            }
            if let Some(v) = f.d {
                cfg.d = v;
            }
            if let Some(v) = f.m {
                cfg.m_list = vec![v];
            }
            if let Some(v) = &f.m_list {
                cfg.m_list = v.clone();
            }
            if let Some(v) = f.k {
                cfg.k = v;
            }
            if let Some(v) = &f.k_list {
                cfg.k_list = v.clone();
            }
            if let Some(v) = &f.noise {
                cfg.noise = v.clone();
            }
            if let Some(v) = &f.solver {
                cfg.solver = SolverChoice::from_name(v)?;
            }
            if let Some(v) = f.step {
                cfg.solver_cfg.step = v;
            }
            if let Some(v) = f.max_iters {
                cfg.solver_cfg.max_iters = v;
            }
            if let Some(v) = f.tol_rel_change {
                cfg.solver_cfg.tol_rel_change = v;
            }
            if let Some(v) = f.trunc_gamma {
                cfg.solver_cfg.trunc_gamma = v;
            }
            if let Some(v) = f.power_iters {
                cfg.solver_cfg.power_iters = v;
            }
            if let Some(v) = f.trials {
                cfg.trials = v;
            }
            if let Some(v) = f.seed {
                cfg.seed = v;
            }
            if let Some(v) = &f.out {
                cfg.out = Some(PathBuf::from(v));
            }
            if let Some(v) = f.oversampling {
                cfg.oversampling = v;
            }
            if let Some(v) = f.beta0 {
                cfg.beta0 = v;
            }
            if let Some(v) = f.repeats {
                cfg.repeats = v;
            }
            if let Some(v) = f.witness {
                cfg.witness = v;
            }
        }
        if let Some(v) = seed {
            cfg.seed = v;
        }
        if let Some(v) = trials {
            cfg.trials = v;
        }
        if let Some(v) = out {
            cfg.out = Some(v);
        }
        if cfg.m_list.is_empty() && experiment == Experiment::Sparse {
            cfg.m_list = vec![default_sparse_m(cfg.d, cfg.k, cfg.oversampling)?];
        }
        let warnings = cfg.validate()?;
        Ok((cfg, warnings))
    }

    /// Check every field, naming the offender in the error; returns
    /// non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if self.trials < 1 {
            return Err(AmpError::Config(format!(
                "trials: need at least 1, got {}",
                self.trials
            )));
        }
        if self.d < 1 {
            return Err(AmpError::Config("d: need at least 1".into()));
        }
        if self.m_list.is_empty() {
            return Err(AmpError::Config("m_list: need at least one cell".into()));
        }
        if let Some(&m) = self.m_list.iter().find(|&&m| m < 1) {
            return Err(AmpError::Config(format!("m_list: grid values must be >= 1, got {m}")));
        }
        self.ensemble.to_distribution()?;
        for e in &self.ensembles {
            e.to_distribution()?;
        }
        self.noise.to_kind()?;
        self.solver_cfg.validate()?;
        match self.experiment {
            Experiment::Sparse => {
                if self.k < 1 || self.k > self.d {
                    return Err(AmpError::Config(format!(
                        "k: need 1 <= k <= d = {}, got {}",
                        self.d, self.k
                    )));
                }
                if !(self.oversampling > 0.0) {
                    return Err(AmpError::Config(format!(
                        "oversampling: need a positive factor, got {}",
                        self.oversampling
                    )));
                }
                if self.solver == SolverChoice::AlternatingProjection {
                    return Err(AmpError::Config(
                        "solver: the sparse experiment only supports amplitude-flow".into(),
                    ));
                }
            }
            Experiment::RipTable => {
                if self.k_list.is_empty() {
                    return Err(AmpError::Config("k_list: need at least one support size".into()));
                }
                if let Some(&k) = self.k_list.iter().find(|&&k| k < 1 || k > self.d) {
                    return Err(AmpError::Config(format!(
                        "k_list: need 1 <= k <= d = {}, got {k}",
                        self.d
                    )));
                }
                if self.ensembles.is_empty() {
                    return Err(AmpError::Config("ensembles: need at least one".into()));
                }
                if !(0.0..1.0).contains(&self.beta0) {
                    return Err(AmpError::Config(format!(
                        "beta0: need 0 <= beta0 < 1, got {}",
                        self.beta0
                    )));
                }
                if self.repeats < 1 {
                    return Err(AmpError::Config("repeats: need at least 1".into()));
                }
                if self.trials < 100 {
                    return Err(AmpError::Config(format!(
                        "trials: rip-table needs at least 100 probes per cell, got {}",
                        self.trials
                    )));
                }
            }
            _ => {}
        }
        // Solver experiments are ill-posed below m = d; run anyway, but say so.
        let solves = !matches!(self.experiment, Experiment::RipTable | Experiment::SparseSharpness);
        if solves {
            for &m in &self.m_list {
                if m < self.d {
                    warnings.push(format!(
                        "m = {m} is below d = {}; recovery is underdetermined",
                        self.d
                    ));
                }
            }
        }
        if self.experiment == Experiment::Sharpness {
            // The lower-bound regime needs the signal to dominate the noise
            // floor: ||x0|| >= 10 ||eta||_2 / sqrt(m) with ||x0|| = 1.
            let floor = match self.noise.kind.as_str() {
                "constant" => self.noise.mu_param().abs(),
                "shifted-gaussian" | "zero-mean-gaussian" => {
                    self.noise.mu_param().hypot(self.noise.sigma_param())
                }
                _ => 0.0,
            };
            if floor > 0.1 {
                return Err(AmpError::Config(format!(
                    "noise: per-entry noise scale {floor} puts ||eta||_2/sqrt(m) above \
                     ||x0||/10; the sharpness regime requires the signal to dominate"
                )));
            }
        }
        Ok(warnings)
    }

    /// Default output filename for the experiment.
    pub fn default_out(&self) -> PathBuf {
        PathBuf::from(format!("{}.csv", self.experiment.name()))
    }
}

/// `ceil(c * k * ln(e d / k))`, the usual sparse sampling budget.
pub fn default_sparse_m(d: usize, k: usize, c: f64) -> Result<usize> {
    if k < 1 || k > d {
        return Err(AmpError::Config(format!("k: need 1 <= k <= d = {d}, got {k}")));
    }
    if !(c > 0.0) {
        return Err(AmpError::Config(format!("oversampling: need a positive factor, got {c}")));
    }
    let m = (c * k as f64 * (std::f64::consts::E * d as f64 / k as f64).ln()).ceil();
    Ok(m as usize)
}
