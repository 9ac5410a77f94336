//! Solvers for the amplitude-based least squares model
//! `min_x sum_j (|<a_j, x>| - b_j)^2`.
//!
//! Two iterative schemes are provided.  `amplitude_flow` runs (sub)gradient
//! descent with a backtracking step safeguard and optional truncation of
//! small-amplitude rows.  `alternating_projection` alternates between fixing
//! the measurement phases and solving the resulting complex least squares
//! problem through one cached QR factorization.  Both start from the same
//! spectral initializer by default and share the stopping rule: relative
//! loss change below `tol_rel_change`, an absolute loss floor for the
//! exact-recovery regime where the relative change never settles, or
//! `max_iters`.

use nalgebra::DVector;
use num_complex::Complex64;
use std::time::Instant;

use crate::error::{AmpError, Result};
use crate::measurements::SensingMatrix;
use crate::metrics::phase_dist;
use crate::rng::rng_from_seed;

/// How iterative solvers pick their starting point.
#[derive(Debug, Clone)]
pub enum InitMode {
    /// Power iteration on the amplitude-weighted covariance (default).
    Spectral,
    /// Start from this exact vector.
    Given(DVector<Complex64>),
    /// Random direction with the spectral scale, drawn from `seed`.
    Random { seed: u64 },
}

/// Knobs for [`amplitude_flow`] and [`alternating_projection`].
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Hard iteration cap.
    pub max_iters: usize,
    /// Initial gradient step `mu`; halved whenever a step would increase the
    /// loss, never grown back.
    pub step: f64,
    /// Stop when `|loss_k - loss_{k-1}|` falls below this fraction of the
    /// previous loss.
    pub tol_rel_change: f64,
    /// Truncation threshold: rows with `|<a_j, x>| < ||x|| / trunc_gamma`
    /// are dropped from the gradient.  `0` disables truncation.
    pub trunc_gamma: f64,
    /// Power iteration count for the spectral initializer.
    pub power_iters: usize,
    pub init: InitMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 2000,
            step: 0.6,
            tol_rel_change: 1e-10,
            trunc_gamma: 0.0,
            power_iters: 100,
            init: InitMode::Spectral,
        }
    }
}

impl SolverConfig {
    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol_rel_change = tol;
        self
    }

    pub fn with_truncation(mut self, trunc_gamma: f64) -> Self {
        self.trunc_gamma = trunc_gamma;
        self
    }

    pub fn with_init(mut self, init: InitMode) -> Self {
        self.init = init;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(AmpError::invalid("max_iters", "need at least one iteration"));
        }
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(AmpError::invalid("step", format!("need step > 0, got {}", self.step)));
        }
        if !(self.tol_rel_change >= 0.0) {
            return Err(AmpError::invalid(
                "tol_rel_change",
                format!("need a nonnegative tolerance, got {}", self.tol_rel_change),
            ));
        }
        if self.trunc_gamma < 0.0 {
            return Err(AmpError::invalid(
                "trunc_gamma",
                format!("need trunc_gamma >= 0 (0 disables), got {}", self.trunc_gamma),
            ));
        }
        if self.power_iters == 0 {
            return Err(AmpError::invalid("power_iters", "need at least one power iteration"));
        }
        Ok(())
    }
}

/// Largest first-order score a stopped run may report while still counting
/// as converged.  A loss plateau alone is not a certificate: near an
/// amplitude kink (some `|<a_j, x>|` at roundoff scale) the backtracking
/// step collapses and the loss stops moving while the iterate is nowhere
/// stationary, so the flag demands the score as well.
pub const CONVERGENCE_CERTIFICATE: f64 = 1e-6;

/// Outcome of an iterative solve.
#[derive(Debug, Clone)]
pub struct SolverResult {
    pub x: DVector<Complex64>,
    /// Update steps actually performed.
    pub iterations: usize,
    /// True when a stopping rule fired (absolute loss floor or relative
    /// loss-change plateau) *and* the final first-order score is at most
    /// [`CONVERGENCE_CERTIFICATE`].  Hitting the iteration cap never sets
    /// this.
    pub converged: bool,
    /// Loss after initialization and after every step; non-increasing under
    /// the backtracking safeguard.
    pub loss_trace: Vec<f64>,
    /// Per-iterate distance to the ground truth, when one was supplied.
    pub dist_trace: Option<Vec<f64>>,
    /// First-order optimality score at the final iterate: the amplitude-loss
    /// identity score for plain runs, the displacement of one projected
    /// reference step for constrained runs.
    pub stationarity: f64,
    /// False when the final iterate is zero and the score is reported raw.
    pub stationarity_normalized: bool,
    /// `sqrt(final loss)`, recorded for feasibility reporting.
    pub final_residual: f64,
    pub wall_time_ms: f64,
}

/// `sum_j (|<a_j, x>| - b_j)^2`.
pub fn loss(a: &SensingMatrix, x: &DVector<Complex64>, b: &DVector<f64>) -> Result<f64> {
    if b.len() != a.m {
        return Err(AmpError::DimensionMismatch(format!(
            "observations have length {}, matrix rows {}",
            b.len(),
            a.m
        )));
    }
    let z = a.forward(x)?;
    Ok(z.iter()
        .zip(b.iter())
        .map(|(zj, bj)| {
            let r = zj.norm() - bj;
            r * r
        })
        .sum())
}

/// Spectral initializer output.
#[derive(Debug, Clone)]
pub struct SpectralInit {
    pub x: DVector<Complex64>,
    /// Set when `b = 0` (or the weighted covariance annihilates every probe)
    /// and the returned vector is zero.
    pub degenerate: bool,
}

/// Leading eigenvector of `Y = (1/m) sum_j b_j^2 a_j a_j^*`, scaled to norm
/// `sqrt(mean(b^2))`.  `Y` is never formed; each power step costs one
/// forward and one adjoint product.
pub fn spectral_init(a: &SensingMatrix, b: &DVector<f64>, power_iters: usize) -> Result<SpectralInit> {
    if b.len() != a.m {
        return Err(AmpError::DimensionMismatch(format!(
            "observations have length {}, matrix rows {}",
            b.len(),
            a.m
        )));
    }
    if power_iters == 0 {
        return Err(AmpError::invalid("power_iters", "need at least one power iteration"));
    }
    check_observations(b)?;
    restricted_spectral_init(a, b, power_iters, None)
}

/// Shared power iteration, optionally confined to a coordinate support.
pub(crate) fn restricted_spectral_init(
    a: &SensingMatrix,
    b: &DVector<f64>,
    power_iters: usize,
    support: Option<&[usize]>,
) -> Result<SpectralInit> {
    let d = a.d;
    let zero = DVector::from_element(d, Complex64::new(0.0, 0.0));
    if b.iter().all(|&v| v == 0.0) {
        return Ok(SpectralInit {
            x: zero,
            degenerate: true,
        });
    }
    let m = a.m as f64;
    let b2 = DVector::from_iterator(a.m, b.iter().map(|&v| v * v));
    let scale = b.norm() / m.sqrt();

    let mut v = match support {
        None => DVector::from_element(d, Complex64::new(1.0 / (d as f64).sqrt(), 0.0)),
        Some(s) => {
            let mut v = zero.clone();
            let amp = Complex64::new(1.0 / (s.len() as f64).sqrt(), 0.0);
            for &i in s {
                v[i] = amp;
            }
            v
        }
    };
    for _ in 0..power_iters {
        let mut w = a.forward(&v)?;
        for (wj, b2j) in w.iter_mut().zip(b2.iter()) {
            *wj *= Complex64::new(*b2j, 0.0);
        }
        let mut u = a.adjoint(&w)?;
        u /= Complex64::new(m, 0.0);
        if let Some(s) = support {
            let mut masked = zero.clone();
            for &i in s {
                masked[i] = u[i];
            }
            u = masked;
        }
        let n = u.norm();
        if !n.is_finite() {
            return Err(AmpError::numerical("spectral power iteration diverged"));
        }
        if n == 0.0 {
            return Ok(SpectralInit {
                x: zero,
                degenerate: true,
            });
        }
        u /= Complex64::new(n, 0.0);
        v = u;
    }
    Ok(SpectralInit {
        x: v * Complex64::new(scale, 0.0),
        degenerate: false,
    })
}

/// First-order optimality score.
#[derive(Debug, Clone, Copy)]
pub struct Stationarity {
    pub value: f64,
    /// False when `x = 0`: the raw score is returned because the usual
    /// normalization divides by `||x||`.
    pub normalized: bool,
}

/// At any minimizer of the amplitude loss,
/// `sum_j (|<a_j, x>| - b_j) |<a_j, x>| = 0`.  This reports that sum,
/// normalized by `m * ||x|| * max(||b|| / sqrt(m), ||x||)` so the score is
/// scale-free and comparable across problem sizes.
pub fn stationarity_residual(
    a: &SensingMatrix,
    b: &DVector<f64>,
    x: &DVector<Complex64>,
) -> Result<Stationarity> {
    if b.len() != a.m {
        return Err(AmpError::DimensionMismatch(format!(
            "observations have length {}, matrix rows {}",
            b.len(),
            a.m
        )));
    }
    let z = a.forward(x)?;
    let raw: f64 = z
        .iter()
        .zip(b.iter())
        .map(|(zj, bj)| {
            let amp = zj.norm();
            (amp - bj) * amp
        })
        .sum();
    let num = raw.abs();
    let xn = x.norm();
    if xn == 0.0 {
        return Ok(Stationarity {
            value: num,
            normalized: false,
        });
    }
    let m = a.m as f64;
    let den = m * xn * (b.norm() / m.sqrt()).max(xn);
    Ok(Stationarity {
        value: num / den,
        normalized: true,
    })
}

/// Untruncated subgradient of the amplitude loss, scaled by `1/m`, with the
/// `phase(0) = 0` convention.
fn subgradient(
    a: &SensingMatrix,
    b: &DVector<f64>,
    x: &DVector<Complex64>,
) -> Result<DVector<Complex64>> {
    let z = a.forward(x)?;
    let coeffs = DVector::from_iterator(
        a.m,
        z.iter().zip(b.iter()).map(|(zj, bj)| {
            let amp = zj.norm();
            if amp == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                zj * Complex64::new((amp - bj) / amp, 0.0)
            }
        }),
    );
    let mut g = a.adjoint(&coeffs)?;
    g /= Complex64::new(a.m as f64, 0.0);
    Ok(g)
}

/// First-order score for a projection-constrained run: how far one gradient
/// step of the reference size moves the iterate once projected back,
/// relative to the step and the iterate scale.  At a constrained minimizer
/// the projected step is a fixed point and the score vanishes, even though
/// the plain gradient score stays pinned at the active constraint.
fn projected_fixed_point_score(
    a: &SensingMatrix,
    b: &DVector<f64>,
    x: &DVector<Complex64>,
    step: f64,
    project: &dyn Fn(DVector<Complex64>) -> Result<DVector<Complex64>>,
) -> Result<Stationarity> {
    let g = subgradient(a, b, x)?;
    let cand = project(x - g * Complex64::new(step, 0.0))?;
    let moved = (cand - x).norm() / step;
    let xn = x.norm();
    if xn == 0.0 {
        return Ok(Stationarity {
            value: moved,
            normalized: false,
        });
    }
    Ok(Stationarity {
        value: moved / xn,
        normalized: true,
    })
}

fn check_observations(b: &DVector<f64>) -> Result<()> {
    if b.iter().any(|v| !v.is_finite()) {
        return Err(AmpError::invalid("b", "observations contain NaN/Inf"));
    }
    Ok(())
}

fn resolve_init(a: &SensingMatrix, b: &DVector<f64>, cfg: &SolverConfig) -> Result<DVector<Complex64>> {
    match &cfg.init {
        InitMode::Spectral => Ok(spectral_init(a, b, cfg.power_iters)?.x),
        InitMode::Given(x0) => {
            if x0.len() != a.d {
                return Err(AmpError::DimensionMismatch(format!(
                    "init vector has length {}, expected {}",
                    x0.len(),
                    a.d
                )));
            }
            Ok(x0.clone())
        }
        InitMode::Random { seed } => {
            let dist = crate::measurements::EntryDistribution::complex_gaussian();
            let mut rng = rng_from_seed(*seed);
            let mut v = DVector::from_iterator(a.d, (0..a.d).map(|_| dist.sample_one(&mut rng)));
            let n = v.norm();
            if n == 0.0 {
                return Err(AmpError::numerical("random init collapsed to zero"));
            }
            v /= Complex64::new(n, 0.0);
            let scale = b.norm() / (a.m as f64).sqrt();
            Ok(v * Complex64::new(scale, 0.0))
        }
    }
}

/// Absolute loss level below which a run counts as an exact fit.  In the
/// noiseless regime the loss decays geometrically to zero, so a relative
/// change test alone would never fire; anything at the square of
/// `1e-13 ||b||` is machine-precision recovery.
fn loss_floor(b: &DVector<f64>) -> f64 {
    let t = 1e-13 * b.norm();
    t * t
}

struct RunState {
    loss_trace: Vec<f64>,
    dist_trace: Option<Vec<f64>>,
    started: Instant,
}

impl RunState {
    fn new(
        a_loss: f64,
        x: &DVector<Complex64>,
        truth: Option<&DVector<Complex64>>,
        started: Instant,
    ) -> Result<Self> {
        let dist_trace = match truth {
            Some(t) => Some(vec![phase_dist(x, t)?]),
            None => None,
        };
        Ok(RunState {
            loss_trace: vec![a_loss],
            dist_trace,
            started,
        })
    }

    fn record(&mut self, l: f64, x: &DVector<Complex64>, truth: Option<&DVector<Complex64>>) -> Result<()> {
        self.loss_trace.push(l);
        if let (Some(trace), Some(t)) = (self.dist_trace.as_mut(), truth) {
            trace.push(phase_dist(x, t)?);
        }
        Ok(())
    }

    fn finish(
        self,
        x: DVector<Complex64>,
        iterations: usize,
        stop_fired: bool,
        final_loss: f64,
        score: Stationarity,
    ) -> SolverResult {
        SolverResult {
            x,
            iterations,
            converged: stop_fired && score.value <= CONVERGENCE_CERTIFICATE,
            loss_trace: self.loss_trace,
            dist_trace: self.dist_trace,
            stationarity: score.value,
            stationarity_normalized: score.normalized,
            final_residual: final_loss.max(0.0).sqrt(),
            wall_time_ms: self.started.elapsed().as_secs_f64() * 1e3,
        }
    }
}

/// Gradient-descent engine shared by the dense and l1-projected solvers.
pub(crate) fn flow_engine(
    a: &SensingMatrix,
    b: &DVector<f64>,
    cfg: &SolverConfig,
    truth: Option<&DVector<Complex64>>,
    x0: DVector<Complex64>,
    project: Option<&dyn Fn(DVector<Complex64>) -> Result<DVector<Complex64>>>,
) -> Result<SolverResult> {
    let started = Instant::now();
    cfg.validate()?;
    check_observations(b)?;

    let mut x = match project {
        Some(p) => p(x0)?,
        None => x0,
    };
    let m = a.m as f64;
    let floor = loss_floor(b);
    let mut cur = loss(a, &x, b)?;
    if !cur.is_finite() {
        return Err(AmpError::Numerical {
            reason: "loss is not finite at the initial point".to_string(),
            last_iterate: Some(x),
        });
    }
    let mut state = RunState::new(cur, &x, truth, started)?;
    let mut mu = cfg.step;
    let min_mu = cfg.step * 2f64.powi(-60);
    let mut stop_fired = false;
    let mut iterations = 0;

    for k in 1..=cfg.max_iters {
        let z = a.forward(&x)?;
        let xnorm = x.norm();
        let trunc_level = if cfg.trunc_gamma > 0.0 {
            xnorm / cfg.trunc_gamma
        } else {
            0.0
        };
        // Subgradient coefficients (|z_j| - b_j) * phase(z_j), with
        // phase(0) := 0 and truncated rows dropped.
        let coeffs = DVector::from_iterator(
            a.m,
            z.iter().zip(b.iter()).map(|(zj, bj)| {
                let amp = zj.norm();
                if amp == 0.0 || (cfg.trunc_gamma > 0.0 && amp < trunc_level) {
                    Complex64::new(0.0, 0.0)
                } else {
                    zj * Complex64::new((amp - bj) / amp, 0.0)
                }
            }),
        );
        let mut g = a.adjoint(&coeffs)?;
        g /= Complex64::new(m, 0.0);
        if g.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(AmpError::Numerical {
                reason: format!("gradient is not finite at iteration {k}"),
                last_iterate: Some(x),
            });
        }

        // Backtracking: halve mu until the step stops increasing the loss.
        let (next_x, next_loss) = loop {
            let mut cand = &x - &g * Complex64::new(mu, 0.0);
            if let Some(p) = project {
                cand = p(cand)?;
            }
            let l = loss(a, &cand, b)?;
            if l.is_finite() && l <= cur {
                break (cand, l);
            }
            mu *= 0.5;
            if mu < min_mu {
                // No descent possible at machine scale: stay put.
                break (x.clone(), cur);
            }
        };

        x = next_x;
        let prev = cur;
        cur = next_loss;
        iterations = k;
        state.record(cur, &x, truth)?;

        let rel = (prev - cur).abs() / prev.max(floor.max(f64::MIN_POSITIVE));
        if cur <= floor || rel <= cfg.tol_rel_change {
            stop_fired = true;
            break;
        }
    }

    let score = match project {
        None => stationarity_residual(a, b, &x)?,
        Some(p) => projected_fixed_point_score(a, b, &x, cfg.step, p)?,
    };
    Ok(state.finish(x, iterations, stop_fired, cur, score))
}

/// Amplitude flow: (sub)gradient descent
/// `x <- x - (mu / m) sum_j (|<a_j, x>| - b_j) phase(<a_j, x>) a_j`,
/// with the backtracking and truncation behavior described on
/// [`SolverConfig`].  When `truth` is given, a per-iterate distance trace is
/// recorded alongside the loss trace.
pub fn amplitude_flow(
    a: &SensingMatrix,
    b: &DVector<f64>,
    cfg: &SolverConfig,
    truth: Option<&DVector<Complex64>>,
) -> Result<SolverResult> {
    cfg.validate()?;
    check_observations(b)?;
    let x0 = resolve_init(a, b, cfg)?;
    flow_engine(a, b, cfg, truth, x0, None)
}

/// Alternating projection: repeat
/// `c <- phase(F x)` entrywise (1 where the entry is 0), then
/// `x <- argmin_z ||F z - c .* b||_2`, where `F` is the forward matrix.
/// The least squares step reuses one QR factorization computed up front.
/// Requires `m >= d` so the factor is full-rank in the generic case.
pub fn alternating_projection(
    a: &SensingMatrix,
    b: &DVector<f64>,
    cfg: &SolverConfig,
    truth: Option<&DVector<Complex64>>,
) -> Result<SolverResult> {
    let started = Instant::now();
    cfg.validate()?;
    check_observations(b)?;
    if b.len() != a.m {
        return Err(AmpError::DimensionMismatch(format!(
            "observations have length {}, matrix rows {}",
            b.len(),
            a.m
        )));
    }
    if a.m < a.d {
        return Err(AmpError::invalid(
            "m",
            format!("alternating projection needs m >= d, got m = {}, d = {}", a.m, a.d),
        ));
    }

    let mut x = resolve_init(a, b, cfg)?;
    let qr = a.forward_matrix().qr();
    let q = qr.q();
    let r = qr.r();
    let diag_max = (0..a.d).map(|i| r[(i, i)].norm()).fold(0.0f64, f64::max);
    let diag_min = (0..a.d).map(|i| r[(i, i)].norm()).fold(f64::INFINITY, f64::min);
    if diag_max == 0.0 || diag_min <= 1e-12 * diag_max {
        return Err(AmpError::Numerical {
            reason: "least squares factor is numerically rank-deficient".to_string(),
            last_iterate: Some(x),
        });
    }

    let floor = loss_floor(b);
    let mut cur = loss(a, &x, b)?;
    let mut state = RunState::new(cur, &x, truth, started)?;
    let mut stop_fired = false;
    let mut iterations = 0;

    for k in 1..=cfg.max_iters {
        let z = a.forward(&x)?;
        // Phase projection: c_j b_j with c_j = phase(z_j), 1 at z_j = 0.
        let rhs = DVector::from_iterator(
            a.m,
            z.iter().zip(b.iter()).map(|(zj, bj)| {
                let amp = zj.norm();
                if amp == 0.0 {
                    Complex64::new(*bj, 0.0)
                } else {
                    zj * Complex64::new(bj / amp, 0.0)
                }
            }),
        );
        let y = q.ad_mul(&rhs);
        let Some(next) = r.solve_upper_triangular(&y) else {
            return Err(AmpError::Numerical {
                reason: "triangular solve failed in alternating projection".to_string(),
                last_iterate: Some(x),
            });
        };
        let l = loss(a, &next, b)?;
        if !l.is_finite() || next.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(AmpError::Numerical {
                reason: format!("iterate became non-finite at iteration {k}"),
                last_iterate: Some(x),
            });
        }
        x = next;
        let prev = cur;
        cur = l;
        iterations = k;
        state.record(cur, &x, truth)?;

        let rel = (prev - cur).abs() / prev.max(floor.max(f64::MIN_POSITIVE));
        if cur <= floor || rel <= cfg.tol_rel_change {
            stop_fired = true;
            break;
        }
    }

    let score = stationarity_residual(a, b, &x)?;
    Ok(state.finish(x, iterations, stop_fired, cur, score))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurements::{
        make_noise, observe, sample_matrix, EntryDistribution, NoiseKind,
    };
    use approx::assert_relative_eq;

    fn unit_vec(d: usize, seed: u64) -> DVector<Complex64> {
        let dist = EntryDistribution::complex_gaussian();
        let mut rng = rng_from_seed(seed);
        let mut x = DVector::from_iterator(d, (0..d).map(|_| dist.sample_one(&mut rng)));
        let n = x.norm();
        x /= Complex64::new(n, 0.0);
        x
    }

    fn noiseless_problem(m: usize, d: usize, seed: u64) -> (SensingMatrix, DVector<Complex64>, DVector<f64>) {
        let dist = EntryDistribution::complex_gaussian();
        let a = sample_matrix(&dist, m, d, seed).unwrap();
        let x0 = unit_vec(d, seed ^ 0xABCD);
        let eta = make_noise(&NoiseKind::Constant { value: 0.0 }, m, 0).unwrap();
        let obs = observe(&a, &x0, &eta).unwrap();
        (a, x0, obs.b)
    }

    #[test]
    fn loss_is_zero_at_truth_and_positive_elsewhere() {
        let (a, x0, b) = noiseless_problem(24, 4, 1);
        assert!(loss(&a, &x0, &b).unwrap() <= 1e-24);
        let other = unit_vec(4, 99);
        assert!(loss(&a, &other, &b).unwrap() > 1e-3);
    }

    #[test]
    fn spectral_init_has_requested_scale_and_direction() {
        let (a, x0, b) = noiseless_problem(160, 8, 2);
        let init = spectral_init(&a, &b, 100).unwrap();
        assert!(!init.degenerate);
        // Norm pinned to sqrt(mean b^2).
        let want = b.norm() / (a.m as f64).sqrt();
        assert_relative_eq!(init.x.norm(), want, max_relative = 1e-9);
        // At 20x oversampling the direction lands close to the truth.
        let d = phase_dist(&init.x, &x0).unwrap();
        assert!(d < 0.5, "spectral init too far: {d}");
    }

    #[test]
    fn spectral_init_zero_observations_flagged() {
        let dist = EntryDistribution::complex_gaussian();
        let a = sample_matrix(&dist, 12, 4, 3).unwrap();
        let b = DVector::from_element(12, 0.0);
        let init = spectral_init(&a, &b, 50).unwrap();
        assert!(init.degenerate);
        assert_eq!(init.x.norm(), 0.0);
    }

    #[test]
    fn spectral_init_is_deterministic() {
        let (a, _, b) = noiseless_problem(64, 6, 5);
        let i1 = spectral_init(&a, &b, 80).unwrap();
        let i2 = spectral_init(&a, &b, 80).unwrap();
        assert_eq!(i1.x, i2.x);
    }

    #[test]
    fn amplitude_flow_recovers_noiseless_signal() {
        let (a, x0, b) = noiseless_problem(256, 16, 7);
        let cfg = SolverConfig::default();
        let res = amplitude_flow(&a, &b, &cfg, Some(&x0)).unwrap();
        assert!(res.converged, "did not converge in {} iters", res.iterations);
        let d = phase_dist(&res.x, &x0).unwrap();
        assert!(d <= 1e-6, "dist {d}");
        assert!(res.stationarity <= 1e-6, "stationarity {}", res.stationarity);
    }

    #[test]
    fn amplitude_flow_loss_trace_is_monotone() {
        let dist = EntryDistribution::complex_gaussian();
        let a = sample_matrix(&dist, 96, 8, 11).unwrap();
        let x0 = unit_vec(8, 12);
        let eta = make_noise(&NoiseKind::Constant { value: 0.05 }, 96, 0).unwrap();
        let obs = observe(&a, &x0, &eta).unwrap();
        let res = amplitude_flow(&a, &obs.b, &SolverConfig::default(), None).unwrap();
        for w in res.loss_trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-15), "trace increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn amplitude_flow_respects_iteration_cap() {
        let (a, _, b) = noiseless_problem(64, 8, 13);
        let cfg = SolverConfig::default().with_max_iters(3);
        let res = amplitude_flow(&a, &b, &cfg, None).unwrap();
        assert_eq!(res.iterations, 3);
        assert!(!res.converged);
        assert_eq!(res.loss_trace.len(), 4);
    }

    #[test]
    fn plateau_without_certificate_is_not_convergence() {
        // A sloppy tolerance makes the loss-change test fire on the very
        // first step; the flag still refuses because the iterate is nowhere
        // near first-order.
        let (a, _, b) = noiseless_problem(128, 8, 53);
        let cfg = SolverConfig::default().with_tol(1.0);
        let res = amplitude_flow(&a, &b, &cfg, None).unwrap();
        assert_eq!(res.iterations, 1);
        assert!(!res.converged);
        assert!(res.stationarity > CONVERGENCE_CERTIFICATE);
    }

    #[test]
    fn alternating_projection_recovers_noiseless_signal() {
        let (a, x0, b) = noiseless_problem(256, 16, 17);
        let res = alternating_projection(&a, &b, &SolverConfig::default(), Some(&x0)).unwrap();
        assert!(res.converged);
        let d = phase_dist(&res.x, &x0).unwrap();
        assert!(d <= 1e-7, "dist {d}");
    }

    #[test]
    fn alternating_projection_requires_overdetermined_system() {
        let dist = EntryDistribution::complex_gaussian();
        let a = sample_matrix(&dist, 4, 8, 1).unwrap();
        let b = DVector::from_element(4, 1.0);
        assert!(alternating_projection(&a, &b, &SolverConfig::default(), None).is_err());
    }

    #[test]
    fn alternating_projection_zero_observations_fixed_point() {
        let dist = EntryDistribution::complex_gaussian();
        let a = sample_matrix(&dist, 32, 4, 19).unwrap();
        let b = DVector::from_element(32, 0.0);
        let res = alternating_projection(&a, &b, &SolverConfig::default(), None).unwrap();
        assert!(res.converged);
        assert_eq!(res.x.norm(), 0.0);
    }

    #[test]
    fn solvers_are_phase_equivariant() {
        let (a, _, b) = noiseless_problem(128, 8, 23);
        let base_init = spectral_init(&a, &b, 100).unwrap().x;
        let rot = Complex64::from_polar(1.0, 0.9);
        let rotated_init = base_init.map(|v| v * rot);

        let run = |use_ap: bool, init: &DVector<Complex64>| {
            let cfg = SolverConfig::default().with_init(InitMode::Given(init.clone()));
            if use_ap {
                alternating_projection(&a, &b, &cfg, None).unwrap()
            } else {
                amplitude_flow(&a, &b, &cfg, None).unwrap()
            }
        };
        for use_ap in [false, true] {
            let r1 = run(use_ap, &base_init);
            let r2 = run(use_ap, &rotated_init);
            // Measured via align, which resolves below the closed form's
            // sqrt(eps) cancellation floor.
            let d = crate::metrics::align(&r1.x, &r2.x).unwrap().dist;
            assert!(d <= 1e-8 * r1.x.norm().max(1.0), "equivariance broke: {d}");
        }
    }

    #[test]
    fn stationarity_is_tiny_at_minimizer_and_large_off_it() {
        let (a, x0, b) = noiseless_problem(128, 8, 29);
        let st = stationarity_residual(&a, &b, &x0).unwrap();
        assert!(st.normalized);
        assert!(st.value <= 1e-12);
        let far = unit_vec(8, 31);
        let st_far = stationarity_residual(&a, &b, &far).unwrap();
        assert!(st_far.value > 1e-3);
    }

    #[test]
    fn stationarity_at_zero_is_unnormalized() {
        let (a, _, b) = noiseless_problem(16, 4, 37);
        let zero = DVector::from_element(4, Complex64::new(0.0, 0.0));
        let st = stationarity_residual(&a, &b, &zero).unwrap();
        assert!(!st.normalized);
        assert_eq!(st.value, 0.0); // all |<a_j, 0>| = 0, so the raw sum is 0
    }

    #[test]
    fn truncated_flow_still_recovers() {
        let (a, x0, b) = noiseless_problem(256, 16, 41);
        let cfg = SolverConfig::default().with_truncation(10.0);
        let res = amplitude_flow(&a, &b, &cfg, Some(&x0)).unwrap();
        let d = phase_dist(&res.x, &x0).unwrap();
        assert!(d <= 1e-5, "dist {d}");
    }

    #[test]
    fn given_init_must_match_dimension() {
        let (a, _, b) = noiseless_problem(32, 4, 43);
        let cfg = SolverConfig::default().with_init(InitMode::Given(unit_vec(5, 1)));
        assert!(amplitude_flow(&a, &b, &cfg, None).is_err());
    }

    #[test]
    fn observations_with_nan_are_rejected() {
        let (a, _, mut b) = noiseless_problem(32, 4, 47);
        b[0] = f64::NAN;
        assert!(amplitude_flow(&a, &b, &SolverConfig::default(), None).is_err());
        assert!(spectral_init(&a, &b, 10).is_err());
    }

    #[test]
    fn config_validation() {
        let (a, _, b) = noiseless_problem(32, 4, 53);
        assert!(amplitude_flow(&a, &b, &SolverConfig::default().with_step(0.0), None).is_err());
        assert!(amplitude_flow(&a, &b, &SolverConfig::default().with_max_iters(0), None).is_err());
        assert!(amplitude_flow(&a, &b, &SolverConfig::default().with_truncation(-1.0), None).is_err());
    }
}
