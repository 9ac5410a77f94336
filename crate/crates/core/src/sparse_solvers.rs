//! Sparse variants: l1-constrained amplitude flow and its support tooling.
//!
//! The l1 geometry lives on the moduli.  Projecting a complex vector onto
//! `{ z : ||z||_1 <= R }` keeps every entry's phase and shrinks the modulus
//! profile by the usual simplex threshold, so the projection reduces to the
//! real nonnegative case coordinate-wise.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{AmpError, Result};
use crate::measurements::SensingMatrix;
use crate::metrics::residual;
use crate::solvers::{flow_engine, restricted_spectral_init, SolverConfig, SolverResult, SpectralInit};

/// Configuration for [`sparse_amplitude_flow`].
#[derive(Debug, Clone)]
pub struct SparseConfig {
    pub base: SolverConfig,
    /// l1-ball radius the iterates are projected onto; must be positive.
    pub radius: f64,
    /// Data-fit level for feasibility reporting against the constraint
    /// `residual <= epsilon`; not used by the iteration itself.
    pub epsilon: f64,
    /// Support size used by the sparse spectral initializer; defaults to `d`
    /// (no support restriction) when absent.
    pub k: Option<usize>,
}

impl SparseConfig {
    pub fn new(radius: f64) -> Self {
        SparseConfig {
            base: SolverConfig::default(),
            radius,
            epsilon: 0.0,
            k: None,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }
}

/// Euclidean projection onto the complex l1 ball of the given radius.
///
/// Phases are preserved exactly: the output is `x_i * (v_i / |x_i|)` where
/// `v` is the projection of the modulus vector onto the real simplex cap
/// `{ v >= 0, sum v <= radius }`.  Inputs already inside the ball are
/// returned unchanged.
pub fn project_l1_ball(x: &DVector<Complex64>, radius: f64) -> Result<DVector<Complex64>> {
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(AmpError::invalid(
            "radius",
            format!("need a finite radius >= 0, got {radius}"),
        ));
    }
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(AmpError::numerical("projection input contains NaN/Inf"));
    }
    let w: Vec<f64> = x.iter().map(|v| v.norm()).collect();
    let total: f64 = w.iter().sum();
    if total <= radius {
        return Ok(x.clone());
    }
    if radius == 0.0 {
        return Ok(DVector::from_element(x.len(), Complex64::new(0.0, 0.0)));
    }

    // Sorted-threshold rule for projecting the moduli onto the simplex of
    // size `radius`: tau = (sum of the rho largest - radius) / rho with rho
    // the largest index keeping the shrunken entry positive.
    let mut sorted = w.clone();
    sorted.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite moduli"));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cum += u;
        let cand = (cum - radius) / (j as f64 + 1.0);
        if u - cand > 0.0 {
            tau = cand;
        } else {
            break;
        }
    }
    let z = DVector::from_iterator(
        x.len(),
        x.iter().zip(w.iter()).map(|(xi, &wi)| {
            let vi = (wi - tau).max(0.0);
            if vi == 0.0 || wi == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                xi * Complex64::new(vi / wi, 0.0)
            }
        }),
    );
    Ok(z)
}

/// Spectral initializer restricted to the `k` columns with the largest
/// amplitude-weighted energy `(1/m) sum_j b_j^2 |a_j[i]|^2`.  Ties break by
/// column index.  Scaling and degenerate handling match
/// [`crate::solvers::spectral_init`]; coordinates off the selected support
/// come back exactly zero.
pub fn sparse_spectral_init(
    a: &SensingMatrix,
    b: &DVector<f64>,
    k: usize,
    power_iters: usize,
) -> Result<SpectralInit> {
    if b.len() != a.m {
        return Err(AmpError::DimensionMismatch(format!(
            "observations have length {}, matrix rows {}",
            b.len(),
            a.m
        )));
    }
    if k == 0 || k > a.d {
        return Err(AmpError::invalid(
            "k",
            format!("need 1 <= k <= d = {}, got {k}", a.d),
        ));
    }
    if power_iters == 0 {
        return Err(AmpError::invalid("power_iters", "need at least one power iteration"));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(AmpError::invalid("b", "observations contain NaN/Inf"));
    }

    let m = a.m as f64;
    let mut scores = vec![0.0f64; a.d];
    for j in 0..a.m {
        let bj2 = b[j] * b[j];
        for i in 0..a.d {
            scores[i] += bj2 * a.entry(j, i).norm_sqr();
        }
    }
    for s in scores.iter_mut() {
        *s /= m;
    }
    let mut order: Vec<usize> = (0..a.d).collect();
    order.sort_by(|&p, &q| {
        scores[q]
            .partial_cmp(&scores[p])
            .expect("finite scores")
            .then(p.cmp(&q))
    });
    let mut support: Vec<usize> = order.into_iter().take(k).collect();
    support.sort_unstable();
    restricted_spectral_init(a, b, power_iters, Some(&support))
}

/// Projected amplitude flow for the l1-constrained model: the same gradient
/// step as [`crate::solvers::amplitude_flow`] followed by projection onto
/// the l1 ball of `cfg.radius`, starting from [`sparse_spectral_init`].
pub fn sparse_amplitude_flow(
    a: &SensingMatrix,
    b: &DVector<f64>,
    cfg: &SparseConfig,
    truth: Option<&DVector<Complex64>>,
) -> Result<SolverResult> {
    if !(cfg.radius > 0.0) || !cfg.radius.is_finite() {
        return Err(AmpError::invalid(
            "radius",
            format!("need a finite radius > 0, got {}", cfg.radius),
        ));
    }
    if !(cfg.epsilon >= 0.0) || !cfg.epsilon.is_finite() {
        return Err(AmpError::invalid(
            "epsilon",
            format!("need a finite epsilon >= 0, got {}", cfg.epsilon),
        ));
    }
    let k = cfg.k.unwrap_or(a.d);
    let x0 = sparse_spectral_init(a, b, k, cfg.base.power_iters)?.x;
    let radius = cfg.radius;
    let project = move |v: DVector<Complex64>| project_l1_ball(&v, radius);
    flow_engine(a, b, &cfg.base, truth, x0, Some(&project))
}

/// Does `x` satisfy the data-fit constraint `residual <= eps`?  Returns the
/// flag together with the residual itself.
pub fn feasibility_check(
    a: &SensingMatrix,
    b: &DVector<f64>,
    x: &DVector<Complex64>,
    eps: f64,
) -> Result<(bool, f64)> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(AmpError::invalid("eps", format!("need eps >= 0, got {eps}")));
    }
    let r = residual(a, x, b)?;
    Ok((r <= eps, r))
}

/// Is the zero vector feasible, i.e. `||b||_2 <= eps`?  With `eps = 0` and
/// `b = 0` this is true (boundary case).
pub fn zero_solution_check(b: &DVector<f64>, eps: f64) -> bool {
    b.norm() <= eps
}
