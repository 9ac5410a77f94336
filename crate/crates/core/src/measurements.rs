//! Measurement synthesis for amplitude-only sensing.
//!
//! A sensing matrix stacks `m` measurement vectors `a_j` in `C^d`, each with
//! i.i.d. entries from a zero-mean, unit-variance complex ensemble.  Observing
//! a signal `x0` produces `b_j = |<a_j, x0>| + eta_j`: the phase of every
//! linear measurement is discarded and only the amplitude survives, possibly
//! corrupted by additive real noise.
//!
//! The inner product convention is fixed crate-wide as
//! `<a, x> = sum_i conj(a_i) * x_i`.
//!
//! ## Example
//!
//! ```
//! use ampflow::measurements::{make_ensemble, sample_matrix, make_noise, observe, NoiseKind};
//! use nalgebra::DVector;
//! use num_complex::Complex64;
//!
//! let dist = make_ensemble("complex-gaussian", &[]).unwrap();
//! let a = sample_matrix(&dist, 32, 4, 7).unwrap();
//! let x0 = DVector::from_element(4, Complex64::new(0.5, 0.0));
//! let eta = make_noise(&NoiseKind::Constant { value: 0.01 }, 32, 1).unwrap();
//! let obs = observe(&a, &x0, &eta).unwrap();
//! assert_eq!(obs.b.len(), 32);
//! ```

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{AmpError, Result};
use crate::rng::rng_from_seed;

/// Which complex scalar ensemble the matrix entries are drawn from.
///
/// Every shipped ensemble has mean zero, pseudo-second moment `E xi^2 = 0`
/// and unit second absolute moment `E |xi|^2 = 1`; they differ only in the
/// fourth moment `gamma = E |xi|^4`.  `gamma > 1` is what separates
/// informative ensembles from the degenerate boundary: `complex-rademacher`
/// sits exactly at `gamma = 1`, where every entry has unit modulus and
/// amplitude measurements of distinct standard basis vectors coincide.
#[derive(Debug, Clone, PartialEq)]
pub enum EnsembleKind {
    /// `(g1 + i g2) / sqrt(2)` with `g1, g2` standard real Gaussians; `gamma = 2`.
    ComplexGaussian,
    /// Real and imaginary parts independent, each `+-1/(2 sqrt(p))` with
    /// probability `p` and `0` otherwise; `gamma = 1/(4p) + 1/2`.
    Ternary { p: f64 },
    /// `(+-1 +- i) / sqrt(2)` with independent fair signs; `gamma = 1` exactly.
    ComplexRademacher,
    /// Finite atom list with probabilities; moments computed from the atoms.
    CustomDiscrete {
        atoms: Vec<Complex64>,
        probs: Vec<f64>,
    },
}

/// A validated entry ensemble together with its analytic moments.
#[derive(Debug, Clone)]
pub struct EntryDistribution {
    kind: EnsembleKind,
    mean: Complex64,
    pseudo_second: Complex64,
    abs_second: f64,
    abs_fourth: f64,
    /// Documented upper bound on the sub-Gaussian norm; informational only,
    /// never estimated from samples.
    psi2_bound: Option<f64>,
}

impl EntryDistribution {
    pub fn complex_gaussian() -> Self {
        EntryDistribution {
            kind: EnsembleKind::ComplexGaussian,
            mean: Complex64::ZERO,
            pseudo_second: Complex64::ZERO,
            abs_second: 1.0,
            abs_fourth: 2.0,
            psi2_bound: Some(1.0),
        }
    }

    /// `p` must lie in `(0, 1/2]`.  `p = 1/2` is allowed and lands exactly on
    /// the degenerate `gamma = 1` boundary.
    pub fn ternary(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 0.5) {
            return Err(AmpError::invalid(
                "p",
                format!("ternary parameter must satisfy 0 < p <= 1/2, got {p}"),
            ));
        }
        Ok(EntryDistribution {
            kind: EnsembleKind::Ternary { p },
            mean: Complex64::ZERO,
            pseudo_second: Complex64::ZERO,
            abs_second: 1.0,
            abs_fourth: 1.0 / (4.0 * p) + 0.5,
            psi2_bound: Some(1.0 / (2.0 * p).sqrt()),
        })
    }

    pub fn complex_rademacher() -> Self {
        EntryDistribution {
            kind: EnsembleKind::ComplexRademacher,
            mean: Complex64::ZERO,
            pseudo_second: Complex64::ZERO,
            abs_second: 1.0,
            abs_fourth: 1.0,
            psi2_bound: Some(1.0),
        }
    }

    /// Ensemble supported on the given atoms.  Probabilities must be
    /// nonnegative and sum to 1; the atoms must already be scaled so that
    /// `E |xi|^2 = 1` (the error message reports the normalization factor
    /// that would fix a mis-scaled list).
    pub fn custom_discrete(atoms: Vec<Complex64>, probs: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != probs.len() {
            return Err(AmpError::invalid(
                "atoms",
                format!(
                    "need equal, nonzero atom/probability counts, got {} atoms and {} probabilities",
                    atoms.len(),
                    probs.len()
                ),
            ));
        }
        if probs.iter().any(|&p| !(0.0..=1.0).contains(&p) || !p.is_finite()) {
            return Err(AmpError::invalid(
                "probs",
                "probabilities must lie in [0, 1]".to_string(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(AmpError::invalid(
                "probs",
                format!("probabilities must sum to 1, got {total}"),
            ));
        }
        let mean: Complex64 = atoms.iter().zip(&probs).map(|(a, &p)| a * p).sum();
        let pseudo: Complex64 = atoms.iter().zip(&probs).map(|(a, &p)| a * a * p).sum();
        let abs_second: f64 = atoms.iter().zip(&probs).map(|(a, &p)| a.norm_sqr() * p).sum();
        let abs_fourth: f64 = atoms
            .iter()
            .zip(&probs)
            .map(|(a, &p)| a.norm_sqr() * a.norm_sqr() * p)
            .sum();
        if (abs_second - 1.0).abs() > 1e-9 {
            return Err(AmpError::invalid(
                "atoms",
                format!(
                    "E|xi|^2 = {abs_second}, expected 1; divide every atom by {} to normalize",
                    abs_second.sqrt()
                ),
            ));
        }
        let psi2 = atoms.iter().map(|a| a.norm()).fold(0.0f64, f64::max);
        Ok(EntryDistribution {
            kind: EnsembleKind::CustomDiscrete { atoms, probs },
            mean,
            pseudo_second: pseudo,
            abs_second,
            abs_fourth,
            psi2_bound: Some(psi2),
        })
    }

    pub fn kind(&self) -> &EnsembleKind {
        &self.kind
    }

    /// `E xi`.
    pub fn mean(&self) -> Complex64 {
        self.mean
    }

    /// `E xi^2` (no conjugation).
    pub fn pseudo_second(&self) -> Complex64 {
        self.pseudo_second
    }

    /// `E |xi|^2`.
    pub fn abs_second(&self) -> f64 {
        self.abs_second
    }

    /// `gamma = E |xi|^4`.
    pub fn abs_fourth(&self) -> f64 {
        self.abs_fourth
    }

    /// Documented (not estimated) upper bound on the sub-Gaussian norm.
    pub fn psi2_bound(&self) -> Option<f64> {
        self.psi2_bound
    }

    /// Stable display name, used in report columns.
    pub fn name(&self) -> String {
        match &self.kind {
            EnsembleKind::ComplexGaussian => "complex-gaussian".to_string(),
            EnsembleKind::Ternary { p } => format!("ternary({p})"),
            EnsembleKind::ComplexRademacher => "complex-rademacher".to_string(),
            EnsembleKind::CustomDiscrete { atoms, .. } => {
                format!("custom-discrete({})", atoms.len())
            }
        }
    }

    /// One draw.  Draw order per entry is fixed (real part before imaginary
    /// part where applicable) so sampling is reproducible.
    pub fn sample_one<R: Rng>(&self, rng: &mut R) -> Complex64 {
        match &self.kind {
            EnsembleKind::ComplexGaussian => {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
            }
            EnsembleKind::Ternary { p } => {
                let amp = 1.0 / (2.0 * p.sqrt());
                let part = |rng: &mut R| {
                    let u: f64 = rng.random();
                    if u < *p {
                        amp
                    } else if u < 2.0 * p {
                        -amp
                    } else {
                        0.0
                    }
                };
                let re = part(rng);
                let im = part(rng);
                Complex64::new(re, im)
            }
            EnsembleKind::ComplexRademacher => {
                let re = if rng.random::<bool>() {
                    FRAC_1_SQRT_2
                } else {
                    -FRAC_1_SQRT_2
                };
                let im = if rng.random::<bool>() {
                    FRAC_1_SQRT_2
                } else {
                    -FRAC_1_SQRT_2
                };
                Complex64::new(re, im)
            }
            EnsembleKind::CustomDiscrete { atoms, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (a, &p) in atoms.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *a;
                    }
                }
                *atoms.last().expect("validated nonempty")
            }
        }
    }
}

/// Parse an ensemble by name plus a flat real parameter list.
///
/// * `"complex-gaussian"`, `"complex-rademacher"`: no parameters.
/// * `"ternary"`: one parameter `p`.
/// * `"custom-discrete"`: parameters flattened as `(re, im, prob)` triples.
pub fn make_ensemble(kind: &str, params: &[f64]) -> Result<EntryDistribution> {
    match kind {
        "complex-gaussian" => {
            if !params.is_empty() {
                return Err(AmpError::invalid("params", "complex-gaussian takes no parameters"));
            }
            Ok(EntryDistribution::complex_gaussian())
        }
        "complex-rademacher" => {
            if !params.is_empty() {
                return Err(AmpError::invalid(
                    "params",
                    "complex-rademacher takes no parameters",
                ));
            }
            Ok(EntryDistribution::complex_rademacher())
        }
        "ternary" => {
            if params.len() != 1 {
                return Err(AmpError::invalid("params", "ternary takes exactly one parameter p"));
            }
            EntryDistribution::ternary(params[0])
        }
        "custom-discrete" => {
            if params.is_empty() || params.len() % 3 != 0 {
                return Err(AmpError::invalid(
                    "params",
                    "custom-discrete takes (re, im, prob) triples",
                ));
            }
            let mut atoms = Vec::with_capacity(params.len() / 3);
            let mut probs = Vec::with_capacity(params.len() / 3);
            for triple in params.chunks_exact(3) {
                atoms.push(Complex64::new(triple[0], triple[1]));
                probs.push(triple[2]);
            }
            EntryDistribution::custom_discrete(atoms, probs)
        }
        other => Err(AmpError::invalid(
            "kind",
            format!(
                "unknown ensemble `{other}`; expected complex-gaussian | ternary | complex-rademacher | custom-discrete"
            ),
        )),
    }
}

/// `m` measurement vectors of dimension `d`, stored as the rows of an
/// `m x d` matrix.  Row `j` holds the entries of `a_j` exactly as drawn
/// (row-major sampling order), so identical `(ensemble, m, d, seed)` inputs
/// reproduce identical entries bit-for-bit.
#[derive(Debug, Clone)]
pub struct SensingMatrix {
    pub m: usize,
    pub d: usize,
    entries: DMatrix<Complex64>,
    pub ensemble: String,
    pub seed: u64,
}

impl SensingMatrix {
    /// Wrap an explicit matrix; mostly useful in tests and the FFI layer.
    pub fn from_entries(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(AmpError::invalid("entries", "matrix must be nonempty"));
        }
        Ok(SensingMatrix {
            m: entries.nrows(),
            d: entries.ncols(),
            ensemble: "explicit".to_string(),
            seed: 0,
            entries,
        })
    }

    /// Raw entry access: `entry(j, i)` is the `i`-th coordinate of `a_j`.
    pub fn entry(&self, j: usize, i: usize) -> Complex64 {
        self.entries[(j, i)]
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// All `m` inner products `<a_j, x> = sum_i conj(a_j[i]) x_i` in one
    /// matrix-vector product: `conj(A x_conj)`.
    pub fn forward(&self, x: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        if x.len() != self.d {
            return Err(AmpError::DimensionMismatch(format!(
                "signal has length {}, matrix columns {}",
                x.len(),
                self.d
            )));
        }
        let mut z = &self.entries * x.conjugate();
        for v in z.iter_mut() {
            *v = v.conj();
        }
        Ok(z)
    }

    /// `sum_j c_j a_j`, the accumulation adjoint to [`Self::forward`].
    pub fn adjoint(&self, c: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        if c.len() != self.m {
            return Err(AmpError::DimensionMismatch(format!(
                "coefficient vector has length {}, matrix rows {}",
                c.len(),
                self.m
            )));
        }
        Ok(self.entries.tr_mul(c))
    }

    /// Dense matrix `F` with `F x = (<a_j, x>)_j`, i.e. the entrywise
    /// conjugate of the stored rows.  Materialized by callers that need a
    /// factorization; everything iterative should go through
    /// [`Self::forward`] / [`Self::adjoint`] instead.
    pub fn forward_matrix(&self) -> DMatrix<Complex64> {
        self.entries.conjugate()
    }
}

/// Draw an `m x d` sensing matrix.  Entries are sampled in row-major order
/// from a ChaCha stream seeded with `seed`.
pub fn sample_matrix(
    dist: &EntryDistribution,
    m: usize,
    d: usize,
    seed: u64,
) -> Result<SensingMatrix> {
    if m == 0 {
        return Err(AmpError::invalid("m", "need at least one row"));
    }
    if d == 0 {
        return Err(AmpError::invalid("d", "need at least one column"));
    }
    let Some(total) = m.checked_mul(d) else {
        return Err(AmpError::invalid("m", format!("m * d overflows usize: {m} * {d}")));
    };
    let mut rng = rng_from_seed(seed);
    let entries =
        DMatrix::from_row_iterator(m, d, (0..total).map(|_| dist.sample_one(&mut rng)));
    Ok(SensingMatrix {
        m,
        d,
        entries,
        ensemble: dist.name(),
        seed,
    })
}

/// Empirical moments of an ensemble, for validating the analytic ones.
#[derive(Debug, Clone, Copy)]
pub struct Moments {
    pub mean: Complex64,
    pub pseudo_second: Complex64,
    pub abs_second: f64,
    pub abs_fourth: f64,
    pub n: usize,
}

/// Monte Carlo moment estimates over `n >= 1000` draws.
pub fn empirical_moments(dist: &EntryDistribution, n: usize, seed: u64) -> Result<Moments> {
    if n < 1000 {
        return Err(AmpError::invalid(
            "n",
            format!("need at least 1000 draws for a moment estimate, got {n}"),
        ));
    }
    let mut rng = rng_from_seed(seed);
    let mut mean = Complex64::ZERO;
    let mut pseudo = Complex64::ZERO;
    let mut second = 0.0;
    let mut fourth = 0.0;
    for _ in 0..n {
        let xi = dist.sample_one(&mut rng);
        mean += xi;
        pseudo += xi * xi;
        let a2 = xi.norm_sqr();
        second += a2;
        fourth += a2 * a2;
    }
    let nf = n as f64;
    Ok(Moments {
        mean: mean / nf,
        pseudo_second: pseudo / nf,
        abs_second: second / nf,
        abs_fourth: fourth / nf,
        n,
    })
}

/// Additive real noise applied to the amplitudes, with cached summaries.
#[derive(Debug, Clone)]
pub struct NoiseVector {
    values: DVector<f64>,
    l2_norm: f64,
    sum: f64,
    /// `|sum| / (sqrt(m) * l2_norm)`, in `[0, 1]` by Cauchy-Schwarz; `0` for
    /// the zero vector.  Measures how far the noise is from zero-mean: a
    /// constant vector scores exactly 1.
    bias_ratio: f64,
}

impl NoiseVector {
    pub fn from_values(values: DVector<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(AmpError::invalid("values", "noise vector must be nonempty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(AmpError::numerical("noise vector contains NaN/Inf"));
        }
        let l2_norm = values.norm();
        let sum = values.sum();
        let m = values.len() as f64;
        let bias_ratio = if l2_norm == 0.0 {
            0.0
        } else {
            (sum.abs() / (m.sqrt() * l2_norm)).min(1.0)
        };
        Ok(NoiseVector {
            values,
            l2_norm,
            sum,
            bias_ratio,
        })
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn bias_ratio(&self) -> f64 {
        self.bias_ratio
    }
}

/// Noise generators for [`make_noise`].
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseKind {
    ZeroMeanGaussian { sigma: f64 },
    ShiftedGaussian { mu: f64, sigma: f64 },
    Constant { value: f64 },
    Explicit { values: Vec<f64> },
}

/// Build a noise vector of length `m`.  Gaussian kinds draw from a ChaCha
/// stream seeded with `seed`; deterministic kinds ignore the seed.
pub fn make_noise(kind: &NoiseKind, m: usize, seed: u64) -> Result<NoiseVector> {
    if m == 0 {
        return Err(AmpError::invalid("m", "noise length must be positive"));
    }
    match kind {
        NoiseKind::ZeroMeanGaussian { sigma } => {
            if *sigma < 0.0 || !sigma.is_finite() {
                return Err(AmpError::invalid("sigma", format!("need sigma >= 0, got {sigma}")));
            }
            let mut rng = rng_from_seed(seed);
            let values = DVector::from_iterator(
                m,
                (0..m).map(|_| rng.sample::<f64, _>(StandardNormal) * sigma),
            );
            NoiseVector::from_values(values)
        }
        NoiseKind::ShiftedGaussian { mu, sigma } => {
            if *sigma < 0.0 || !sigma.is_finite() {
                return Err(AmpError::invalid("sigma", format!("need sigma >= 0, got {sigma}")));
            }
            if !mu.is_finite() {
                return Err(AmpError::invalid("mu", "shift must be finite"));
            }
            let mut rng = rng_from_seed(seed);
            let values = DVector::from_iterator(
                m,
                (0..m).map(|_| mu + rng.sample::<f64, _>(StandardNormal) * sigma),
            );
            NoiseVector::from_values(values)
        }
        NoiseKind::Constant { value } => {
            if !value.is_finite() {
                return Err(AmpError::invalid("value", "constant noise must be finite"));
            }
            let values = DVector::from_element(m, *value);
            let mut noise = NoiseVector::from_values(values)?;
            // A constant vector has bias_ratio 1 by definition; pin it exactly
            // rather than through sqrt round-off.
            if *value != 0.0 {
                noise.bias_ratio = 1.0;
            }
            Ok(noise)
        }
        NoiseKind::Explicit { values } => {
            if values.len() != m {
                return Err(AmpError::DimensionMismatch(format!(
                    "explicit noise has length {}, expected {m}",
                    values.len()
                )));
            }
            NoiseVector::from_values(DVector::from_column_slice(values))
        }
    }
}

/// Amplitude observations of a signal, plus the noise summaries needed by
/// reports.  Entries may be negative when the noise is; no clipping happens.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    pub b: DVector<f64>,
    pub m: usize,
    pub noise_l2: f64,
    pub noise_sum: f64,
    pub noise_bias_ratio: f64,
}

/// `b_j = |<a_j, x0>| + eta_j`.
pub fn observe(
    a: &SensingMatrix,
    x0: &DVector<Complex64>,
    eta: &NoiseVector,
) -> Result<MeasurementSet> {
    if eta.len() != a.m {
        return Err(AmpError::DimensionMismatch(format!(
            "noise has length {}, matrix rows {}",
            eta.len(),
            a.m
        )));
    }
    let z = a.forward(x0)?;
    let b = DVector::from_iterator(
        a.m,
        z.iter().zip(eta.values().iter()).map(|(zj, ej)| zj.norm() + ej),
    );
    Ok(MeasurementSet {
        b,
        m: a.m,
        noise_l2: eta.l2_norm(),
        noise_sum: eta.sum(),
        noise_bias_ratio: eta.bias_ratio(),
    })
}

/// Noise radius calibrated to a chi-square tail:
/// `sqrt(m + 2 sqrt(m ln m) + 2 ln m) * sigma` (natural log).  Requires
/// `m >= 2` and `sigma >= 0`.
pub fn chi_square_epsilon(m: usize, sigma: f64) -> Result<f64> {
    if m < 2 {
        return Err(AmpError::invalid("m", format!("need m >= 2, got {m}")));
    }
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(AmpError::invalid("sigma", format!("need sigma >= 0, got {sigma}")));
    }
    let mf = m as f64;
    let logm = mf.ln();
    Ok((mf + 2.0 * (mf * logm).sqrt() + 2.0 * logm).sqrt() * sigma)
}

/// Largest singular value of the forward operator `x -> (<a_j, x>)_j`,
/// estimated by `iters >= 10` rounds of power iteration on its Gram
/// operator.  Returns 0 for the zero matrix.
pub fn operator_norm_estimate(a: &SensingMatrix, iters: usize) -> Result<f64> {
    if iters < 10 {
        return Err(AmpError::invalid("iters", format!("need iters >= 10, got {iters}")));
    }
    let d = a.d;
    let mut v = DVector::from_element(d, Complex64::new(1.0 / (d as f64).sqrt(), 0.0));
    let mut sigma = 0.0;
    for _ in 0..iters {
        let w = a.forward(&v)?;
        sigma = w.norm();
        if sigma == 0.0 {
            return Ok(0.0);
        }
        // Gram step: v <- F^H F v renormalized, where F = conj(A) is the
        // forward matrix, so F^H w = A^T w.
        let mut u = a.entries.tr_mul(&w);
        let n = u.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(AmpError::numerical(
                "power iteration collapsed; matrix may contain NaN/Inf",
            ));
        }
        u /= Complex64::new(n, 0.0);
        v = u;
    }
    Ok(sigma)
}
