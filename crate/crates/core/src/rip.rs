//! Monte Carlo restricted-isometry diagnostics for the lifted operator
//! `A(X) = (a_j^* X a_j)_j` acting on rank-two differences of sparse
//! rank-one matrices.
//!
//! Probes are drawn as `X = lambda1 u1 u1^* + lambda2 u2 u2^*` with
//! orthonormal `u1 perp u2` sharing a random `k`-coordinate support and
//! `(lambda1, lambda2)` uniform on the unit circle, so `||X||_F = 1` holds
//! by construction and the sign mixture exercises the cancellation regime
//! where lower isometry bounds actually bind.  `A(X)` is evaluated in
//! factored form, two forward products per probe; no `d x d` matrix is ever
//! formed.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use std::f64::consts::TAU;

use crate::error::{AmpError, Result};
use crate::measurements::{EntryDistribution, SensingMatrix};
use crate::rng::{rng_from_seed, trial_seed};

/// A unit-Frobenius rank-(<=2) probe `lambda1 u1 u1^* + lambda2 u2 u2^*`.
#[derive(Debug, Clone)]
pub struct LiftedSample {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Unit vectors supported on `support`; entries off it are exactly zero.
    pub u1: DVector<Complex64>,
    pub u2: DVector<Complex64>,
    /// Sorted support indices, `|support| = k`.
    pub support: Vec<usize>,
}

impl LiftedSample {
    /// `||X||_F^2 = lambda1^2 + lambda2^2` thanks to orthonormal factors.
    pub fn frobenius_norm(&self) -> f64 {
        (self.lambda1 * self.lambda1 + self.lambda2 * self.lambda2).sqrt()
    }
}

/// Draw a probe of support size `k` in dimension `d`.
///
/// Draw order is fixed: support, then `u1`, then `u2`, then the mixing
/// angle, so probes are reproducible from the seed alone.  `k = 1`
/// degenerates to a rank-one probe (`u2 = 0`, `lambda2 = 0`,
/// `lambda1 = +-1`).
pub fn sample_lifted(d: usize, k: usize, seed: u64) -> Result<LiftedSample> {
    if d == 0 {
        return Err(AmpError::invalid("d", "need d >= 1"));
    }
    if k == 0 || k > d {
        return Err(AmpError::invalid("k", format!("need 1 <= k <= d = {d}, got {k}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut support = rand::seq::index::sample(&mut rng, d, k).into_vec();
    support.sort_unstable();

    let dist = EntryDistribution::complex_gaussian();
    let zero = DVector::from_element(d, Complex64::new(0.0, 0.0));
    let draw_on_support = |rng: &mut rand_chacha::ChaCha8Rng| {
        let mut v = zero.clone();
        for &i in &support {
            v[i] = dist.sample_one(rng);
        }
        v
    };

    let mut u1 = draw_on_support(&mut rng);
    let n1 = u1.norm();
    if n1 == 0.0 {
        return Err(AmpError::numerical("degenerate probe draw: u1 = 0"));
    }
    u1 /= Complex64::new(n1, 0.0);

    if k == 1 {
        let lambda1 = if rng.random::<bool>() { 1.0 } else { -1.0 };
        return Ok(LiftedSample {
            lambda1,
            lambda2: 0.0,
            u1,
            u2: zero,
            support,
        });
    }

    let mut u2 = draw_on_support(&mut rng);
    // Gram-Schmidt against u1.
    let proj = u1.dotc(&u2);
    u2 -= u1.map(|v| v * proj);
    let n2 = u2.norm();
    if n2 <= 1e-12 {
        return Err(AmpError::numerical("degenerate probe draw: u2 parallel to u1"));
    }
    u2 /= Complex64::new(n2, 0.0);

    let phi: f64 = rng.random::<f64>() * TAU;
    Ok(LiftedSample {
        lambda1: phi.cos(),
        lambda2: phi.sin(),
        u1,
        u2,
        support,
    })
}

/// The fixed cancellation witness `X = (e1 e1^* - e2 e2^*) / sqrt(2)`.
/// Against any matrix whose entries all share one modulus (the
/// complex-rademacher ensemble), `A(X)` vanishes identically.
pub fn witness_sample(d: usize) -> Result<LiftedSample> {
    if d < 2 {
        return Err(AmpError::invalid("d", format!("witness needs d >= 2, got {d}")));
    }
    let mut u1 = DVector::from_element(d, Complex64::new(0.0, 0.0));
    let mut u2 = u1.clone();
    u1[0] = Complex64::new(1.0, 0.0);
    u2[1] = Complex64::new(1.0, 0.0);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok(LiftedSample {
        lambda1: s,
        lambda2: -s,
        u1,
        u2,
        support: vec![0, 1],
    })
}

/// `A(X)` in factored form:
/// entry `j` is `lambda1 |<a_j, u1>|^2 + lambda2 |<a_j, u2>|^2`.
pub fn apply_lifted(a: &SensingMatrix, xs: &LiftedSample) -> Result<DVector<f64>> {
    let z1 = a.forward(&xs.u1)?;
    if xs.lambda2 == 0.0 && xs.u2.norm() == 0.0 {
        return Ok(DVector::from_iterator(
            a.m,
            z1.iter().map(|z| xs.lambda1 * z.norm_sqr()),
        ));
    }
    let z2 = a.forward(&xs.u2)?;
    Ok(DVector::from_iterator(
        a.m,
        z1.iter()
            .zip(z2.iter())
            .map(|(p, q)| xs.lambda1 * p.norm_sqr() + xs.lambda2 * q.norm_sqr()),
    ))
}

/// `A(x x^* - y y^*)` without lifting: entry `j` is
/// `|<a_j, x>|^2 - |<a_j, y>|^2`.  Used by the trimmed diagnostics.
pub fn apply_lifted_diff(
    a: &SensingMatrix,
    x: &DVector<Complex64>,
    y: &DVector<Complex64>,
) -> Result<DVector<f64>> {
    let zx = a.forward(x)?;
    let zy = a.forward(y)?;
    Ok(DVector::from_iterator(
        a.m,
        zx.iter().zip(zy.iter()).map(|(p, q)| p.norm_sqr() - q.norm_sqr()),
    ))
}

/// `(1/m) ||A(X)||_1` for a unit-Frobenius probe.
pub fn rip_ratio(a: &SensingMatrix, xs: &LiftedSample) -> Result<f64> {
    let v = apply_lifted(a, xs)?;
    Ok(v.iter().map(|t| t.abs()).sum::<f64>() / a.m as f64)
}

/// Adversarially trimmed ratio: drop the `ceil(beta0 * m)` largest
/// magnitudes of `A(X)` and average the rest over `m`.  This is the exact
/// minimum of `(1/m) ||A_I(X)||_1` over index sets of size at least
/// `(1 - beta0) m`.  `beta0 = 0` reproduces [`rip_ratio`].
pub fn strong_rip_ratio(a: &SensingMatrix, xs: &LiftedSample, beta0: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&beta0) {
        return Err(AmpError::invalid(
            "beta0",
            format!("need 0 <= beta0 < 1, got {beta0}"),
        ));
    }
    let v = apply_lifted(a, xs)?;
    let mut mags: Vec<f64> = v.iter().map(|t| t.abs()).collect();
    mags.sort_unstable_by(|p, q| q.partial_cmp(p).expect("finite magnitudes"));
    let drop = (beta0 * a.m as f64).ceil() as usize;
    Ok(mags.iter().skip(drop).sum::<f64>() / a.m as f64)
}

/// Histogram of plain ratios observed during estimation, 50 bins over
/// `[0, hi]`.
#[derive(Debug, Clone)]
pub struct RatioHistogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u32>,
}

pub const HISTOGRAM_BINS: usize = 50;

/// Monte Carlo isometry-constant estimates over random probes.
#[derive(Debug, Clone)]
pub struct RipEstimate {
    /// Smallest plain ratio observed (lower isometry constant estimate).
    pub c_minus: f64,
    /// Largest plain ratio observed (upper isometry constant estimate).
    pub c_plus: f64,
    /// Smallest trimmed ratio observed.
    pub strong_c_minus: f64,
    pub beta0: f64,
    pub trials: usize,
    pub histogram: RatioHistogram,
}

/// Estimate isometry constants from `trials >= 100` random probes of
/// support size `k`, plus any `extras` (e.g. [`witness_sample`]) appended to
/// the probe set.  Probes are evaluated concurrently with per-trial derived
/// seeds and reduced in a fixed order, so the estimate is deterministic.
pub fn estimate_rip_constants_with(
    a: &SensingMatrix,
    k: usize,
    trials: usize,
    beta0: f64,
    seed: u64,
    extras: &[LiftedSample],
) -> Result<RipEstimate> {
    if trials < 100 {
        return Err(AmpError::invalid(
            "trials",
            format!("need at least 100 trials for a stable estimate, got {trials}"),
        ));
    }
    if !(0.0..1.0).contains(&beta0) {
        return Err(AmpError::invalid(
            "beta0",
            format!("need 0 <= beta0 < 1, got {beta0}"),
        ));
    }
    let pairs: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(f64, f64)> {
            let xs = sample_lifted(a.d, k, trial_seed(seed, t as u64))?;
            Ok((rip_ratio(a, &xs)?, strong_rip_ratio(a, &xs, beta0)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ratios: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut strong: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    for xs in extras {
        ratios.push(rip_ratio(a, xs)?);
        strong.push(strong_rip_ratio(a, xs, beta0)?);
    }

    let c_minus = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let c_plus = ratios.iter().copied().fold(0.0f64, f64::max);
    let strong_c_minus = strong.iter().copied().fold(f64::INFINITY, f64::min);

    let hi = if c_plus > 0.0 { c_plus } else { 1.0 };
    let mut counts = vec![0u32; HISTOGRAM_BINS];
    for &r in &ratios {
        let idx = ((r / hi) * HISTOGRAM_BINS as f64) as usize;
        counts[idx.min(HISTOGRAM_BINS - 1)] += 1;
    }
    Ok(RipEstimate {
        c_minus,
        c_plus,
        strong_c_minus,
        beta0,
        trials: ratios.len(),
        histogram: RatioHistogram {
            lo: 0.0,
            hi,
            counts,
        },
    })
}

/// [`estimate_rip_constants_with`] without extra probes.
pub fn estimate_rip_constants(
    a: &SensingMatrix,
    k: usize,
    trials: usize,
    beta0: f64,
    seed: u64,
) -> Result<RipEstimate> {
    estimate_rip_constants_with(a, k, trials, beta0, seed, &[])
}

/// Default trimming fraction for a tail parameter `c0 > 0`:
/// `min(c0 / 8, exp(-c0 / 8), 1/4)`.
pub fn beta0_default(c0: f64) -> Result<f64> {
    if !(c0 > 0.0) || !c0.is_finite() {
        return Err(AmpError::invalid("c0", format!("need c0 > 0, got {c0}")));
    }
    Ok((c0 / 8.0).min((-c0 / 8.0).exp()).min(0.25))
}

/// Indices of the `floor((1 - beta0) m)` rows with the smallest
/// `xi_j = |<a_j, x_hat>| + |<a_j, x0>|`, in ascending `xi` order with ties
/// broken by original index.  Indices are 0-based.
pub fn trimmed_index_set(
    a: &SensingMatrix,
    x_hat: &DVector<Complex64>,
    x0: &DVector<Complex64>,
    beta0: f64,
) -> Result<Vec<usize>> {
    if !(0.0..1.0).contains(&beta0) {
        return Err(AmpError::invalid(
            "beta0",
            format!("need 0 <= beta0 < 1, got {beta0}"),
        ));
    }
    let zh = a.forward(x_hat)?;
    let z0 = a.forward(x0)?;
    let xi: Vec<f64> = zh
        .iter()
        .zip(z0.iter())
        .map(|(p, q)| p.norm() + q.norm())
        .collect();
    let mut order: Vec<usize> = (0..a.m).collect();
    order.sort_by(|&p, &q| xi[p].partial_cmp(&xi[q]).expect("finite xi").then(p.cmp(&q)));
    let keep = ((1.0 - beta0) * a.m as f64).floor() as usize;
    order.truncate(keep);
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurements::{sample_matrix, EntryDistribution};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    #[test]
    fn sampled_probe_is_unit_frobenius_and_orthonormal() {
        for seed in 0..20 {
            let xs = sample_lifted(12, 4, seed).unwrap();
            assert_relative_eq!(xs.frobenius_norm(), 1.0, max_relative = 1e-12);
            assert_relative_eq!(xs.u1.norm(), 1.0, max_relative = 1e-12);
            assert_relative_eq!(xs.u2.norm(), 1.0, max_relative = 1e-12);
            assert!(xs.u1.dotc(&xs.u2).norm() <= 1e-12);
            assert_eq!(xs.support.len(), 4);
            // Off-support coordinates exactly zero.
            for i in 0..12 {
                if !xs.support.contains(&i) {
                    assert_eq!(xs.u1[i], Complex64::new(0.0, 0.0));
                    assert_eq!(xs.u2[i], Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn sample_lifted_is_deterministic_and_validates() {
        let a = sample_lifted(8, 3, 5).unwrap();
        let b = sample_lifted(8, 3, 5).unwrap();
        assert_eq!(a.u1, b.u1);
        assert_eq!(a.u2, b.u2);
        assert_eq!(a.lambda1, b.lambda1);
        assert!(sample_lifted(8, 0, 1).is_err());
        assert!(sample_lifted(8, 9, 1).is_err());
    }

    #[test]
    fn rank_one_degenerate_probe() {
        let xs = sample_lifted(6, 1, 9).unwrap();
        assert_eq!(xs.lambda2, 0.0);
        assert_eq!(xs.u2.norm(), 0.0);
        assert_relative_eq!(xs.lambda1.abs(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(xs.frobenius_norm(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn apply_lifted_matches_dense_evaluation() {
        let dist = EntryDistribution::complex_gaussian();
        let a = sample_matrix(&dist, 10, 5, 3).unwrap();
        let xs = sample_lifted(5, 3, 7).unwrap();
        // Dense X = l1 u1 u1^* + l2 u2 u2^*.
        let mut xmat = DMatrix::from_element(5, 5, Complex64::new(0.0, 0.0));
        for r in 0..5 {
            for c in 0..5 {
                xmat[(r, c)] = xs.u1[r] * xs.u1[c].conj() * xs.lambda1
                    + xs.u2[r] * xs.u2[c].conj() * xs.lambda2;
            }
        }
        let v = apply_lifted(&a, &xs).unwrap();
        for j in 0..10 {
            // a_j^* X a_j with a_j[i] = entry(j, i).
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..5 {
                for c in 0..5 {
                    acc += a.entry(j, r).conj() * xmat[(r, c)] * a.entry(j, c);
                }
            }
            assert!(acc.im.abs() <= 1e-10);
            assert_relative_eq!(v[j], acc.re, epsilon = 1e-10);
        }
    }

    #[test]
    fn witness_annihilates_unimodular_ensembles() {
        let dist = EntryDistribution::complex_rademacher();
        let a = sample_matrix(&dist, 40, 6, 11).unwrap();
        let w = witness_sample(6).unwrap();
        let v = apply_lifted(&a, &w).unwrap();
        for j in 0..40 {
            assert_eq!(v[j], 0.0);
        }
        assert_eq!(rip_ratio(&a, &w).unwrap(), 0.0);
        // Strong ratio can only be smaller.
        assert_eq!(strong_rip_ratio(&a, &w, 0.25).unwrap(), 0.0);
    }

    #[test]
    fn strong_ratio_bounds_and_edge_cases() {
        let dist = EntryDistribution::complex_gaussian();
        let a = sample_matrix(&dist, 50, 6, 13).unwrap();
        let xs = sample_lifted(6, 3, 17).unwrap();
        let plain = rip_ratio(&a, &xs).unwrap();
        let strong = strong_rip_ratio(&a, &xs, 0.25).unwrap();
        assert!(strong <= plain);
        assert!(strong >= 0.0);
        // beta0 = 0 reproduces the plain ratio.
        assert_relative_eq!(strong_rip_ratio(&a, &xs, 0.0).unwrap(), plain, max_relative = 1e-12);
        // Monotone nonincreasing in beta0.
        let mut prev = plain;
        for b in [0.1, 0.2, 0.4, 0.8] {
            let s = strong_rip_ratio(&a, &xs, b).unwrap();
            assert!(s <= prev + 1e-15);
            prev = s;
        }
        assert!(strong_rip_ratio(&a, &xs, 1.0).is_err());
        assert!(strong_rip_ratio(&a, &xs, -0.1).is_err());
    }

    #[test]
    fn estimate_orders_constants_and_is_deterministic() {
        let dist = EntryDistribution::complex_gaussian();
        let a = sample_matrix(&dist, 120, 8, 19).unwrap();
        let e1 = estimate_rip_constants(&a, 4, 200, 0.25, 23).unwrap();
        let e2 = estimate_rip_constants(&a, 4, 200, 0.25, 23).unwrap();
        assert_eq!(e1.c_minus, e2.c_minus);
        assert_eq!(e1.c_plus, e2.c_plus);
        assert_eq!(e1.histogram.counts, e2.histogram.counts);
        assert!(0.0 <= e1.strong_c_minus);
        assert!(e1.strong_c_minus <= e1.c_minus);
        assert!(e1.c_minus <= e1.c_plus);
        assert_eq!(e1.trials, 200);
        assert_eq!(e1.histogram.counts.iter().sum::<u32>(), 200);
        assert!(estimate_rip_constants(&a, 4, 99, 0.25, 23).is_err());
    }

    #[test]
    fn witness_injection_zeroes_the_lower_constant() {
        let dist = EntryDistribution::complex_rademacher();
        let a = sample_matrix(&dist, 80, 6, 29).unwrap();
        let w = witness_sample(6).unwrap();
        let e = estimate_rip_constants_with(&a, 3, 100, 0.25, 31, &[w]).unwrap();
        assert_eq!(e.c_minus, 0.0);
        assert_eq!(e.strong_c_minus, 0.0);
        assert_eq!(e.trials, 101);
    }

    #[test]
    fn beta0_default_cases() {
        assert_relative_eq!(beta0_default(2.0).unwrap(), 0.25, max_relative = 1e-15);
        assert_relative_eq!(beta0_default(8.0).unwrap(), 0.25, max_relative = 1e-15);
        // Small c0: the linear branch wins.
        assert_relative_eq!(beta0_default(0.4).unwrap(), 0.05, max_relative = 1e-15);
        assert!(beta0_default(0.0).is_err());
        assert!(beta0_default(-1.0).is_err());
        // Always in (0, 1/4].
        for c0 in [0.01, 0.5, 1.0, 3.0, 10.0, 100.0] {
            let b = beta0_default(c0).unwrap();
            assert!(b > 0.0 && b <= 0.25);
        }
    }

    #[test]
    fn trimmed_index_set_orders_and_truncates() {
        // Build a 4 x 1 matrix whose xi values are (3, 1, 4, 2) by choosing
        // x_hat, x0 = e1 scaled: xi_j = 2 |A_j1|.
        let entries = DMatrix::from_row_slice(
            4,
            1,
            &[
                Complex64::new(1.5, 0.0),
                Complex64::new(0.5, 0.0),
                Complex64::new(2.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        );
        let a = SensingMatrix::from_entries(entries).unwrap();
        let e1 = DVector::from_element(1, Complex64::new(1.0, 0.0));
        let idx = trimmed_index_set(&a, &e1, &e1, 0.25).unwrap();
        // xi = (3, 1, 4, 2): ascending order is rows 1, 3, 0 after dropping
        // ceil(0.25 * 4) = 1 row.
        assert_eq!(idx, vec![1, 3, 0]);
        // beta0 = 0 keeps every index.
        let all = trimmed_index_set(&a, &e1, &e1, 0.0).unwrap();
        assert_eq!(all.len(), 4);
        let mut sorted = all.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
    }

    #[test]
    fn trimmed_index_set_breaks_ties_by_index() {
        let entries = DMatrix::from_row_slice(
            3,
            1,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        );
        let a = SensingMatrix::from_entries(entries).unwrap();
        let e1 = DVector::from_element(1, Complex64::new(1.0, 0.0));
        let idx = trimmed_index_set(&a, &e1, &e1, 0.4).unwrap();
        // floor(0.6 * 3) = 1 kept; ties resolve to the smallest index.
        assert_eq!(idx, vec![0]);
    }
}
