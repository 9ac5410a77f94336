//! Distances that ignore the global phase.
//!
//! Amplitude measurements cannot distinguish `x` from `e^{i theta} x`, so
//! error is measured on the orbit: `phase_dist(x, y)` is the minimum of
//! `||x - e^{i theta} y||_2` over all phases, and `lifted_dist` compares the
//! rank-one outer products `x x^*` and `y y^*` without ever materializing
//! them.

use nalgebra::DVector;
use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::error::{AmpError, Result};
use crate::measurements::SensingMatrix;

fn check_same_len(x: &DVector<Complex64>, y: &DVector<Complex64>) -> Result<()> {
    if x.len() != y.len() {
        return Err(AmpError::DimensionMismatch(format!(
            "vectors have lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(AmpError::invalid("x", "vectors must be nonempty"));
    }
    Ok(())
}

/// `<x, y> = sum_i conj(x_i) y_i`.
fn inner(x: &DVector<Complex64>, y: &DVector<Complex64>) -> Complex64 {
    x.dotc(y)
}

/// `min_theta ||x - e^{i theta} y||_2`, computed in closed form as
/// `sqrt(max(0, ||x||^2 + ||y||^2 - 2 |<x, y>|))`.  The clamp guards the
/// round-off case where the radicand dips a hair below zero.
pub fn phase_dist(x: &DVector<Complex64>, y: &DVector<Complex64>) -> Result<f64> {
    check_same_len(x, y)?;
    let r = x.norm_squared() + y.norm_squared() - 2.0 * inner(x, y).norm();
    Ok(r.max(0.0).sqrt())
}

/// `y` rotated onto `x`'s phase orbit: `aligned_y = e^{i theta} y` with
/// `<x, aligned_y>` real and nonnegative.
#[derive(Debug, Clone)]
pub struct AlignedPair {
    /// Optimal rotation in `[0, 2 pi)`; `0` when `<x, y> = 0` (any rotation
    /// is optimal, the identity is chosen).
    pub theta: f64,
    pub aligned_y: DVector<Complex64>,
    /// `||x - aligned_y||_2`, which equals [`phase_dist`] at the optimum.
    pub dist: f64,
}

/// Rotate `y` by the loss-minimizing global phase.
pub fn align(x: &DVector<Complex64>, y: &DVector<Complex64>) -> Result<AlignedPair> {
    check_same_len(x, y)?;
    let ip = inner(x, y);
    // <x, e^{i theta} y> = e^{i theta} <x, y> is real nonnegative at
    // theta = -arg <x, y>.
    let theta = if ip.norm() == 0.0 {
        0.0
    } else {
        let t = -ip.arg();
        if t < 0.0 {
            t + TAU
        } else {
            t % TAU
        }
    };
    let rot = Complex64::from_polar(1.0, theta);
    let aligned_y = y.map(|v| v * rot);
    let dist = (x - &aligned_y).norm();
    Ok(AlignedPair {
        theta,
        aligned_y,
        dist,
    })
}

/// Frobenius distance between the lifted matrices,
/// `||x x^* - y y^*||_F = sqrt(||x||^4 + ||y||^4 - 2 |<x, y>|^2)`,
/// evaluated without forming any `d x d` matrix.
pub fn lifted_dist(x: &DVector<Complex64>, y: &DVector<Complex64>) -> Result<f64> {
    check_same_len(x, y)?;
    let nx = x.norm_squared();
    let ny = y.norm_squared();
    let ip = inner(x, y).norm_sqr();
    Ok((nx * nx + ny * ny - 2.0 * ip).max(0.0).sqrt())
}

/// Data-fit residual `sqrt(sum_j (|<a_j, x>| - b_j)^2)`.
pub fn residual(a: &SensingMatrix, x: &DVector<Complex64>, b: &DVector<f64>) -> Result<f64> {
    if b.len() != a.m {
        return Err(AmpError::DimensionMismatch(format!(
            "observations have length {}, matrix rows {}",
            b.len(),
            a.m
        )));
    }
    let z = a.forward(x)?;
    let ss: f64 = z
        .iter()
        .zip(b.iter())
        .map(|(zj, bj)| {
            let r = zj.norm() - bj;
            r * r
        })
        .sum();
    Ok(ss.sqrt())
}
