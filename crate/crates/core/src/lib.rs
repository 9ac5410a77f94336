//! Amplitude-based complex phase retrieval: measurement synthesis,
//! phase-invariant error metrics, gradient and projection solvers for the
//! amplitude least-squares model, their sparse counterparts, and Monte
//! Carlo diagnostics for the lifted measurement operator.
//!
//! The inner product is conjugate-linear in the first argument throughout:
//! `<a, x> = sum_i conj(a_i) x_i`.

pub mod error;
pub mod harness;
pub mod measurements;
pub mod metrics;
pub mod rip;
pub mod rng;
pub mod solvers;
pub mod sparse_solvers;

pub use error::{AmpError, Result};
pub use measurements::{
    chi_square_epsilon, empirical_moments, make_ensemble, make_noise, observe,
    operator_norm_estimate, sample_matrix, EnsembleKind, EntryDistribution, MeasurementSet,
    Moments, NoiseKind, NoiseVector, SensingMatrix,
};
pub use metrics::{align, lifted_dist, phase_dist, residual, AlignedPair};
pub use rip::{
    apply_lifted, apply_lifted_diff, beta0_default, estimate_rip_constants,
    estimate_rip_constants_with, rip_ratio, sample_lifted, strong_rip_ratio, trimmed_index_set,
    witness_sample, LiftedSample, RatioHistogram, RipEstimate,
};
pub use solvers::{
    alternating_projection, amplitude_flow, loss, spectral_init, stationarity_residual, InitMode,
    SolverConfig, SolverResult, SpectralInit, Stationarity, CONVERGENCE_CERTIFICATE,
};
pub use sparse_solvers::{
    feasibility_check, project_l1_ball, sparse_amplitude_flow, sparse_spectral_init,
    zero_solution_check, SparseConfig,
};
