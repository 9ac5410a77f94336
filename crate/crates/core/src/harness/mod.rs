//! Experiment harness: configuration, runners, and report emission.

pub mod config;
pub mod report;
pub mod runners;

pub use config::{
    default_sparse_m, ConfigFile, EnsembleSpec, Experiment, ExperimentConfig, NoiseSpec,
    SolverChoice,
};
pub use report::{
    median, quantile, read_rip_rows, read_trial_rows, write_report, ExperimentReport, RipRow,
    TrialRow,
};
pub use runners::{
    replay_trial, run_degenerate, run_error_scaling, run_experiment, run_rip_table, run_sharpness,
    run_sparse, run_sparse_sharpness, run_zero_mean,
};
