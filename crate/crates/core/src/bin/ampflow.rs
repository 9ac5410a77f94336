//! Experiment CLI.
//!
//! Each subcommand runs one experiment with its defaults; a JSON config
//! (`--config`) overrides fields, and `--seed/--trials/--out` override the
//! config.  Exit codes: 0 on success, 1 for bad arguments or config, 2 for
//! runtime failures.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use ampflow::harness::{
    run_experiment, write_report, ConfigFile, Experiment, ExperimentConfig, ExperimentReport,
};
use ampflow::measurements::{empirical_moments, make_ensemble};

#[derive(Parser)]
#[command(name = "ampflow", about = "Amplitude-based phase retrieval experiments", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Error decay against the noise floor across a grid of m.
    ErrorScaling(RunArgs),
    /// Lower-tail behaviour of the error/noise ratio under biased noise.
    Sharpness(RunArgs),
    /// Error decay under zero-mean noise, with model and slope summaries.
    ZeroMean(RunArgs),
    /// Sparse recovery via l1-constrained amplitude flow.
    Sparse(RunArgs),
    /// The fixed construction where the zero vector is feasible.
    SparseSharpness(RunArgs),
    /// Monte Carlo isometry constants for the lifted operator.
    RipTable(RunArgs),
    /// Observation collision of e1 and e2 under unit-modulus entries.
    Degenerate(RunArgs),
    /// Empirical moments of a measurement ensemble.
    Moments(MomentsArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config overriding the experiment defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (default: <experiment>.csv).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trials per cell.
    #[arg(long)]
    trials: Option<usize>,
    /// Suppress progress and summary chatter.
    #[arg(long)]
    quiet: bool,
    /// Also write per-cell (x, median, q05, q95) tables next to the CSV.
    #[arg(long)]
    plot_data: bool,
}

#[derive(Args)]
struct MomentsArgs {
    /// Ensemble kind: complex-gaussian, ternary, complex-rademacher.
    #[arg(long, default_value = "complex-gaussian")]
    ensemble: String,
    /// Nonzero probability per real part (ternary only).
    #[arg(long)]
    p: Option<f64>,
    /// Sample count.
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn main() -> ExitCode {
    // Die quietly on a closed pipe (`ampflow ... | head`) instead of
    // panicking in println!.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful exits; everything else is a
            // usage problem.
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    let (experiment, args) = match &cli.cmd {
        Cmd::ErrorScaling(a) => (Experiment::ErrorScaling, a),
        Cmd::Sharpness(a) => (Experiment::Sharpness, a),
        Cmd::ZeroMean(a) => (Experiment::ZeroMean, a),
        Cmd::Sparse(a) => (Experiment::Sparse, a),
        Cmd::SparseSharpness(a) => (Experiment::SparseSharpness, a),
        Cmd::RipTable(a) => (Experiment::RipTable, a),
        Cmd::Degenerate(a) => (Experiment::Degenerate, a),
        Cmd::Moments(a) => return run_moments(a),
    };
    // Phase 1: configuration; any failure here is a validation error.
    let (cfg, warnings) = match load_config(experiment, args) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if !args.quiet {
        for w in &warnings {
            eprintln!("warning: {w}");
        }
    }
    // Phase 2: execution and output; failures here are runtime errors.
    match execute(&cfg, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_config(
    experiment: Experiment,
    args: &RunArgs,
) -> ampflow::Result<(ExperimentConfig, Vec<String>)> {
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                ampflow::AmpError::Config(format!("config: cannot read {}: {e}", path.display()))
            })?;
            Some(ConfigFile::from_json(&text)?)
        }
        None => None,
    };
    ExperimentConfig::resolve(
        experiment,
        file.as_ref(),
        args.seed,
        args.trials,
        args.out.clone(),
    )
}

fn execute(cfg: &ExperimentConfig, args: &RunArgs) -> ampflow::Result<()> {
    let report = run_experiment(cfg)?;
    let out = cfg.out.clone().unwrap_or_else(|| cfg.default_out());
    write_report(&report, &out)?;
    if args.plot_data {
        let plot_path = out.with_extension("plot.csv");
        std::fs::write(&plot_path, report.plot_data())?;
        if !args.quiet {
            println!("plot data: {}", plot_path.display());
        }
    }
    if !args.quiet {
        println!("wrote {}", out.display());
        print_summary(&report);
    }
    Ok(())
}

fn print_summary(report: &ExperimentReport) {
    if report.rip_rows.is_empty() {
        for row in report.rows.iter().filter(|r| !r.summary.is_empty()) {
            println!(
                "m={:<6} {:<18} dist={:<12.6} ratio={:.6}",
                row.m, row.summary, row.dist, row.ratio
            );
        }
    } else {
        for r in &report.rip_rows {
            println!(
                "cell={:<3} {:<22} k={:<4} m={:<6} c-={:.4} c+={:.4} strong c-={:.4}",
                r.cell, r.ensemble, r.k, r.m, r.c_minus, r.c_plus, r.strong_c_minus
            );
        }
    }
}

fn run_moments(args: &MomentsArgs) -> ExitCode {
    let params: Vec<f64> = args.p.into_iter().collect();
    let dist = match make_ensemble(&args.ensemble, &params) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match empirical_moments(&dist, args.samples, args.seed) {
        Ok(m) => {
            println!("ensemble: {}", dist.name());
            println!("samples: {}", m.n);
            println!("mean: {:+.6e} {:+.6e}i", m.mean.re, m.mean.im);
            println!(
                "pseudo-second E[xi^2]: {:+.6e} {:+.6e}i",
                m.pseudo_second.re, m.pseudo_second.im
            );
            println!("abs-second E|xi|^2: {:.6}", m.abs_second);
            println!("abs-fourth E|xi|^4 (gamma): {:.6}", m.abs_fourth);
            println!("gamma (exact): {:.6}", dist.abs_fourth());
            match dist.psi2_bound() {
                Some(b) => println!("psi2 bound: {b:.6}"),
                None => println!("psi2 bound: n/a"),
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
