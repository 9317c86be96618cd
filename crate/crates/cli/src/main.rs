//! `corrupt-recover`: generate, solve and certify corrupted partial Fourier
//! instances, and run the phase-map, image and sparsity-curve experiments.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 non-convergence or a
//! failed certificate.

mod commands;
mod options;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "corrupt-recover",
    version,
    about = "Sparse recovery from grossly corrupted partial Fourier measurements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic instance file.
    Gen(Flags),
    /// Solve an instance file.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Evaluate recovery conditions and dual certificates for an instance.
    Certify {
        instance: PathBuf,
        /// Solution file whose pair is certified as well.
        #[arg(long)]
        solution: Option<PathBuf>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Synthetic success-rate map over (theta_m, theta_f).
    PhaseMap(Flags),
    /// Mean SRRE maps for corrupted image patches.
    ImageExp(Flags),
    /// Mean k-sparse indicator curves.
    SparsityCurve(Flags),
}

/// Options shared by every subcommand. Each also accepts the same keys in a
/// `key = value` config file; flags win. List-valued keys are comma
/// separated.
#[derive(Args, Debug, Default)]
struct Flags {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Signal dimension (a comma list for phase-map).
    #[arg(long)]
    n: Option<String>,
    /// Measurement rate (a comma list for grids).
    #[arg(long = "theta-m")]
    theta_m: Option<String>,
    /// Corruption rate (a comma list for grids).
    #[arg(long = "theta-f")]
    theta_f: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    /// Noise radius; 0 selects the equality-constrained program.
    #[arg(long)]
    eta: Option<String>,
    /// Instance seed, or master seed for experiments.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    c: Option<String>,
    /// Output file, or output directory for experiments.
    #[arg(long)]
    out: Option<String>,
    /// Worker threads (default: CORRUPT_RECOVER_THREADS, else all cores).
    #[arg(long)]
    threads: Option<String>,
    /// `primes` or `nonprimes` when dimensions are drawn at random.
    #[arg(long = "n-mode")]
    n_mode: Option<String>,
    /// Inclusive dimension range `lo:hi`.
    #[arg(long = "n-range")]
    n_range: Option<String>,
    /// Number of dimensions drawn from the range.
    #[arg(long = "n-count")]
    n_count: Option<String>,
    /// Directory of grayscale images.
    #[arg(long)]
    corpus: Option<String>,
    /// Patch side length (a comma list for image-exp).
    #[arg(long = "patch-size")]
    patch_size: Option<String>,
    /// Runs per cell and dimension, patches per cell, or curve samples.
    #[arg(long)]
    runs: Option<String>,
    #[arg(long = "max-iter")]
    max_iter: Option<String>,
    /// Solver stopping tolerance.
    #[arg(long)]
    tol: Option<String>,
    /// RRE below which a run counts as exact recovery.
    #[arg(long = "success-rre")]
    success_rre: Option<String>,
    /// Corruption energy as a multiple of the signal energy.
    #[arg(long = "energy-ratio")]
    energy_ratio: Option<String>,
}

impl Flags {
    fn pairs(self) -> (Option<PathBuf>, Vec<(&'static str, Option<String>)>) {
        let pairs = vec![
            ("n", self.n),
            ("theta_m", self.theta_m),
            ("theta_f", self.theta_f),
            ("lambda", self.lambda),
            ("eta", self.eta),
            ("seed", self.seed),
            ("epsilon", self.epsilon),
            ("c", self.c),
            ("out", self.out),
            ("threads", self.threads),
            ("n_mode", self.n_mode),
            ("n_range", self.n_range),
            ("n_count", self.n_count),
            ("corpus", self.corpus),
            ("patch_size", self.patch_size),
            ("runs", self.runs),
            ("max_iter", self.max_iter),
            ("tol", self.tol),
            ("success_rre", self.success_rre),
            ("energy_ratio", self.energy_ratio),
        ];
        (self.config, pairs)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::new()
        .filter_level(log::LevelFilter::Info)
        .format_target(false)
        .init();
    let result = match cli.command {
        Command::Gen(f) => commands::gen(f.pairs()),
        Command::Solve { instance, flags } => commands::solve(&instance, flags.pairs()),
        Command::Certify {
            instance,
            solution,
            flags,
        } => commands::certify(&instance, solution.as_deref(), flags.pairs()),
        Command::PhaseMap(f) => commands::phase_map(f.pairs()),
        Command::ImageExp(f) => commands::image_exp(f.pairs()),
        Command::SparsityCurve(f) => commands::sparsity_curve(f.pairs()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
