//! Command-line pipeline: simulate data, fit mixture chains, fuse components
//! into clusters, tune the loss parameter, and emit uncertainty reports.

mod commands;
mod manifest;

use clap::{Parser, Subcommand};
use fold::FoldError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fold", version, about = "Mixture-model clustering by fusing localized densities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with truth labels.
    Simulate {
        /// gaussian | skew-gaussian | skew-symmetric | moons | spirals
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Noise level for moons/spirals (defaults 0.1 / 0.05).
        #[arg(long)]
        noise_sd: Option<f64>,
    },
    /// Fit the Bayesian Gaussian mixture by Gibbs sampling.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        k: usize,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        /// Degrees of freedom; defaults to p + 2.
        #[arg(long)]
        nu: Option<f64>,
        /// Prior scale matrix is psi_scale * I.
        #[arg(long, default_value_t = 1.0)]
        psi_scale: f64,
        /// Fit a location-only model with fixed covariance c * I.
        #[arg(long)]
        location_cov_scale: Option<f64>,
        #[arg(long, default_value_t = 9000)]
        iterations: usize,
        #[arg(long, default_value_t = 1000)]
        burn_in: usize,
        #[arg(long, default_value_t = 3)]
        thin: usize,
        /// Center and scale each coordinate before fitting.
        #[arg(long)]
        standardize: bool,
    },
    /// Estimate the distance matrix and the fused point estimate.
    Cluster {
        #[arg(long)]
        draws: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// avg | fixed | elbow
        #[arg(long, default_value = "avg")]
        omega_mode: String,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        grid_min: f64,
        #[arg(long, default_value_t = 100.0)]
        grid_max: f64,
        #[arg(long, default_value_t = 50)]
        grid_points: usize,
        /// Also write Binder and VI point estimates from the same draws.
        #[arg(long)]
        compare: bool,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        #[arg(long, default_value_t = 100)]
        max_sweeps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Emit the elbow curve for selecting omega.
    Elbow {
        #[arg(long)]
        draws: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        grid_min: f64,
        #[arg(long, default_value_t = 100.0)]
        grid_max: f64,
        #[arg(long, default_value_t = 50)]
        grid_points: usize,
    },
    /// Per-draw minimizers, credible ball, and similarity matrix.
    Uq {
        #[arg(long)]
        draws: PathBuf,
        /// Labels CSV of the ball center (point estimate).
        #[arg(long)]
        center: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// vi | binder
        #[arg(long, default_value = "vi")]
        metric: String,
        /// avg | fixed
        #[arg(long, default_value = "avg")]
        omega_mode: String,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = 100)]
        max_sweeps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the per-draw minimizer label matrix.
        #[arg(long)]
        write_minimizers: bool,
    },
    /// Seeded replications of a scenario, aggregated per method.
    Replicate {
        #[arg(long)]
        scenario: String,
        /// Comma-separated sample sizes, e.g. 100,500.
        #[arg(long)]
        n: String,
        #[arg(long)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated subset of fold,binder,vi.
        #[arg(long, default_value = "fold,binder,vi")]
        methods: String,
        #[arg(long, default_value_t = 30)]
        k: usize,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 9000)]
        iterations: usize,
        #[arg(long, default_value_t = 1000)]
        burn_in: usize,
        #[arg(long, default_value_t = 3)]
        thin: usize,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        /// Fit raw coordinates instead of standardized ones.
        #[arg(long)]
        no_standardize: bool,
    },
    /// Oracle-convergence experiment on the location-GMM setting.
    OracleValidate {
        /// Comma-separated sample sizes, e.g. 50,1000.
        #[arg(long)]
        n: String,
        /// Number of seeds per sample size.
        #[arg(long)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 9000)]
        iterations: usize,
        #[arg(long, default_value_t = 1000)]
        burn_in: usize,
        #[arg(long, default_value_t = 3)]
        thin: usize,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
    },
}

fn exit_code_for(err: &FoldError) -> u8 {
    match err {
        FoldError::Cholesky { .. }
        | FoldError::NonFinite { .. }
        | FoldError::Degenerate(_)
        | FoldError::ZeroDensity { .. } => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            scenario,
            n,
            seed,
            out,
            noise_sd,
        } => commands::simulate(&scenario, n, seed, &out, noise_sd),
        Command::Fit {
            data,
            out,
            seed,
            k,
            alpha,
            kappa,
            nu,
            psi_scale,
            location_cov_scale,
            iterations,
            burn_in,
            thin,
            standardize,
        } => commands::fit(commands::FitArgs {
            data,
            out,
            seed,
            k,
            alpha,
            kappa,
            nu,
            psi_scale,
            location_cov_scale,
            iterations,
            burn_in,
            thin,
            standardize,
        }),
        Command::Cluster {
            draws,
            out,
            omega_mode,
            omega,
            grid_min,
            grid_max,
            grid_points,
            compare,
            restarts,
            max_sweeps,
            seed,
        } => commands::cluster(commands::ClusterArgs {
            draws,
            out,
            omega_mode,
            omega,
            grid_min,
            grid_max,
            grid_points,
            compare,
            restarts,
            max_sweeps,
            seed,
        }),
        Command::Elbow {
            draws,
            out,
            grid_min,
            grid_max,
            grid_points,
        } => commands::elbow(&draws, &out, grid_min, grid_max, grid_points),
        Command::Uq {
            draws,
            center,
            out,
            level,
            metric,
            omega_mode,
            omega,
            restarts,
            max_sweeps,
            seed,
            write_minimizers,
        } => commands::uq(commands::UqArgs {
            draws,
            center,
            out,
            level,
            metric,
            omega_mode,
            omega,
            restarts,
            max_sweeps,
            seed,
            write_minimizers,
        }),
        Command::Replicate {
            scenario,
            n,
            reps,
            seed,
            out,
            methods,
            k,
            alpha,
            iterations,
            burn_in,
            thin,
            restarts,
            no_standardize,
        } => commands::replicate(commands::ReplicateArgs {
            scenario,
            n,
            reps,
            seed,
            out,
            methods,
            k,
            alpha,
            iterations,
            burn_in,
            thin,
            restarts,
            no_standardize,
        }),
        Command::OracleValidate {
            n,
            seeds,
            seed,
            out,
            iterations,
            burn_in,
            thin,
            restarts,
        } => commands::oracle_validate(commands::OracleValidateArgs {
            n,
            seeds,
            seed,
            out,
            iterations,
            burn_in,
            thin,
            restarts,
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
