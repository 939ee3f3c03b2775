//! `cfsl`: batch front end for the forward, spectral-data and inverse solvers.
//!
//! Exit codes: 0 success, 1 I/O failure on output, 2 parse or usage error,
//! 3 solver failure, 4 pole, 5 inverse fit did not converge,
//! 6 verification failed.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "cfsl", version, about = "Conformable fractional Sturm-Liouville toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Solution {
    Phi,
    Psi,
    S,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for phi, psi or S at one real lambda.
    Forward {
        problem: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, value_enum, default_value = "phi")]
        solution: Solution,
        #[arg(long, default_value_t = 257)]
        grid_points: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Leading eigenvalues, optionally the Dirichlet-at-zero spectrum, and the omega estimate.
    Spectrum {
        problem: PathBuf,
        #[arg(long, default_value_t = 20)]
        count: usize,
        /// Also compute the second spectrum xi_n.
        #[arg(long)]
        second: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Weyl function samples at the given lambdas.
    Weyl {
        problem: PathBuf,
        /// Comma-separated list, or a file with one value per line or a JSON array.
        #[arg(long, allow_hyphen_values = true)]
        lambdas: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Reconstruct (q, h, H) from a dataset.
    Invert {
        dataset: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Residual history as CSV.
        #[arg(long)]
        history: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the identity suite and print one row per identity.
    Verify {
        problem: PathBuf,
        /// Integrator relative tolerance (absolute tolerance is 1e-2 of it).
        #[arg(long)]
        rtol: Option<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Synthesize a dataset from a problem.
    Generate {
        problem: PathBuf,
        #[arg(long)]
        kind: String,
        #[arg(long)]
        count: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write a problem with a seeded random smooth potential.
    RandomProblem {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 5)]
        modes: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        h: f64,
        #[arg(long = "big-h", default_value_t = 0.0, allow_hyphen_values = true)]
        big_h: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CFSL_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Forward { problem, lambda, solution, grid_points, format, output } => {
            commands::forward(&problem, lambda, solution, grid_points, format, output.as_deref())
        }
        Command::Spectrum { problem, count, second, format, output } => {
            commands::spectrum(&problem, count, second, format, output.as_deref())
        }
        Command::Weyl { problem, lambdas, output } => commands::weyl(&problem, &lambdas, output.as_deref()),
        Command::Invert { dataset, config, history, output } => {
            commands::invert(&dataset, config.as_deref(), history.as_deref(), output.as_deref())
        }
        Command::Verify { problem, rtol, output } => commands::verify(&problem, rtol, output.as_deref()),
        Command::Generate { problem, kind, count, format, output } => {
            commands::generate(&problem, &kind, count, format, output.as_deref())
        }
        Command::RandomProblem { seed, alpha, modes, h, big_h, output } => {
            commands::random_problem(seed, alpha, modes, h, big_h, output.as_deref())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("cfsl: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
