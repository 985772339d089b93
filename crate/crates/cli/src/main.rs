//! `jlo`: JLO cocycle pairings, indices and sweeps on finite spectral triples.

mod commands;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "jlo", version, about = "JLO cocycle pairings, indices and sweeps on finite spectral triples")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check the triple (or split triple) axioms and print residuals.
    Validate,
    /// Equivariant index Str(γ U_g e^{-βH}) for every group element.
    Index,
    /// Pairing of the JLO cocycle with a square root of unity.
    Pair,
    /// One JLO component τ_n(a_0, …, a_n; g).
    Jlo,
    /// Pairing along the linear family Q + λ dQ.
    Sweep,
    /// Pairing on several β planes.
    BetaScan,
    /// Regularized pairing Z(ε, λ) on an (ε, λ) grid.
    Endpoint,
    /// Pairing of the split cocycle.
    SplitPair,
    /// Split pairing along Q1 + λ dQ1, Q2 + λ dQ2.
    CouplingSweep,
    /// Run the acceptance suite and print a pass/fail table.
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Exact,
    Quadrature,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Opts {
    /// Input JSON file.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output file; stdout when absent. A `.csv` extension selects CSV for sweeps.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = jlo_core::jlo::DEFAULT_QUAD_NODES)]
    pub quad_nodes: usize,
    #[arg(long, global = true, default_value_t = jlo_core::jlo::DEFAULT_MAX_LEVEL)]
    pub max_level: usize,
    /// Series truncation tolerance.
    #[arg(long, global = true, default_value_t = jlo_core::jlo::DEFAULT_SERIES_TOL)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = jlo_core::acceptance::DEFAULT_SEED)]
    pub seed: u64,
    /// Deformation grid `a:b:n`.
    #[arg(long, global = true)]
    pub lambda_grid: Option<String>,
    /// Regularization grid `a:b:n`.
    #[arg(long, global = true)]
    pub eps_grid: Option<String>,
    /// Comma-separated β planes.
    #[arg(long, global = true)]
    pub beta_list: Option<String>,
    /// Simplex integration route for `jlo`.
    #[arg(long, global = true, value_enum, default_value_t = MethodArg::Exact)]
    pub method: MethodArg,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(commands::run(&cli))
}
