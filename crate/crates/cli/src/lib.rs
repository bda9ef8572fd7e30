//! Command-line front end: ranking-file ingestion, chain runs with
//! reproducible manifests, clustering and likelihood reports.

pub mod commands;
pub mod data;
pub mod error;
pub mod manifest;
pub mod trace;

use clap::{Parser, Subcommand};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "mallows-dpm",
    version,
    about = "DP mixtures of generalized Mallows models over top-t rankings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one or more Gibbs chains on a ranking file.
    Fit(commands::FitArgs),
    /// Generate a planted mixture dataset with its true labels and parameters.
    Gen(commands::GenArgs),
    /// Variation of Information of a trace against true labels or another trace.
    Eval(commands::EvalArgs),
    /// Held-out log-likelihood of a test file under a trace.
    Loglik(commands::LoglikArgs),
    /// Relative error of the Beta approximation over a grid.
    ApproxError(commands::ApproxErrorArgs),
    /// Cluster centers of a trace's last snapshot, with item names.
    Centers(commands::CentersArgs),
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit(a) => commands::fit(&a),
        Command::Gen(a) => commands::gen(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Loglik(a) => commands::loglik(&a),
        Command::ApproxError(a) => commands::approx_error(&a),
        Command::Centers(a) => commands::centers(&a),
    }
}
