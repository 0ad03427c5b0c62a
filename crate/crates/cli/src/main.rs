//! `muskat`: runs configured evolutions, Dirichlet-Neumann checks and the
//! acceptance suite, writing JSON and CSV reports.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "muskat", version, about = "Muskat interface solvers and their verification suite")]
pub struct Cli {
    /// Run configuration (JSON); the shipped default is used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output_dir` of the configuration.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for randomized suites, overriding `seed` of the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Also write the flattened potential of the initial interface to strip.csv.
    #[arg(long, global = true)]
    pub dump_strip: bool,
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Worker threads.
    #[arg(long, env = "MUSKAT_THREADS", hide = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compare the strip solver with its cross-checks and the finite-difference oracle.
    DnCheck,
    /// Evolve the interface by global Picard iteration.
    Evolve,
    /// Two-phase closure diagnostics followed by an evolution.
    TwoPhase,
    /// Besov norms of the initial interface or of a sampled field.
    Besov {
        /// Whitespace-separated samples on the configured grid.
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Run the acceptance suite.
    Verify {
        /// Comma-separated criterion numbers; all when omitted.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n > 0 {
            // fails only when a pool already exists
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("muskat: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
