//! `obsent`: observational entropy from the command line.
//!
//! Exit codes: 0 success, 1 failed validation checks, 2 parse or invariant
//! failure, 3 dimension mismatch, 4 resource cap exceeded.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use obsent_core::Error;
use thiserror::Error as ThisError;

#[derive(Parser)]
#[command(
    name = "obsent",
    version,
    about = "Observational entropy of quantum and classical states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Entropy of a state under an ordered sequence of coarse-grainings.
    Entropy {
        /// Density-matrix file.
        state: PathBuf,
        /// Coarse-graining files, first measurement first.
        #[arg(required = true)]
        sequence: Vec<PathBuf>,
        /// Report entropies in bits instead of nats.
        #[arg(long)]
        bits: bool,
        /// Write the coarse-grained state of a single coarse-graining here.
        #[arg(long, value_name = "FILE")]
        coarse_grained_state: Option<PathBuf>,
    },
    /// Classical observational entropy over a weighted sample space.
    Classical {
        /// Sample-space file: points, weights, density.
        space: PathBuf,
        /// Partition files; an empty list is the trivial partition.
        partitions: Vec<PathBuf>,
        #[arg(long)]
        bits: bool,
    },
    /// Quantum correlation entropy (quarrelation) of a multipartite state.
    Qce {
        state: PathBuf,
        /// Subsystem dimensions in Kronecker order, e.g. `2,2`.
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Stop a restart when a sweep improves the objective by less.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        max_sweeps: usize,
        /// Write the optimal local bases as coarse-graining files here.
        #[arg(long, value_name = "DIR")]
        write_measurement: Option<PathBuf>,
    },
    /// Run a quench scenario and write the entropy time series.
    Simulate {
        scenario: PathBuf,
        /// Output directory for `<stem>.csv` and `<stem>.json`.
        #[arg(long, env = "OBSENT_OUTPUT_DIR", default_value = ".")]
        out: PathBuf,
        /// Base name of the output files (defaults to the scenario file stem).
        #[arg(long)]
        stem: Option<String>,
        /// Energy shell width applied to every energy coarse-graining.
        #[arg(long)]
        delta_e: Option<f64>,
        /// Seed for random initial states.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run every invariant check on an input file and report residuals.
    Validate {
        file: PathBuf,
        /// Input type; detected from the JSON keys when omitted.
        #[arg(long = "as", value_enum)]
        kind: Option<InputKind>,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InputKind {
    State,
    Observable,
    Projector,
    CoarseGraining,
    Classical,
    Partition,
    Scenario,
}

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0} check(s) failed")]
    Validation(usize),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Core(Error::DimensionMismatch { .. }) => 3,
            CliError::Core(Error::CapExceeded(_)) => 4,
            CliError::Core(_) | CliError::Usage(_) => 2,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Entropy {
            state,
            sequence,
            bits,
            coarse_grained_state,
        } => commands::entropy(&state, &sequence, bits, coarse_grained_state.as_deref()),
        Command::Classical {
            space,
            partitions,
            bits,
        } => commands::classical(&space, &partitions, bits),
        Command::Qce {
            state,
            dims,
            restarts,
            seed,
            tol,
            max_sweeps,
            write_measurement,
        } => commands::qce(
            &state,
            dims,
            obsent_core::local::QceOptions {
                restarts,
                seed,
                tol_obj: tol,
                max_sweeps,
            },
            write_measurement.as_deref(),
        ),
        Command::Simulate {
            scenario,
            out,
            stem,
            delta_e,
            seed,
        } => commands::simulate(&scenario, &out, stem, delta_e, seed),
        Command::Validate { file, kind, json } => commands::validate(&file, kind, json),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
