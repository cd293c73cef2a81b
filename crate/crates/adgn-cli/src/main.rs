//! Command line front end: dataset generation, grid-search training,
//! stability diagnostics, external-data ingestion, and checkpoint
//! evaluation.
//!
//! Exit codes: 0 success, 1 invalid input or configuration, 2 numerical
//! failure (divergence, non-finite values), 3 io or serialization
//! trouble.

mod artifacts;
mod commands;
mod data;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use adgn_core::layers::Aggregation;
use adgn_core::Error;

use commands::diagnose::DiagnoseArgs;

#[derive(Parser)]
#[command(
    name = "adgn",
    version,
    about = "Stable deep graph networks: data, training, and diagnostics"
)]
struct Cli {
    /// Worker threads for grid search (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the dataset a config describes and write it to a directory.
    GenData {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the configured grid search and write summaries and checkpoints.
    Train {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for summary.csv, grid reports, and checkpoints.
        #[arg(long)]
        out: PathBuf,
        /// Use this dataset directory instead of the config's data source.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Profile gradient propagation across depth and the layer Jacobian
    /// spectrum on a random graph.
    Diagnose {
        /// Output directory for the depth-profile CSV.
        #[arg(long)]
        out: PathBuf,
        /// Nodes in the probe graph.
        #[arg(long, default_value_t = 30)]
        nodes: usize,
        /// Edge probability of the probe graph.
        #[arg(long, default_value_t = 0.3)]
        edge_prob: f64,
        /// State width.
        #[arg(long, default_value_t = 20)]
        dim: usize,
        /// Euler step size.
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Diffusion strength.
        #[arg(long, default_value_t = 0.1)]
        gamma: f64,
        /// Neighbor aggregation: simple or gcn.
        #[arg(long, default_value = "simple", value_parser = parse_aggregation)]
        aggregation: Aggregation,
        /// Depths to profile.
        #[arg(long, value_delimiter = ',', default_values_t = adgn_core::diagnostics::DEFAULT_PROFILE_DEPTHS)]
        depths: Vec<usize>,
        /// Number of seeds to profile.
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        /// Base seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Profile only the antisymmetric model, not the per-layer stack.
        #[arg(long)]
        skip_baseline: bool,
    },
    /// Build a node-classification dataset from edge/feature/label text files.
    Ingest {
        /// Edge list: one `u v` pair per line.
        #[arg(long)]
        edges: PathBuf,
        /// Node features: one row of floats per node.
        #[arg(long)]
        features: PathBuf,
        /// Node labels: one integer per node.
        #[arg(long)]
        labels: PathBuf,
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
        /// Independent split-mask assignments to draw.
        #[arg(long, default_value_t = 5)]
        splits: usize,
        /// Seed for the split masks.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate a stored checkpoint on a dataset's test portion.
    Eval {
        /// Checkpoint JSON written by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Dataset directory.
        #[arg(long)]
        data: PathBuf,
    },
}

fn parse_aggregation(s: &str) -> Result<Aggregation, String> {
    match s {
        "simple" => Ok(Aggregation::Simple),
        "gcn" => Ok(Aggregation::Gcn),
        other => Err(format!("unknown aggregation {other:?} (expected simple or gcn)")),
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        2
    } else {
        match e {
            Error::Io { .. } | Error::Json { .. } => 3,
            _ => 1,
        }
    }
}

fn dispatch(cli: Cli) -> adgn_core::Result<()> {
    match cli.command {
        Command::GenData { config, out } => commands::gen_data::run(&config, &out),
        Command::Train { config, out, data } => {
            commands::train::run(&config, data.as_deref(), &out)
        }
        Command::Diagnose {
            out,
            nodes,
            edge_prob,
            dim,
            epsilon,
            gamma,
            aggregation,
            depths,
            seeds,
            seed,
            skip_baseline,
        } => commands::diagnose::run(
            &DiagnoseArgs {
                nodes,
                edge_prob,
                dim,
                epsilon,
                gamma,
                aggregation,
                depths,
                seeds,
                seed,
                skip_baseline,
            },
            &out,
        ),
        Command::Ingest {
            edges,
            features,
            labels,
            out,
            splits,
            seed,
        } => commands::ingest::run(&edges, &features, &labels, splits, seed, &out),
        Command::Eval { checkpoint, data } => commands::eval::run(&checkpoint, &data),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot configure {jobs} worker threads: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
