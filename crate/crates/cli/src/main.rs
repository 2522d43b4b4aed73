mod commands;
mod config;
mod models;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use hashcf_core::data::RatingFormat;

use crate::config::{ModelKind, Overrides, RunConfig};

/// Hashing-based collaborative filtering: variational hashing with the
/// projected Hamming dissimilarity, MF baselines, evaluation and benchmarks.
#[derive(Parser, Debug)]
#[command(name = "hashcf", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// JSON run configuration; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Code length (latent dimension for MF).
    #[arg(long, global = true)]
    bits: Option<usize>,
    #[arg(long, global = true, value_enum)]
    model: Option<ModelKind>,
    /// Output root; prepared splits go to `<out>/data`, models to `<out>/<model>`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<RatingFormat>,
    /// NDCG cutoffs, comma separated; for `rank`, the number of items.
    #[arg(long = "k", global = true, value_delimiter = ',')]
    ks: Option<Vec<usize>>,
}

fn parse_format(s: &str) -> Result<RatingFormat, String> {
    s.parse::<RatingFormat>().map_err(|e| e.to_string())
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse, deduplicate, filter and split the raw ratings.
    Prepare,
    /// Train the selected model on the prepared splits.
    Train,
    /// Evaluate the trained model on the test split.
    Eval,
    /// Print a user's top items.
    Rank {
        /// User label (or index when ranking from `--codes`).
        #[arg(long)]
        user: String,
        /// Number of items; a single `--k` value does the same.
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// Directory holding `users.bhc` and `items.bhc` to rank with
        /// directly, instead of a trained model.
        #[arg(long)]
        codes: Option<PathBuf>,
    },
    /// Time the distance kernels over a large random item array.
    BenchDistance {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Compare validation-loss convergence of the two dissimilarities.
    BenchConvergence,
    /// Collect evaluated runs into one table.
    Report {
        /// Run directories; defaults to every `<out>/*` with an `eval.json`.
        runs: Vec<PathBuf>,
    },
    /// Write a synthetic ratings file generated from planted codes.
    Synth,
}

fn run(cli: Cli) -> Result<()> {
    let g = cli.global;
    let rank_k = match g.ks.as_deref() {
        Some([k]) => Some(*k),
        Some(_) if matches!(cli.command, Command::Rank { .. }) => anyhow::bail!("rank takes a single --k value"),
        _ => None,
    };
    let overrides = Overrides {
        seed: g.seed,
        bits: g.bits,
        model: g.model,
        out: g.out,
        dataset: g.dataset,
        format: g.format,
        ks: g.ks,
    };
    let cfg = RunConfig::load(g.config.as_deref(), overrides)?;
    let hash = cfg.hash()?;
    log::debug!("config hash {hash}");
    match cli.command {
        Command::Prepare => commands::prepare(&cfg, &hash),
        Command::Train => commands::train_model(&cfg, &hash),
        Command::Eval => commands::eval(&cfg, &hash),
        Command::Rank { user, top, codes } => commands::rank(&cfg, &user, rank_k.unwrap_or(top), codes.as_deref()),
        Command::BenchDistance { n, reps } => commands::bench_distance_cmd(&cfg, &hash, n, reps),
        Command::BenchConvergence => commands::bench_convergence_cmd(&cfg, &hash),
        Command::Report { runs } => commands::report(&cfg, &runs),
        Command::Synth => commands::synth(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
