use std::path::PathBuf;
use std::process::ExitCode;

use aspectcast::config::AspectSet;
use aspectcast::pipeline::{Context, Overrides, Stage};
use clap::{Args, Parser, Subcommand};

/// Aspect-based review sentiment to revenue-growth forecasting.
#[derive(Parser)]
#[command(name = "aspectcast", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Validate reviews and revenue; write reviews.jsonl, growth.csv, terms.csv
    Ingest,
    /// Score every review; write scores.csv
    Sentiment,
    /// Aspect perceptions and the design matrix; write perceptions.csv, features.csv
    Features,
    /// Fit every configured model on the training split; write models/ and tuning.csv
    Fit,
    /// Predict the test split with the models in <out>/models; write predictions.csv
    Predict,
    /// Score predictions; write report.csv, report.json, plot.csv
    Evaluate,
    /// All stages in order
    Pipeline,
}

#[derive(Args)]
struct Opts {
    /// Pipeline config (JSON). Defaults to the bundled synthetic setup.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for every model
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Aspect set for every model: 13 or 16
    #[arg(long, global = true)]
    aspects: Option<AspectSet>,
    /// Drop the lagged-growth feature
    #[arg(long, global = true)]
    no_lag: bool,
    #[arg(long, global = true)]
    reviews: Option<PathBuf>,
    #[arg(long, global = true)]
    revenue: Option<PathBuf>,
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
    #[arg(long, global = true)]
    vocabulary: Option<PathBuf>,
    /// Sentiment heuristic overrides (JSON)
    #[arg(long, global = true)]
    heuristics: Option<PathBuf>,
    /// Use these sentiment scores instead of computing them
    #[arg(long, global = true)]
    scores: Option<PathBuf>,
    /// Use this feature file instead of computing it
    #[arg(long, global = true)]
    features: Option<PathBuf>,
    /// Predictions to evaluate (default <out>/predictions.csv)
    #[arg(long, global = true)]
    predictions: Option<PathBuf>,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let o = cli.opts;
    let overrides = Overrides {
        out: o.out,
        seed: o.seed,
        aspects: o.aspects,
        no_lag: o.no_lag,
        reviews: o.reviews,
        revenue: o.revenue,
        lexicon: o.lexicon,
        vocabulary: o.vocabulary,
        heuristics: o.heuristics,
        scores: o.scores,
        features: o.features,
        predictions: o.predictions,
    };
    let ctx = Context::load(o.config.as_deref(), overrides)?;
    let stage = match cli.command {
        Command::Ingest => Stage::Ingest,
        Command::Sentiment => Stage::Sentiment,
        Command::Features => Stage::Features,
        Command::Fit => Stage::Fit,
        Command::Predict => Stage::Predict,
        Command::Evaluate => Stage::Evaluate,
        Command::Pipeline => {
            ctx.run_pipeline()?;
            return Ok(());
        }
    };
    ctx.run(stage)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
