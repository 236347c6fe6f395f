use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;
mod files;

use config::RunConfig;
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "vote-dynamics", version, about = "Simulate, fit and forecast votes on social news stories")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-story work (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic vote stream and its metadata sidecar.
    Simulate(commands::simulate::SimulateArgs),
    /// Estimate site-wide and per-story parameters from a vote stream.
    Fit(commands::fit::FitArgs),
    /// Forecast final votes from each story's early votes.
    Predict(commands::predict::PredictArgs),
    /// Compare forecasting methods against observed outcomes.
    Eval(commands::eval::EvalArgs),
    /// Build an activity clock from a front-page vote stream.
    DiggTime(commands::digg_time::DiggTimeArgs),
}

/// Stream location flags shared by the analysis commands.
#[derive(Debug, Clone, Default, Args)]
pub struct InputArgs {
    /// Vote stream (`.csv`, or `.jsonl`/`.ndjson` for JSON lines).
    #[arg(long)]
    pub votes: Option<PathBuf>,
    /// Metadata sidecar written by `simulate` or prepared by hand.
    #[arg(long)]
    pub metadata: Option<PathBuf>,
    /// CSV of `fan_id,friend_id` edges.
    #[arg(long)]
    pub fan_graph: Option<PathBuf>,
    /// Activity clock from `digg-time`, for streams in wall hours.
    #[arg(long)]
    pub clock: Option<PathBuf>,
}

/// Forecast settings shared by `predict` and `eval`.
#[derive(Debug, Clone, Default, Args)]
pub struct ForecastArgs {
    /// Early votes used for each forecast.
    #[arg(long)]
    pub window: Option<usize>,
    /// Final vote count that makes a story popular.
    #[arg(long)]
    pub threshold: Option<u64>,
    /// Hours after submission at which the final count is taken.
    #[arg(long)]
    pub t_final: Option<f64>,
    /// Fit with the lognormal interestingness prior.
    #[arg(long, overrides_with = "no_prior")]
    pub prior: bool,
    #[arg(long, overrides_with = "prior")]
    pub no_prior: bool,
    /// Constrain fan and non-fan interestingness to be equal.
    #[arg(long)]
    pub equal_r: bool,
}

impl ForecastArgs {
    pub fn prior_flag(&self) -> Option<bool> {
        match (self.prior, self.no_prior) {
            (true, _) => Some(true),
            (_, true) => Some(false),
            _ => None,
        }
    }
}

pub struct Context {
    pub config: RunConfig,
    pub seed: u64,
}

fn run(cli: Cli) -> CliResult<()> {
    let config = RunConfig::load(cli.config.as_deref())?;
    if let Some(jobs) = cli.jobs.or(config.jobs) {
        if jobs == 0 {
            return Err(CliError::input("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::input(format!("cannot start {jobs} workers: {e}")))?;
    }
    let ctx = Context {
        seed: cli.seed.or(config.seed).unwrap_or(0),
        config,
    };
    match cli.command {
        Command::Simulate(a) => commands::simulate::run(&ctx, a),
        Command::Fit(a) => commands::fit::run(&ctx, a),
        Command::Predict(a) => commands::predict::run(&ctx, a),
        Command::Eval(a) => commands::eval::run(&ctx, a),
        Command::DiggTime(a) => commands::digg_time::run(&ctx, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VOTE_DYNAMICS_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
