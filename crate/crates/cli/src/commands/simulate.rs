use std::path::PathBuf;

use clap::Args;
use vote_dynamics::io::{records_to_rows, write_votes, CorpusMetadata, VoteFormat};
use vote_dynamics::simulate::{make_corpus, SimConfig};

use crate::config::pick;
use crate::error::{CliError, CliResult};
use crate::files::{write_atomic, write_json_file};
use crate::Context;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Directory receiving the vote stream and `metadata.json`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    stories: Option<usize>,
    /// Digg hours simulated per story.
    #[arg(long)]
    horizon: Option<f64>,
    /// Keep only promoted stories.
    #[arg(long)]
    promoted_only: bool,
    /// `csv` or `jsonl`.
    #[arg(long)]
    format: Option<String>,
}

pub fn run(ctx: &Context, args: SimulateArgs) -> CliResult<()> {
    let file = ctx.config.simulate.clone().unwrap_or_default();
    let base = SimConfig::paper(1, ctx.seed);
    let config = SimConfig {
        global: file.global.unwrap_or(base.global),
        r_fan: file.r_fan.unwrap_or(base.r_fan),
        r_nonfan: file.r_nonfan.unwrap_or(base.r_nonfan),
        submitter_fans: file.submitter_fans.unwrap_or(base.submitter_fans),
        n_stories: pick(args.stories, file.n_stories, 100),
        horizon: pick(args.horizon, file.horizon, base.horizon),
        seed: ctx.seed,
        promoted_only: args.promoted_only || file.promoted_only.unwrap_or(false),
        start_epoch: file.start_epoch.unwrap_or(base.start_epoch),
        submission_spacing: file.submission_spacing.unwrap_or(base.submission_spacing),
    };
    let (format, name) = match pick(args.format, file.format, "csv".into()).as_str() {
        "csv" => (VoteFormat::Csv, "votes.csv"),
        "jsonl" => (VoteFormat::JsonLines, "votes.jsonl"),
        other => return Err(CliError::input(format!("unknown vote format {other:?}; use csv or jsonl"))),
    };
    let out_dir = pick(args.out_dir, file.out_dir, PathBuf::from("."));
    config.validate()?;
    let corpus = make_corpus(&config)?;
    let rows = records_to_rows(&corpus.stories);
    write_atomic(&out_dir.join(name), |out| write_votes(&rows, out, format))?;
    write_json_file(&out_dir.join("metadata.json"), &CorpusMetadata::for_corpus(&corpus, Some(&config)))?;
    println!("{} stories, {} votes -> {}", corpus.stories.len(), rows.len(), out_dir.display());
    Ok(())
}
