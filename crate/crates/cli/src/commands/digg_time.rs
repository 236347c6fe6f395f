use std::path::PathBuf;

use clap::Args;
use vote_dynamics::clock::{build_activity_clock, DEFAULT_VOTES_PER_DIGG_HOUR};
use vote_dynamics::io::write_clock;

use crate::config::{pick, require};
use crate::error::CliResult;
use crate::files::{read_rows, write_atomic};
use crate::Context;

#[derive(Debug, Args)]
pub struct DiggTimeArgs {
    /// Front-page vote stream; only timestamps are used.
    #[arg(long)]
    votes: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    votes_per_digg_hour: Option<f64>,
}

pub fn run(ctx: &Context, args: DiggTimeArgs) -> CliResult<()> {
    let file = ctx.config.digg_time.clone().unwrap_or_default();
    let votes = require(args.votes.or(file.votes), "front-page vote stream (--votes)")?;
    let out = pick(args.out, file.out, PathBuf::from("clock.json"));
    let rate = pick(args.votes_per_digg_hour, file.votes_per_digg_hour, DEFAULT_VOTES_PER_DIGG_HOUR);
    let mut hours: Vec<f64> = read_rows(&votes)?.iter().map(|r| r.timestamp / 3600.0).collect();
    hours.sort_by(f64::total_cmp);
    let clock = build_activity_clock(&hours, rate)?;
    write_atomic(&out, |w| write_clock(&clock, w))?;
    let span = clock.end() - clock.start();
    println!(
        "{} votes over {span:.2} wall hours = {:.2} Digg hours -> {}",
        hours.len(),
        clock.elapsed(clock.start(), clock.end()),
        out.display()
    );
    Ok(())
}
