pub mod digg_time;
pub mod eval;
pub mod fit;
pub mod predict;
pub mod simulate;

use std::path::PathBuf;

use vote_dynamics::predict::PredictionConfig;

use crate::error::CliResult;
use crate::files::Inputs;
use crate::{ForecastArgs, InputArgs};

fn merge_inputs(
    flags: InputArgs,
    votes: Option<PathBuf>,
    metadata: Option<PathBuf>,
    fan_graph: Option<PathBuf>,
    clock: Option<PathBuf>,
) -> Inputs {
    Inputs {
        votes: flags.votes.or(votes),
        metadata: flags.metadata.or(metadata),
        fan_graph: flags.fan_graph.or(fan_graph),
        clock: flags.clock.or(clock),
    }
}

fn merge_forecast(flags: &ForecastArgs, file: Option<PredictionConfig>) -> CliResult<PredictionConfig> {
    let mut pc = file.unwrap_or_default();
    if let Some(w) = flags.window {
        pc.vote_window = w;
    }
    if let Some(h) = flags.threshold {
        pc.popularity_threshold = h;
    }
    if let Some(t) = flags.t_final {
        pc.t_final = t;
    }
    if let Some(p) = flags.prior_flag() {
        pc.use_prior = p;
    }
    if flags.equal_r {
        pc.constrain_equal_r = true;
    }
    pc.validate()?;
    Ok(pc)
}
