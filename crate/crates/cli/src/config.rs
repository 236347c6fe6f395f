//! Run configuration file. Every section is optional; command-line flags
//! take precedence over values read here.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use vote_dynamics::predict::PredictionConfig;
use vote_dynamics::simulate::FanCountDist;
use vote_dynamics::{GlobalParamsV2, Lognormal};

use crate::error::{CliError, CliResult};
use crate::files::read_json_file;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub simulate: Option<SimulateSection>,
    pub fit: Option<FitSection>,
    pub predict: Option<PredictSection>,
    pub eval: Option<EvalSection>,
    pub digg_time: Option<DiggTimeSection>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            Some(p) => read_json_file(p),
            None => Ok(Self::default()),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub out_dir: Option<PathBuf>,
    /// `csv` or `jsonl`.
    pub format: Option<String>,
    pub n_stories: Option<usize>,
    pub horizon: Option<f64>,
    pub promoted_only: Option<bool>,
    pub global: Option<GlobalParamsV2>,
    pub r_fan: Option<Lognormal>,
    pub r_nonfan: Option<Lognormal>,
    pub submitter_fans: Option<FanCountDist>,
    pub start_epoch: Option<f64>,
    pub submission_spacing: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub votes: Option<PathBuf>,
    pub metadata: Option<PathBuf>,
    pub fan_graph: Option<PathBuf>,
    pub clock: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Fixed parameters (omega, users, list geometry, promotion rule).
    pub base: Option<GlobalParamsV2>,
    pub rounds: Option<usize>,
    pub starts: Option<usize>,
    pub prior: Option<bool>,
    pub gof_bootstrap: Option<usize>,
    pub permutations: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictSection {
    pub votes: Option<PathBuf>,
    pub metadata: Option<PathBuf>,
    pub fan_graph: Option<PathBuf>,
    pub clock: Option<PathBuf>,
    pub params: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub prediction: Option<PredictionConfig>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub votes: Option<PathBuf>,
    pub metadata: Option<PathBuf>,
    pub fan_graph: Option<PathBuf>,
    pub clock: Option<PathBuf>,
    pub params: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub windows: Option<Vec<usize>>,
    pub calibration_fraction: Option<f64>,
    pub bootstrap: Option<usize>,
    pub prediction: Option<PredictionConfig>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiggTimeSection {
    pub votes: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub votes_per_digg_hour: Option<f64>,
}

/// Flag value if given, else the file value, else the default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn require<T>(value: Option<T>, what: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::input(format!("missing {what}")))
}
