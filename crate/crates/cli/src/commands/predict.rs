use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use vote_dynamics::predict::{predict_story, PredictionConfig};
use vote_dynamics::SCHEMA_VERSION;

use super::{merge_forecast, merge_inputs};
use crate::config::{pick, require};
use crate::error::{CliError, CliResult};
use crate::files::{load_records, read_params, write_atomic, write_json_file};
use crate::{Context, ForecastArgs, InputArgs};

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    inputs: InputArgs,
    #[command(flatten)]
    forecast: ForecastArgs,
    /// Site-wide parameters: a `fit` report or a bare parameter object.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the rows as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct PredictionRow {
    pub story_id: String,
    pub window_votes: usize,
    pub r_fan: Option<f64>,
    pub r_nonfan: Option<f64>,
    pub predicted_final: Option<f64>,
    pub predicted_popular: Option<bool>,
    /// Hours after submission at which the model promotes the story.
    pub predicted_promotion_time: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct PredictOutput {
    pub schema_version: u32,
    pub config: PredictionConfig,
    pub rows: Vec<PredictionRow>,
}

pub fn run(ctx: &Context, args: PredictArgs) -> CliResult<()> {
    let file = ctx.config.predict.clone().unwrap_or_default();
    let params_path = require(args.params.or(file.params), "fitted parameters (--params)")?;
    let global = read_params(&params_path)?;
    let config = merge_forecast(&args.forecast, file.prediction)?;
    let inputs = merge_inputs(args.inputs, file.votes, file.metadata, file.fan_graph, file.clock);
    let out = pick(args.out, file.out, PathBuf::from("predictions.json"));
    let csv_path = args.csv.or(file.csv);
    let loaded = load_records(&inputs)?;

    let results: Vec<_> = loaded
        .records
        .par_iter()
        .map(|r| (r, predict_story(r, &global, &config)))
        .collect();
    let failed = results.iter().filter(|(_, p)| p.is_err()).count();
    if failed == results.len() {
        let (r, e) = results.into_iter().next().expect("at least one story");
        let e = CliError::from(e.expect_err("every forecast failed"));
        return Err(match e {
            CliError::Input(m) => CliError::Input(format!("no story could be forecast; {}: {m}", r.story_id)),
            CliError::Numeric(m) => CliError::Numeric(format!("no story could be forecast; {}: {m}", r.story_id)),
        });
    }
    if failed > 0 {
        log::warn!("{failed} of {} stories could not be forecast", results.len());
    }
    let rows: Vec<PredictionRow> = results
        .into_iter()
        .map(|(r, p)| {
            let window_votes = r.n_votes().min(config.vote_window);
            match p {
                Ok(p) => PredictionRow {
                    story_id: p.story_id,
                    window_votes,
                    r_fan: Some(p.r_fan),
                    r_nonfan: Some(p.r_nonfan),
                    predicted_popular: Some(p.predicted_final >= config.popularity_threshold as f64),
                    predicted_final: Some(p.predicted_final),
                    predicted_promotion_time: p.predicted_promotion,
                    error: None,
                },
                Err(e) => PredictionRow {
                    story_id: r.story_id.clone(),
                    window_votes,
                    r_fan: None,
                    r_nonfan: None,
                    predicted_final: None,
                    predicted_popular: None,
                    predicted_promotion_time: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let output = PredictOutput {
        schema_version: SCHEMA_VERSION,
        config,
        rows,
    };
    write_json_file(&out, &output)?;
    if let Some(path) = csv_path {
        write_atomic(&path, |w| {
            let mut csv = csv::Writer::from_writer(w);
            for row in &output.rows {
                csv.serialize(row)?;
            }
            csv.flush()?;
            Ok(())
        })?;
    }
    let popular = output.rows.iter().filter(|r| r.predicted_popular == Some(true)).count();
    println!("{} stories, {popular} forecast popular -> {}", output.rows.len(), out.display());
    Ok(())
}
