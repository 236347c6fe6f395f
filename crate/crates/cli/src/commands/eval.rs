use std::path::PathBuf;

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use vote_dynamics::predict::{
    compare_error_rates, early_fan_fraction_curve, evaluate, niche_correlations, split_calibration, write_fan_curve_csv,
    Method, MethodSummary, NicheCorrelations, PairedBootstrap, PredictionConfig,
};
use vote_dynamics::{GlobalParamsV2, SCHEMA_VERSION};

use super::{merge_forecast, merge_inputs};
use crate::config::pick;
use crate::error::{CliError, CliResult};
use crate::files::{load_records, read_params, write_atomic, write_json_file};
use crate::{Context, ForecastArgs, InputArgs};

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    inputs: InputArgs,
    #[command(flatten)]
    forecast: ForecastArgs,
    /// Site-wide parameters; defaults to the generating parameters in the metadata.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Vote windows to compare (repeatable); `--window` adds one more.
    #[arg(long = "windows", value_delimiter = ',')]
    windows: Vec<usize>,
    /// Share of stories set aside to calibrate the baseline.
    #[arg(long)]
    calibration_fraction: Option<f64>,
    #[arg(long)]
    bootstrap: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct Comparison {
    pub better: String,
    pub worse: String,
    #[serde(flatten)]
    pub test: PairedBootstrap,
}

#[derive(Debug, Serialize)]
pub struct WindowResult {
    pub window: usize,
    pub stories: usize,
    pub skipped: usize,
    pub methods: Vec<MethodSummary>,
    pub comparisons: Vec<Comparison>,
}

#[derive(Debug, Serialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub seed: u64,
    pub config: PredictionConfig,
    pub calibration_stories: usize,
    pub windows: Vec<WindowResult>,
    pub niche: Option<NicheCorrelations>,
}

fn methods(config: &PredictionConfig) -> [Method; 3] {
    [
        Method::Model {
            use_prior: config.use_prior,
            equal_r: false,
        },
        Method::Model {
            use_prior: config.use_prior,
            equal_r: true,
        },
        Method::Baseline,
    ]
}

pub fn run(ctx: &Context, args: EvalArgs) -> CliResult<()> {
    let file = ctx.config.eval.clone().unwrap_or_default();
    let config = merge_forecast(&args.forecast, file.prediction)?;
    let inputs = merge_inputs(args.inputs, file.votes, file.metadata, file.fan_graph, file.clock);
    let out_dir = pick(args.out_dir, file.out_dir, PathBuf::from("eval"));
    let mut windows = if args.windows.is_empty() {
        file.windows.unwrap_or_else(|| vec![10, 216])
    } else {
        args.windows
    };
    if let Some(w) = args.forecast.window {
        if !windows.contains(&w) {
            windows.push(w);
        }
    }
    let fraction = pick(args.calibration_fraction, file.calibration_fraction, 0.3);
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(CliError::input(format!("calibration fraction must lie in (0, 1), got {fraction}")));
    }
    let n_boot = pick(args.bootstrap, file.bootstrap, 2000);
    let loaded = load_records(&inputs)?;
    let global: GlobalParamsV2 = match args.params.or(file.params) {
        Some(p) => read_params(&p)?,
        None => loaded
            .metadata
            .as_ref()
            .and_then(|m| m.config.as_ref())
            .map(|c| c.global.clone())
            .ok_or_else(|| CliError::input("no parameters: pass --params or a metadata file with a generating config"))?,
    };

    let (calibration, evaluation) = split_calibration(&loaded.records, fraction, ctx.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut results = Vec::new();
    let mut grid = Vec::new();
    for &window in &windows {
        let pc = PredictionConfig {
            vote_window: window,
            ..config
        };
        pc.validate()?;
        let methods = methods(&pc);
        let report = evaluate(&evaluation, &calibration, &global, &pc, &methods)?;
        let names: Vec<String> = methods.iter().map(Method::name).collect();
        let mut comparisons = Vec::new();
        for pair in names.windows(2) {
            match compare_error_rates(&report, &pair[0], &pair[1], n_boot, &mut rng) {
                Ok(test) => comparisons.push(Comparison {
                    better: pair[0].clone(),
                    worse: pair[1].clone(),
                    test,
                }),
                Err(e) => log::warn!("window {window}: {} vs {} not compared: {e}", pair[0], pair[1]),
            }
        }
        write_atomic(&out_dir.join(format!("rows_w{window}.csv")), |w| report.write_rows_csv(w))?;
        for m in &report.methods {
            grid.push((window, m.clone()));
        }
        results.push(WindowResult {
            window,
            stories: report.rows.len(),
            skipped: report.skipped,
            methods: report.methods,
            comparisons,
        });
    }

    let k = windows.iter().copied().min().unwrap_or(config.vote_window);
    match early_fan_fraction_curve(&loaded.records, k, config.t_final) {
        Ok(curve) => write_atomic(&out_dir.join("fan_curve.csv"), |w| write_fan_curve_csv(&curve, k, w))?,
        Err(e) => log::warn!("fan-vote curve skipped: {e}"),
    }
    let niche_window = windows.iter().copied().max().unwrap_or(config.vote_window);
    let niche = niche_correlations(&loaded.records, &global, niche_window, config.t_final)
        .map_err(|e| log::warn!("niche correlations skipped: {e}"))
        .ok();

    write_atomic(&out_dir.join("grid.csv"), |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["window", "method", "n", "unavailable", "error_rate", "pearson", "spearman"])?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for (window, m) in &grid {
            csv.write_record([
                window.to_string(),
                m.name.clone(),
                m.n.to_string(),
                m.unavailable.to_string(),
                m.error_rate.to_string(),
                opt(m.pearson),
                opt(m.spearman),
            ])?;
        }
        csv.flush()?;
        Ok(())
    })?;
    let report = EvalReport {
        schema_version: SCHEMA_VERSION,
        seed: ctx.seed,
        config,
        calibration_stories: calibration.len(),
        windows: results,
        niche,
    };
    write_json_file(&out_dir.join("eval.json"), &report)?;
    for w in &report.windows {
        let cells: Vec<String> = w.methods.iter().map(|m| format!("{} {:.3}", m.name, m.error_rate)).collect();
        println!("window {:>4}: {}", w.window, cells.join(", "));
    }
    Ok(())
}
