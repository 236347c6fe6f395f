use std::collections::HashMap;
use std::path::PathBuf;

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use vote_dynamics::estimate::{
    fit_activity_zero_truncated, fit_global_params, fit_lognormal, fit_promotion, fit_story_interest, ks_bootstrap_gof,
    permutation_corr_test, spearman, ActivityFit, Family, GlobalFit, GlobalFitOptions, GofResult, InterestPrior,
    LognormalFit, PromotionFit, StoryFitOptions,
};
use vote_dynamics::io::VoteRow;
use vote_dynamics::{GlobalParamsV2, StoryRecord, SCHEMA_VERSION};

use super::merge_inputs;
use crate::config::pick;
use crate::error::CliResult;
use crate::files::{load_records, write_json_file};
use crate::{Context, InputArgs};

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    inputs: InputArgs,
    /// Output report.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-story fits with the lognormal interestingness prior.
    #[arg(long, overrides_with = "no_prior")]
    prior: bool,
    #[arg(long, overrides_with = "prior")]
    no_prior: bool,
}

#[derive(Debug, Serialize)]
pub struct StoryRow {
    pub story_id: String,
    pub votes: usize,
    pub submitter_fans: u64,
    pub r_fan: f64,
    pub r_nonfan: f64,
    pub converged: bool,
}

#[derive(Debug, Serialize)]
pub struct InterestLaw {
    pub stories: usize,
    pub fit: LognormalFit,
    pub gof: Option<GofResult>,
}

#[derive(Debug, Serialize)]
pub struct Correlation {
    pub x: &'static str,
    pub y: &'static str,
    pub n: usize,
    pub pearson: f64,
    pub p_value: f64,
    pub spearman: f64,
}

#[derive(Debug, Serialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub seed: u64,
    pub converged: bool,
    pub global: GlobalFit,
    pub stories: Vec<StoryRow>,
    pub activity: Option<ActivityFit>,
    pub promotion: Option<PromotionFit>,
    pub interest_fan: Option<InterestLaw>,
    pub interest_nonfan: Option<InterestLaw>,
    pub diagnostics: Vec<Correlation>,
}

/// `hist[k]` is the number of voters with `k` votes in the stream.
fn activity_histogram(rows: &[VoteRow]) -> Vec<u64> {
    let mut per_user: HashMap<&str, usize> = HashMap::new();
    for r in rows {
        *per_user.entry(&r.voter_id).or_default() += 1;
    }
    let mut hist = vec![0u64; per_user.values().copied().max().unwrap_or(0) + 1];
    for &k in per_user.values() {
        hist[k] += 1;
    }
    hist
}

fn interest_law(values: &[f64], n_boot: usize, rng: &mut ChaCha8Rng) -> Option<InterestLaw> {
    let fit = match fit_lognormal(values) {
        Ok(f) => f,
        Err(e) => {
            log::warn!("interestingness law not fitted: {e}");
            return None;
        }
    };
    let gof = if fit.degenerate {
        None
    } else {
        ks_bootstrap_gof(values, Family::Lognormal, n_boot, rng)
            .map_err(|e| log::warn!("goodness of fit skipped: {e}"))
            .ok()
    };
    Some(InterestLaw {
        stories: values.len(),
        fit,
        gof,
    })
}

fn correlation(
    x: &'static str,
    y: &'static str,
    pairs: &[(f64, f64)],
    n_perm: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Correlation> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    let test = permutation_corr_test(&xs, &ys, n_perm, rng)
        .map_err(|e| log::warn!("correlation {x} vs {y} skipped: {e}"))
        .ok()?;
    Some(Correlation {
        x,
        y,
        n: xs.len(),
        pearson: test.r,
        p_value: test.p_value,
        spearman: spearman(&xs, &ys).ok()?,
    })
}

fn fit_stories(records: &[StoryRecord], params: &GlobalParamsV2, prior: bool) -> Vec<StoryRow> {
    let opts = StoryFitOptions {
        prior: prior.then(InterestPrior::paper),
        ..StoryFitOptions::default()
    };
    records
        .par_iter()
        .filter_map(|r| match fit_story_interest(r, params, &opts) {
            Ok(f) => Some(StoryRow {
                story_id: r.story_id.clone(),
                votes: r.n_votes(),
                submitter_fans: r.submitter_fans,
                r_fan: f.r_fan,
                r_nonfan: f.r_nonfan,
                converged: f.converged,
            }),
            Err(e) => {
                log::warn!("story {}: {e}", r.story_id);
                None
            }
        })
        .collect()
}

pub fn run(ctx: &Context, args: FitArgs) -> CliResult<()> {
    let file = ctx.config.fit.clone().unwrap_or_default();
    let inputs = merge_inputs(args.inputs, file.votes, file.metadata, file.fan_graph, file.clock);
    let out = pick(args.out, file.out, PathBuf::from("fit.json"));
    let prior = match (args.prior, args.no_prior) {
        (true, _) => true,
        (_, true) => false,
        _ => file.prior.unwrap_or(false),
    };
    let n_boot = file.gof_bootstrap.unwrap_or(500);
    let n_perm = file.permutations.unwrap_or(9999);
    let loaded = load_records(&inputs)?;
    let base = file
        .base
        .or_else(|| loaded.metadata.as_ref().and_then(|m| m.config.as_ref()).map(|c| c.global.clone()))
        .unwrap_or_else(GlobalParamsV2::paper);
    base.validate()?;
    let opts = GlobalFitOptions {
        rounds: file.rounds.unwrap_or(GlobalFitOptions::default().rounds),
        starts: file.starts.unwrap_or(GlobalFitOptions::default().starts),
    };

    let global = fit_global_params(&loaded.records, &base, &opts)?;
    if !global.converged {
        log::warn!("site-wide fit did not converge");
    }
    let stories = fit_stories(&loaded.records, &global.params, prior);

    let hist = activity_histogram(&loaded.rows);
    let activity = if hist.iter().skip(1).filter(|&&n| n > 0).count() < 3 {
        log::warn!("activity law not fitted: voters show fewer than 3 distinct vote counts");
        None
    } else {
        fit_activity_zero_truncated(&hist)
            .map_err(|e| log::warn!("activity law not fitted: {e}"))
            .ok()
    };
    let promotion = fit_promotion(&loaded.records, base.upcoming_lifetime)
        .map_err(|e| log::warn!("promotion rule not fitted: {e}"))
        .ok();

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let fan: Vec<f64> = stories.iter().map(|s| s.r_fan).filter(|&r| r > 0.0).collect();
    let nonfan: Vec<f64> = stories.iter().map(|s| s.r_nonfan).filter(|&r| r > 0.0).collect();
    let interest_fan = interest_law(&fan, n_boot, &mut rng);
    let interest_nonfan = interest_law(&nonfan, n_boot, &mut rng);

    let fans_vs_r: Vec<(f64, f64)> = stories
        .iter()
        .filter(|s| s.r_nonfan > 0.0)
        .map(|s| (s.submitter_fans as f64, s.r_nonfan))
        .collect();
    let r_vs_r: Vec<(f64, f64)> = stories
        .iter()
        .filter(|s| s.r_fan > 0.0 && s.r_nonfan > 0.0)
        .map(|s| (s.r_fan.ln(), s.r_nonfan.ln()))
        .collect();
    let diagnostics = [
        correlation("submitter_fans", "r_nonfan", &fans_vs_r, n_perm, &mut rng),
        correlation("ln_r_fan", "ln_r_nonfan", &r_vs_r, n_perm, &mut rng),
    ]
    .into_iter()
    .flatten()
    .collect();

    let converged = global.converged
        && stories.iter().all(|s| s.converged)
        && promotion.as_ref().is_none_or(|p| p.result.converged)
        && activity.as_ref().is_none_or(|a| a.result.converged);
    let report = FitReport {
        schema_version: SCHEMA_VERSION,
        seed: ctx.seed,
        converged,
        global,
        stories,
        activity,
        promotion,
        interest_fan,
        interest_nonfan,
        diagnostics,
    };
    write_json_file(&out, &report)?;
    let p = &report.global.params;
    println!(
        "c={:.4} mu={:.3} lambda={:.4} rho={:.3e} over {} stories (converged: {}) -> {}",
        p.c,
        p.surf_mu,
        p.surf_lambda,
        p.rho,
        report.stories.len(),
        report.converged,
        out.display()
    );
    Ok(())
}
