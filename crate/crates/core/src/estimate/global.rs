//! Site-wide parameters from many stories, with each story's interestingness
//! profiled out.
//!
//! Non-fan votes determine the upcoming-list fraction `c` and the surfing law
//! `(mu, lambda)`; fan votes then determine `rho`. The two fits alternate
//! until the estimates settle.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dual::Dual;
use super::optim::{minimize, numerical_hessian, standard_errors, BfgsOptions};
use super::story::{profile_parts, reconstruct};
use super::FitResult;
use crate::error::{invalid, Result};
use crate::special::logistic;
use crate::types::{GlobalParamsV2, StoryRecord};

/// Which votes a profile likelihood uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteSubset {
    NonFan,
    Fan,
    All,
}

/// Profile log-likelihood over a corpus and its gradient in `(c, mu, lambda, rho)`.
pub fn profile_loglik(stories: &[StoryRecord], global: &GlobalParamsV2, subset: VoteSubset) -> Result<(f64, [f64; 4])> {
    let parts: Vec<Result<Dual>> = stories
        .par_iter()
        .map(|s| {
            let rec = reconstruct(s, global)?;
            let (nonfan, fan) = profile_parts(&rec);
            Ok(match subset {
                VoteSubset::NonFan => nonfan,
                VoteSubset::Fan => fan,
                VoteSubset::All => nonfan + fan,
            })
        })
        .collect();
    let mut total = Dual::default();
    for p in parts {
        total += p?;
    }
    Ok((total.v, total.d))
}

/// Options for [`fit_global_params`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalFitOptions {
    /// Alternations between the visibility fit and the `rho` fit.
    pub rounds: usize,
    /// Number of best grid points used as starting values.
    pub starts: usize,
}

impl Default for GlobalFitOptions {
    fn default() -> Self {
        Self { rounds: 3, starts: 3 }
    }
}

/// Estimated site-wide parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalFit {
    /// `base` with `c`, `surf_mu`, `surf_lambda` and `rho` replaced by their estimates.
    pub params: GlobalParamsV2,
    pub visibility: FitResult,
    pub rho: FitResult,
    pub converged: bool,
}

const C_GRID: [f64; 3] = [0.02, 0.08, 0.3];
const MU_GRID: [f64; 4] = [1.0, 4.0, 12.0, 40.0];
const LAMBDA_GRID: [f64; 4] = [0.03, 0.15, 0.6, 2.5];

fn with_visibility(base: &GlobalParamsV2, c: f64, mu: f64, lambda: f64) -> GlobalParamsV2 {
    GlobalParamsV2 {
        c,
        surf_mu: mu,
        surf_lambda: lambda,
        ..base.clone()
    }
}

fn usable(stories: &[StoryRecord]) -> Vec<StoryRecord> {
    stories.iter().filter(|s| s.n_votes() >= 2).cloned().collect()
}

/// Fits `(c, mu, lambda)` to the non-fan votes with `rho` held at `base.rho`.
pub fn fit_visibility(stories: &[StoryRecord], base: &GlobalParamsV2, starts: usize) -> Result<FitResult> {
    let stories = usable(stories);
    if stories.is_empty() {
        return invalid("no story has votes beyond the submitter's");
    }
    let n_votes: usize = stories.iter().map(|s| s.n_votes()).sum();
    let scale = 1.0 / n_votes as f64;
    let objective = |z: &[f64]| -> (f64, Vec<f64>) {
        let (c, mu, lambda) = (logistic(z[0]), z[1].exp(), z[2].exp());
        if !(c > 0.0 && c < 1.0 && mu.is_finite() && lambda.is_finite() && mu > 0.0 && lambda > 0.0) {
            return (f64::INFINITY, vec![0.0; 3]);
        }
        match profile_loglik(&stories, &with_visibility(base, c, mu, lambda), VoteSubset::NonFan) {
            Ok((v, d)) if v.is_finite() => (
                -v * scale,
                vec![-d[0] * c * (1.0 - c) * scale, -d[1] * mu * scale, -d[2] * lambda * scale],
            ),
            _ => (f64::INFINITY, vec![0.0; 3]),
        }
    };

    let mut grid = Vec::new();
    for &c in &C_GRID {
        for &mu in &MU_GRID {
            for &lambda in &LAMBDA_GRID {
                let z = [(c / (1.0 - c)).ln(), mu.ln(), lambda.ln()];
                grid.push((objective(&z).0, z));
            }
        }
    }
    let current = [(base.c / (1.0 - base.c)).ln(), base.surf_mu.ln(), base.surf_lambda.ln()];
    grid.push((objective(&current).0, current));
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));

    let opts = BfgsOptions::default();
    let mut best: Option<super::optim::Minimum> = None;
    for (_, z0) in grid.iter().take(starts.max(1)) {
        let m = minimize(objective, z0, &opts);
        if best.as_ref().is_none_or(|b| m.f < b.f) {
            best = Some(m);
        }
    }
    let m = best.expect("at least one start");
    let (c, mu, lambda) = (logistic(m.x[0]), m.x[1].exp(), m.x[2].exp());

    let natural_grad = |p: &[f64]| -> Vec<f64> {
        match profile_loglik(&stories, &with_visibility(base, p[0], p[1], p[2]), VoteSubset::NonFan) {
            Ok((_, d)) => vec![-d[0], -d[1], -d[2]],
            Err(_) => vec![f64::NAN; 3],
        }
    };
    let info = numerical_hessian(natural_grad, &[c, mu, lambda], 1e-4);
    let stderr = standard_errors(&info);
    Ok(FitResult {
        names: vec!["c".into(), "surf_mu".into(), "surf_lambda".into()],
        estimate: vec![c, mu, lambda],
        log_likelihood: -m.f / scale,
        converged: m.converged && stories.len() >= 2,
        iterations: m.iterations,
        stderr,
    })
}

/// Fits `rho` to the fan votes with the visibility parameters of `global` held fixed.
pub fn fit_rho(stories: &[StoryRecord], global: &GlobalParamsV2) -> Result<FitResult> {
    let stories = usable(stories);
    if !stories.iter().any(|s| s.votes.iter().any(|v| v.is_fan)) {
        return invalid("no fan votes to fit rho");
    }
    let n_votes: usize = stories.iter().map(|s| s.n_votes()).sum();
    let scale = 1.0 / n_votes as f64;
    let cap = 1.0 / (global.users - 1) as f64;
    let at = |rho: f64| GlobalParamsV2 { rho, ..global.clone() };
    let objective = |z: &[f64]| -> (f64, Vec<f64>) {
        let rho = z[0].exp();
        if !(rho > 0.0 && rho < cap) {
            return (f64::INFINITY, vec![0.0]);
        }
        match profile_loglik(&stories, &at(rho), VoteSubset::Fan) {
            Ok((v, d)) if v.is_finite() => (-v * scale, vec![-d[3] * rho * scale]),
            _ => (f64::INFINITY, vec![0.0]),
        }
    };
    let mut starts: Vec<(f64, f64)> = [1e-3, 1e-2, 0.1, 0.5]
        .iter()
        .map(|&k| {
            let z = (k * cap).ln();
            (objective(&[z]).0, z)
        })
        .collect();
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m = minimize(objective, &[starts[0].1], &BfgsOptions::default());
    let rho = m.x[0].exp();
    let natural_grad = |p: &[f64]| -> Vec<f64> {
        match profile_loglik(&stories, &at(p[0]), VoteSubset::Fan) {
            Ok((_, d)) => vec![-d[3]],
            Err(_) => vec![f64::NAN],
        }
    };
    let info = numerical_hessian(natural_grad, &[rho], 1e-4);
    Ok(FitResult {
        names: vec!["rho".into()],
        estimate: vec![rho],
        log_likelihood: -m.f / scale,
        converged: m.converged && stories.len() >= 2,
        iterations: m.iterations,
        stderr: standard_errors(&info),
    })
}

/// Alternates [`fit_visibility`] and [`fit_rho`], starting from `base`.
pub fn fit_global_params(stories: &[StoryRecord], base: &GlobalParamsV2, opts: &GlobalFitOptions) -> Result<GlobalFit> {
    base.validate()?;
    let mut params = base.clone();
    let mut visibility = None;
    let mut rho = None;
    for round in 0..opts.rounds.max(1) {
        let starts = if round == 0 { opts.starts } else { 1 };
        let vis = fit_visibility(stories, &params, starts)?;
        params.c = vis.estimate[0];
        params.surf_mu = vis.estimate[1];
        params.surf_lambda = vis.estimate[2];
        let r = fit_rho(stories, &params)?;
        let change = (r.estimate[0] / params.rho - 1.0).abs();
        params.rho = r.estimate[0];
        log::debug!("global fit round {round}: {:?}, rho = {}", vis.estimate, params.rho);
        visibility = Some(vis);
        rho = Some(r);
        if change < 1e-6 {
            break;
        }
    }
    let visibility = visibility.expect("ran at least once");
    let rho = rho.expect("ran at least once");
    Ok(GlobalFit {
        converged: visibility.converged && rho.converged,
        params,
        visibility,
        rho,
    })
}
