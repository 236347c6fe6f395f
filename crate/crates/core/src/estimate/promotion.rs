//! Logistic fit of the per-vote promotion probability.
//!
//! Each upcoming story contributes one Bernoulli outcome per vote from the
//! second on: promoted right after that vote, or not. `P(1) = 0` is fixed.

use serde::{Deserialize, Serialize};

use super::FitResult;
use crate::error::{invalid, Result};
use crate::special::{logistic, softplus};
use crate::types::StoryRecord;
use crate::visibility::PromotionModel;

/// Aggregated outcomes: `trials[v]` stories at risk after vote `v`, of which `promoted[v]` were promoted.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PromotionCounts {
    pub trials: Vec<u64>,
    pub promoted: Vec<u64>,
}

impl PromotionCounts {
    fn bump(&mut self, v: usize, success: bool) {
        if v >= self.trials.len() {
            self.trials.resize(v + 1, 0);
            self.promoted.resize(v + 1, 0);
        }
        self.trials[v] += 1;
        if success {
            self.promoted[v] += 1;
        }
    }

    /// Outcomes from stories observed on the upcoming list for `upcoming_lifetime` hours.
    pub fn from_records(records: &[StoryRecord], upcoming_lifetime: f64) -> Self {
        let mut counts = Self::default();
        for r in records {
            match r.votes_before_promotion() {
                Some(vp) => {
                    for v in 2..=vp {
                        counts.bump(v, v == vp);
                    }
                }
                None => {
                    let on_list = r.votes.partition_point(|x| x.time < upcoming_lifetime);
                    for v in 2..=on_list {
                        counts.bump(v, false);
                    }
                }
            }
        }
        counts
    }

    fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (2..self.trials.len())
            .filter(|&v| self.trials[v] > 0)
            .map(|v| (v as f64, self.trials[v] as f64, self.promoted[v] as f64))
    }
}

/// Bernoulli log-likelihood of the counts under `logistic(a + b v)` and its gradient in `(a, b)`.
pub fn promotion_loglik(counts: &PromotionCounts, intercept: f64, slope: f64) -> (f64, [f64; 2]) {
    let mut ll = 0.0;
    let mut g = [0.0; 2];
    for (v, n, k) in counts.rows() {
        let eta = intercept + slope * v;
        // k ln p + (n - k) ln(1 - p) = k eta - n ln(1 + e^eta)
        ll += k * eta - n * softplus(eta);
        let resid = k - n * logistic(eta);
        g[0] += resid;
        g[1] += resid * v;
    }
    (ll, g)
}

/// Fitted promotion curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromotionFit {
    pub model: PromotionModel,
    /// Vote count at which the fitted probability crosses one half.
    pub midpoint: f64,
    pub result: FitResult,
}

/// Largest standardized slope before the data are declared separable.
const SLOPE_CAP: f64 = 60.0;

/// Newton fit of `P(v) = logistic(a + b v)` for `v >= 2`.
pub fn fit_promotion(records: &[StoryRecord], upcoming_lifetime: f64) -> Result<PromotionFit> {
    fit_promotion_counts(&PromotionCounts::from_records(records, upcoming_lifetime))
}

pub fn fit_promotion_counts(counts: &PromotionCounts) -> Result<PromotionFit> {
    let rows: Vec<(f64, f64, f64)> = counts.rows().collect();
    if rows.is_empty() {
        return invalid("no upcoming-list votes beyond the first");
    }
    let total: f64 = rows.iter().map(|r| r.1).sum();
    let center = rows.iter().map(|r| r.0 * r.1).sum::<f64>() / total;
    let spread = (rows.iter().map(|r| (r.0 - center).powi(2) * r.1).sum::<f64>() / total).sqrt().max(1.0);
    let successes: f64 = rows.iter().map(|r| r.2).sum();
    // standardized coordinates x = (v - center) / spread
    let rate = (successes / total).clamp(1e-12, 1.0 - 1e-12);
    let mut beta = [(rate / (1.0 - rate)).ln(), 0.0];
    let objective = |b: &[f64; 2]| -> f64 {
        rows.iter()
            .map(|&(v, n, k)| {
                let eta = b[0] + b[1] * (v - center) / spread;
                k * eta - n * softplus(eta)
            })
            .sum()
    };
    let mut ll = objective(&beta);
    let mut converged = false;
    let mut separated = false;
    let mut iterations = 0;
    for _ in 0..200 {
        iterations += 1;
        let (mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(v, n, k) in &rows {
            let x = (v - center) / spread;
            let p = logistic(beta[0] + beta[1] * x);
            let w = n * p * (1.0 - p);
            g0 += k - n * p;
            g1 += (k - n * p) * x;
            h00 += w;
            h01 += w * x;
            h11 += w * x * x;
        }
        if g0.abs().max(g1.abs()) <= 1e-9 * (1.0 + ll.abs()) {
            converged = true;
            break;
        }
        let det = h00 * h11 - h01 * h01;
        let mut step = if det > 1e-300 {
            [(h11 * g0 - h01 * g1) / det, (h00 * g1 - h01 * g0) / det]
        } else {
            [g0 * 1e-3, g1 * 1e-3]
        };
        let mut accepted = false;
        for _ in 0..60 {
            let trial = [beta[0] + step[0], beta[1] + step[1]];
            let lt = objective(&trial);
            if lt.is_finite() && lt >= ll {
                beta = trial;
                accepted = lt > ll;
                ll = lt;
                break;
            }
            step = [step[0] * 0.5, step[1] * 0.5];
        }
        if beta[1].abs() > SLOPE_CAP || beta[0].abs() > 1e3 {
            separated = true;
            break;
        }
        if !accepted {
            break;
        }
    }
    let slope = beta[1] / spread;
    let intercept = beta[0] - slope * center;
    let usable = successes > 0.0 && slope > 0.0;
    Ok(PromotionFit {
        model: PromotionModel::Logistic { intercept, slope },
        midpoint: -intercept / slope,
        result: FitResult {
            names: vec!["intercept".into(), "slope".into()],
            estimate: vec![intercept, slope],
            log_likelihood: ll,
            converged: converged && !separated && usable,
            iterations,
            stderr: None,
        },
    })
}
