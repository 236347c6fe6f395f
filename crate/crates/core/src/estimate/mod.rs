//! Statistical fitting: interestingness, site-wide parameters, user
//! activity, the promotion curve, goodness of fit and correlation tests.

mod activity;
mod corr;
mod dual;
mod global;
mod gof;
pub mod optim;
mod poisson;
mod promotion;
mod story;

use serde::{Deserialize, Serialize};

pub use activity::{
    fit_activity_zero_truncated, ln_prob_positive_grad, poisson_lognormal_ln_pmf_grad, poisson_lognormal_pmf,
    zero_truncated_loglik, ActivityFit,
};
pub use corr::{pearson, permutation_corr_test, ranks, spearman, CorrTest};
pub use global::{fit_global_params, fit_rho, fit_visibility, profile_loglik, GlobalFit, GlobalFitOptions, VoteSubset};
pub use gof::{fit_lognormal, ks_bootstrap_gof, ks_statistic, lognormal_loglik, Family, GofResult, LognormalFit};
pub use poisson::{constant_rate_mle, integrate, loglik_constant, loglik_inhomogeneous};
pub use promotion::{fit_promotion, fit_promotion_counts, promotion_loglik, PromotionCounts, PromotionFit};
pub use story::{fit_story_interest, story_loglik, InterestPrior, StoryFit, StoryFitOptions};

/// Lognormal prior on an interestingness value.
pub type LognormalPrior = crate::types::Lognormal;

/// Outcome of a numerical fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub estimate: Vec<f64>,
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    pub stderr: Option<Vec<f64>>,
}
