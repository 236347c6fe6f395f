//! Story visibility: the law of surfing, list position over time, and the two
//! promotion mechanisms (vote threshold and per-vote logistic probability).
//!
//! The number of list pages a visitor views follows an inverse Gaussian
//! distribution with mean `mu` and shape `lambda`. A story on page `m` (pages
//! are fractional within a page) is seen by the fraction of visitors who view
//! at least `m` pages, which is the inverse Gaussian survival function at
//! `m - 1`. Writing
//!
//! ```text
//! a = sqrt(lambda / x) (x / mu - 1),   b = sqrt(lambda / x) (x / mu + 1),   x = m - 1
//! S(x) = Phi(-a) - exp(2 lambda / mu) Phi(-b)
//! ```
//!
//! the second term equals `exp(-a^2 / 2) erfcx(b / sqrt 2) / 2`, which is how it
//! is evaluated so that `exp(2 lambda / mu)` never overflows. The integral of
//! the survival function, `E[min(X, x)] = x S(x) + mu (Phi(a) - exp(2 lambda / mu) Phi(-b))`,
//! has the same building blocks and is what the likelihoods integrate.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};
use crate::special::{erfc, erfcx, logistic, norm_cdf};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Inverse-Gaussian page-depth law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfLaw {
    pub mu: f64,
    pub lambda: f64,
}

/// Value of a function of the surfing law together with its partial
/// derivatives in `mu` and `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WithGrad {
    pub value: f64,
    pub d_mu: f64,
    pub d_lambda: f64,
}

struct Parts {
    /// Phi(a)
    lower_a: f64,
    /// exp(2 lambda / mu) Phi(-b)
    mirror: f64,
    /// phi(a)
    density_a: f64,
    /// S(x), formed without cancellation when a > 0
    survival: f64,
}

impl SurfLaw {
    pub fn new(mu: f64, lambda: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0 && lambda.is_finite() && lambda > 0.0) {
            return domain(format!("surfing parameters must be positive, got mu={mu}, lambda={lambda}"));
        }
        Ok(Self { mu, lambda })
    }

    fn parts(&self, x: f64) -> Parts {
        let (mu, lam) = (self.mu, self.lambda);
        let sx = x.sqrt();
        let sl = lam.sqrt();
        let a = sl * (x / mu - 1.0) / sx;
        let b = sl * (x / mu + 1.0) / sx;
        let ea = (-0.5 * a * a).exp();
        let mirror = 0.5 * ea * erfcx(b * FRAC_1_SQRT_2);
        let survival = if a > 0.0 {
            0.5 * ea * (erfcx(a * FRAC_1_SQRT_2) - erfcx(b * FRAC_1_SQRT_2))
        } else {
            0.5 * erfc(a * FRAC_1_SQRT_2) - mirror
        };
        Parts {
            lower_a: norm_cdf(a),
            mirror,
            density_a: ea / SQRT_2PI,
            survival: survival.clamp(0.0, 1.0),
        }
    }

    /// Probability a visitor views more than `x` additional pages, `x >= 0`.
    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        self.parts(x).survival
    }

    /// Fraction of visitors who reach page `m` (`m >= 1`).
    pub fn upper(&self, m: f64) -> Result<f64> {
        if m.is_nan() || m < 1.0 {
            return domain(format!("page must be at least 1, got {m}"));
        }
        Ok(self.survival(m - 1.0))
    }

    pub fn survival_grad(&self, x: f64) -> WithGrad {
        if x <= 0.0 {
            return WithGrad {
                value: 1.0,
                d_mu: 0.0,
                d_lambda: 0.0,
            };
        }
        let (mu, lam) = (self.mu, self.lambda);
        let p = self.parts(x);
        WithGrad {
            value: p.survival,
            d_mu: 2.0 * lam / (mu * mu) * p.mirror,
            d_lambda: p.density_a / (lam * x).sqrt() - 2.0 / mu * p.mirror,
        }
    }

    /// `∫_0^x S(y) dy = E[min(X, x)]`.
    pub fn integrated_survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let p = self.parts(x);
        x * p.survival + self.mu * (p.lower_a - p.mirror)
    }

    pub fn integrated_survival_grad(&self, x: f64) -> WithGrad {
        if x <= 0.0 {
            return WithGrad {
                value: 0.0,
                d_mu: 0.0,
                d_lambda: 0.0,
            };
        }
        let (mu, lam) = (self.mu, self.lambda);
        let p = self.parts(x);
        let partial = p.lower_a - p.mirror;
        let ds_mu = 2.0 * lam / (mu * mu) * p.mirror;
        let ds_lam = p.density_a / (lam * x).sqrt() - 2.0 / mu * p.mirror;
        let dl_mu = -p.density_a * 2.0 * (lam * x).sqrt() / (mu * mu) + 2.0 * lam / (mu * mu) * p.mirror;
        let dl_lam = p.density_a * x.sqrt() / (mu * lam.sqrt()) - 2.0 / mu * p.mirror;
        WithGrad {
            value: x * p.survival + mu * partial,
            d_mu: x * ds_mu + partial + mu * dl_mu,
            d_lambda: x * ds_lam + mu * dl_lam,
        }
    }
}

/// Fraction of users who view at least `m` pages under the inverse Gaussian
/// page-depth law. `f_page(1) = 1`.
pub fn law_of_surfing_upper(m: f64, surf_mu: f64, surf_lambda: f64) -> Result<f64> {
    SurfLaw::new(surf_mu, surf_lambda)?.upper(m)
}

/// Which list the story is on and where.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "list", rename_all = "snake_case")]
pub enum ListPosition {
    Upcoming { page: f64 },
    FrontPage { page: f64 },
    Removed,
}

impl ListPosition {
    pub fn page(&self) -> Option<f64> {
        match *self {
            ListPosition::Upcoming { page } | ListPosition::FrontPage { page } => Some(page),
            ListPosition::Removed => None,
        }
    }

    pub fn list_name(&self) -> &'static str {
        match self {
            ListPosition::Upcoming { .. } => "upcoming",
            ListPosition::FrontPage { .. } => "front",
            ListPosition::Removed => "removed",
        }
    }
}

/// How fast stories move down the two lists, and how long an unpromoted story
/// stays on the upcoming list. Rates are pages per unit of model time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ListGeometry {
    pub k_upcoming: f64,
    pub k_front: f64,
    pub upcoming_lifetime: f64,
}

impl From<&crate::types::GlobalParamsV1> for ListGeometry {
    fn from(g: &crate::types::GlobalParamsV1) -> Self {
        Self {
            k_upcoming: g.k_upcoming,
            k_front: g.k_front,
            upcoming_lifetime: g.upcoming_lifetime,
        }
    }
}

impl From<&crate::types::GlobalParamsV2> for ListGeometry {
    fn from(g: &crate::types::GlobalParamsV2) -> Self {
        Self {
            k_upcoming: g.k_upcoming,
            k_front: g.k_front,
            upcoming_lifetime: g.upcoming_lifetime,
        }
    }
}

/// Position of a story `t` time units after submission.
pub fn story_page(t: f64, promoted_at: Option<f64>, geometry: &ListGeometry) -> ListPosition {
    let t = t.max(0.0);
    match promoted_at {
        Some(tp) if t >= tp => ListPosition::FrontPage {
            page: geometry.k_front * (t - tp) + 1.0,
        },
        _ if t < geometry.upcoming_lifetime => ListPosition::Upcoming {
            page: geometry.k_upcoming * t + 1.0,
        },
        _ => ListPosition::Removed,
    }
}

/// Probability a user who is not a fan of any prior voter sees the story.
pub fn nonfan_visibility(position: ListPosition, c: f64, surf: &SurfLaw) -> f64 {
    match position {
        ListPosition::FrontPage { page } => surf.survival(page - 1.0),
        ListPosition::Upcoming { page } => c * surf.survival(page - 1.0),
        ListPosition::Removed => 0.0,
    }
}

/// Rule deciding when an upcoming story moves to the front page.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PromotionModel {
    /// Promote once the story has `h` votes.
    Threshold { h: u32 },
    /// Promote after the v-th vote with probability `logistic(intercept + slope v)`, v >= 2.
    Logistic { intercept: f64, slope: f64 },
}

impl PromotionModel {
    /// Stand-in logistic curve: median promotion near 45 votes with a spread of
    /// roughly ten votes either side.
    pub fn default_logistic() -> Self {
        PromotionModel::Logistic {
            intercept: -9.0,
            slope: 0.15,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PromotionModel::Threshold { h } if h < 2 => invalid(format!("threshold must be at least 2, got {h}")),
            PromotionModel::Logistic { intercept, slope } if !(intercept.is_finite() && slope.is_finite()) => {
                invalid("logistic promotion coefficients must be finite")
            }
            _ => Ok(()),
        }
    }

    /// Probability of promotion right after vote `v`. Domain error when `v < 1`.
    pub fn probability(&self, v: u64) -> Result<f64> {
        if v < 1 {
            return domain("vote count must be at least 1");
        }
        Ok(self.probability_unchecked(v))
    }

    pub(crate) fn probability_unchecked(&self, v: u64) -> f64 {
        match *self {
            PromotionModel::Threshold { h } => {
                if v >= u64::from(h) {
                    1.0
                } else {
                    0.0
                }
            }
            PromotionModel::Logistic { intercept, slope } => {
                if v <= 1 {
                    0.0
                } else {
                    logistic(intercept + slope * v as f64)
                }
            }
        }
    }

    /// Probability the story is still unpromoted after its v-th vote.
    pub fn survival(&self, v: u64) -> f64 {
        (1..=v).map(|i| 1.0 - self.probability_unchecked(i)).product()
    }

    /// Smallest vote count `v > votes_so_far` at which promotion has become at
    /// least as likely as not, given the story was unpromoted after
    /// `votes_so_far` votes. `None` if that never happens within `limit` votes.
    pub fn median_promotion_vote(&self, votes_so_far: u64, limit: u64) -> Option<u64> {
        if let PromotionModel::Threshold { h } = *self {
            return Some(u64::from(h).max(votes_so_far + 1));
        }
        let mut surv = 1.0;
        for v in votes_so_far + 1..=votes_so_far + limit {
            surv *= 1.0 - self.probability_unchecked(v);
            if surv <= 0.5 {
                return Some(v);
            }
        }
        None
    }
}

/// `P(v)` for a promotion model.
pub fn promotion_probability(v: u64, model: &PromotionModel) -> Result<f64> {
    model.probability(v)
}

/// Integral of the non-fan visibility over `[t0, t1]`, with its partial
/// derivatives in `(c, mu, lambda)` as `[value, d_c, d_mu, d_lambda]`.
pub fn nonfan_exposure(
    t0: f64,
    t1: f64,
    promoted_at: Option<f64>,
    c: f64,
    surf: &SurfLaw,
    geometry: &ListGeometry,
) -> [f64; 4] {
    let mut out = [0.0; 4];
    if t1 <= t0 {
        return out;
    }
    let upcoming_end = promoted_at.unwrap_or(f64::INFINITY).min(geometry.upcoming_lifetime);
    let (a, b) = (t0.max(0.0), t1.min(upcoming_end));
    if b > a {
        let k = geometry.k_upcoming;
        let hi = surf.integrated_survival_grad(k * b);
        let lo = surf.integrated_survival_grad(k * a);
        let base = (hi.value - lo.value) / k;
        out[0] += c * base;
        out[1] += base;
        out[2] += c * (hi.d_mu - lo.d_mu) / k;
        out[3] += c * (hi.d_lambda - lo.d_lambda) / k;
    }
    if let Some(tp) = promoted_at {
        let (a, b) = (t0.max(tp), t1);
        if b > a {
            let k = geometry.k_front;
            let hi = surf.integrated_survival_grad(k * (b - tp));
            let lo = surf.integrated_survival_grad(k * (a - tp));
            out[0] += (hi.value - lo.value) / k;
            out[2] += (hi.d_mu - lo.d_mu) / k;
            out[3] += (hi.d_lambda - lo.d_lambda) / k;
        }
    }
    out
}

/// Non-fan visibility at time `t` with its partial derivatives in `(c, mu, lambda)`.
pub fn nonfan_visibility_grad(t: f64, promoted_at: Option<f64>, c: f64, surf: &SurfLaw, geometry: &ListGeometry) -> [f64; 4] {
    match story_page(t, promoted_at, geometry) {
        ListPosition::Upcoming { page } => {
            let g = surf.survival_grad(page - 1.0);
            [c * g.value, g.value, c * g.d_mu, c * g.d_lambda]
        }
        ListPosition::FrontPage { page } => {
            let g = surf.survival_grad(page - 1.0);
            [g.value, 0.0, g.d_mu, g.d_lambda]
        }
        ListPosition::Removed => [0.0; 4],
    }
}
