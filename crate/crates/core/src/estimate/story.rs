//! Per-story interestingness from an observed vote stream.
//!
//! The unseen-fan and unseen-non-fan pools are rebuilt along the observed
//! votes: both decay with the expected exposure between votes, and every vote
//! after the submitter's moves `rho N` non-fans into the fan pool. Given the
//! pools, fan votes are a Poisson process with rate `omega r_F F(t)` and
//! non-fan votes one with rate `omega r_N P_N(t) N(t)`, so the likelihood
//! separates and each interestingness has a closed-form maximizer.

use serde::{Deserialize, Serialize};

use super::dual::Dual;
use crate::dynamics::StateV2;
use crate::error::{invalid, Result};
use crate::types::{GlobalParamsV2, Lognormal, StoryRecord};
use crate::visibility::{nonfan_exposure, nonfan_visibility_grad, ListGeometry, SurfLaw};

/// Smallest pool size or visibility used inside a logarithm.
const FLOOR: f64 = 1e-300;

/// Lognormal priors on the two interestingness values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterestPrior {
    pub fan: Lognormal,
    pub nonfan: Lognormal,
}

impl InterestPrior {
    /// Lognormal fits of the June 2006 estimates.
    pub fn paper() -> Self {
        Self {
            fan: Lognormal { mu: -1.8, sigma: 0.75 },
            nonfan: Lognormal { mu: -4.0, sigma: 0.63 },
        }
    }
}

/// Sufficient statistics of one story under fixed site-wide parameters, with
/// derivatives in `(c, mu, lambda, rho)`.
#[derive(Debug, Clone)]
pub(crate) struct Reconstruction {
    pub n_fan: usize,
    pub n_nonfan: usize,
    /// `omega * integral of F`.
    pub fan_exposure: Dual,
    /// `omega * integral of P_N N`.
    pub nonfan_exposure: Dual,
    /// Sum over fan votes of `ln(omega F)`.
    pub fan_log: Dual,
    /// Sum over non-fan votes after the submitter's of `ln(omega P_N N)`.
    pub nonfan_log: Dual,
    pub end: StateV2,
}

pub(crate) fn reconstruct(story: &StoryRecord, g: &GlobalParamsV2) -> Result<Reconstruction> {
    let surf = SurfLaw::new(g.surf_mu, g.surf_lambda)?;
    let geometry = ListGeometry::from(g);
    let s = story.submitter_fans;
    if s + 1 >= g.users {
        return invalid(format!("story {}: submitter fans exceed the user count", story.story_id));
    }
    let omega = g.omega;
    let rho = Dual::variable(g.rho, 3);
    let tp = story.promotion_time;
    let end_time = story.observation_end();

    let mut fans = Dual::constant(s as f64);
    let mut nonfans = Dual::constant((g.users - s - 1) as f64);
    let mut rec = Reconstruction {
        n_fan: 0,
        n_nonfan: 0,
        fan_exposure: Dual::default(),
        nonfan_exposure: Dual::default(),
        fan_log: Dual::default(),
        nonfan_log: Dual::default(),
        end: StateV2::initial(g, s),
    };
    let mut prev = 0.0;
    let advance = |fans: &mut Dual, nonfans: &mut Dual, rec: &mut Reconstruction, from: f64, to: f64| {
        if to <= from {
            return;
        }
        let seen = Dual::from_parts(nonfan_exposure(from, to, tp, g.c, &surf, &geometry)).scale(omega);
        let fan_decay = -(-omega * (to - from)).exp_m1();
        rec.fan_exposure += fans.scale(fan_decay);
        rec.nonfan_exposure += *nonfans * seen.one_minus_exp_neg();
        *fans = fans.scale(1.0 - fan_decay);
        *nonfans = *nonfans * (-seen).exp();
    };
    for vote in story.votes.iter().skip(1) {
        let t = vote.time;
        advance(&mut fans, &mut nonfans, &mut rec, prev, t);
        prev = prev.max(t);
        if vote.is_fan {
            rec.n_fan += 1;
            let f = if fans.v > FLOOR { fans } else { Dual::constant(FLOOR) };
            rec.fan_log += f.scale(omega).ln();
        } else {
            rec.n_nonfan += 1;
            let p = Dual::from_parts(nonfan_visibility_grad(t, tp, g.c, &surf, &geometry));
            let rate = p * nonfans;
            let rate = if rate.v > FLOOR { rate } else { Dual::constant(FLOOR) };
            rec.nonfan_log += rate.scale(omega).ln();
        }
        let moved = rho * nonfans;
        fans += moved;
        nonfans -= moved;
    }
    advance(&mut fans, &mut nonfans, &mut rec, prev, end_time);
    rec.end = StateV2 {
        t: end_time.max(prev),
        v_fan: rec.n_fan as f64,
        v_nonfan: rec.n_nonfan as f64 + 1.0,
        fans: fans.v,
        nonfans: nonfans.v,
        promoted_at: tp.filter(|&t| t <= end_time.max(prev)),
        votes_cast: story.votes.len() as u64,
    };
    Ok(rec)
}

fn xlogy(n: usize, r: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * r.ln()
    }
}

/// Maximum-likelihood interestingness `n / E`, capped at 1.
pub(crate) fn mle_rate(n: usize, exposure: f64) -> f64 {
    if n == 0 {
        0.0
    } else if exposure <= 0.0 {
        1.0
    } else {
        (n as f64 / exposure).min(1.0)
    }
}

/// Posterior mode of `r` under a lognormal prior: maximizes
/// `n ln r - E r + ln p(r)` over `r` in `(0, 1]`.
pub(crate) fn map_rate(n: usize, exposure: f64, prior: &Lognormal) -> f64 {
    let (mu, s2) = (prior.mu, prior.sigma * prior.sigma);
    let k = n as f64 - 1.0;
    let slope = |u: f64| k - exposure * u.exp() - (u - mu) / s2;
    if slope(0.0) >= 0.0 {
        return 1.0;
    }
    let mut lo = mu.min(0.0) - 1.0;
    while slope(lo) <= 0.0 {
        lo -= 2.0 * (1.0 + lo.abs());
    }
    let mut hi = 0.0;
    let mut u = lo.max(mu.min(-1e-12));
    for _ in 0..200 {
        let d = slope(u);
        if d > 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let curv = -exposure * u.exp() - 1.0 / s2;
        let mut next = u - d / curv;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - u).abs() <= 1e-14 * (1.0 + u.abs()) {
            u = next;
            break;
        }
        u = next;
    }
    u.exp()
}

/// How to fit a story.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StoryFitOptions {
    pub prior: Option<InterestPrior>,
    /// Use only the first this-many votes.
    pub window: Option<usize>,
    /// Force `r_fan = r_nonfan`.
    pub equal_r: bool,
}

/// Fitted interestingness of one story.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryFit {
    pub story_id: String,
    pub r_fan: f64,
    pub r_nonfan: f64,
    pub n_fan: usize,
    pub n_nonfan: usize,
    pub fan_exposure: f64,
    pub nonfan_exposure: f64,
    /// Log-likelihood at the estimate (prior excluded).
    pub log_likelihood: f64,
    pub log_posterior: Option<f64>,
    pub converged: bool,
    /// Model state at the end of the fitted window.
    pub end_state: StateV2,
}

fn loglik_at(rec: &Reconstruction, r_fan: f64, r_nonfan: f64) -> f64 {
    xlogy(rec.n_fan, r_fan) + rec.fan_log.v - r_fan * rec.fan_exposure.v + xlogy(rec.n_nonfan, r_nonfan) + rec.nonfan_log.v
        - r_nonfan * rec.nonfan_exposure.v
}

/// Log-likelihood of a story's votes at `(r_fan, r_nonfan)` and its gradient in those two values.
pub fn story_loglik(story: &StoryRecord, global: &GlobalParamsV2, r_fan: f64, r_nonfan: f64) -> Result<(f64, [f64; 2])> {
    let rec = reconstruct(story, global)?;
    let grad = [
        rec.n_fan as f64 / r_fan - rec.fan_exposure.v,
        rec.n_nonfan as f64 / r_nonfan - rec.nonfan_exposure.v,
    ];
    Ok((loglik_at(&rec, r_fan, r_nonfan), grad))
}

/// Maximum-likelihood (or, with a prior, maximum-posterior) interestingness of one story.
pub fn fit_story_interest(story: &StoryRecord, global: &GlobalParamsV2, opts: &StoryFitOptions) -> Result<StoryFit> {
    story.validate()?;
    let windowed;
    let story = match opts.window {
        Some(k) if k < story.n_votes() => {
            windowed = story.truncated(k);
            &windowed
        }
        _ => story,
    };
    let rec = reconstruct(story, global)?;
    let (ef, en) = (rec.fan_exposure.v, rec.nonfan_exposure.v);
    let (r_fan, r_nonfan) = if opts.equal_r {
        let n = rec.n_fan + rec.n_nonfan;
        let r = match opts.prior {
            Some(p) => map_rate(n, ef + en, &p.nonfan),
            None => mle_rate(n, ef + en),
        };
        (r, r)
    } else {
        match opts.prior {
            Some(p) => (map_rate(rec.n_fan, ef, &p.fan), map_rate(rec.n_nonfan, en, &p.nonfan)),
            None => (mle_rate(rec.n_fan, ef), mle_rate(rec.n_nonfan, en)),
        }
    };
    let log_likelihood = loglik_at(&rec, r_fan, r_nonfan);
    let log_posterior = opts.prior.map(|p| {
        if opts.equal_r {
            log_likelihood + p.nonfan.ln_pdf(r_nonfan)
        } else {
            log_likelihood + p.fan.ln_pdf(r_fan) + p.nonfan.ln_pdf(r_nonfan)
        }
    });
    Ok(StoryFit {
        story_id: story.story_id.clone(),
        r_fan,
        r_nonfan,
        n_fan: rec.n_fan,
        n_nonfan: rec.n_nonfan,
        fan_exposure: ef,
        nonfan_exposure: en,
        log_likelihood,
        log_posterior,
        converged: log_likelihood.is_finite(),
        end_state: rec.end,
    })
}

/// Profile log-likelihood contributions of one story with both
/// interestingness values at their maximizers: `(non-fan part, fan part)`.
pub(crate) fn profile_parts(rec: &Reconstruction) -> (Dual, Dual) {
    let rn = mle_rate(rec.n_nonfan, rec.nonfan_exposure.v);
    let rf = mle_rate(rec.n_fan, rec.fan_exposure.v);
    let nonfan = rec.nonfan_log + Dual::constant(xlogy(rec.n_nonfan, rn)) - rec.nonfan_exposure.scale(rn);
    let fan = rec.fan_log + Dual::constant(xlogy(rec.n_fan, rf)) - rec.fan_exposure.scale(rf);
    (nonfan, fan)
}
