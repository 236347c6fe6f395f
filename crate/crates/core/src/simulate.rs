//! Event-level simulation of the fan/non-fan model.
//!
//! Votes form an inhomogeneous Poisson process with rate
//! `omega r_F F(t) + omega r_N P_N(t) N(t)`, generated by thinning. Between
//! votes both pools shrink by their expected exposure; at each vote a
//! Binomial(N, rho) number of non-fans become fans of the new voter.
//!
//! Randomness comes from ChaCha8 seeded with the corpus seed, one stream per
//! story index, so a corpus is reproducible on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp1, Geometric, LogNormal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::types::{GlobalParamsV2, Lognormal, StoryParams, StoryRecord, VoteEvent};
use crate::visibility::{nonfan_exposure, nonfan_visibility, story_page, ListGeometry, SurfLaw};

/// Distribution of the submitter's fan count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FanCountDist {
    Fixed { value: u64 },
    /// Zero with probability `zero_prob`, otherwise geometric on 1, 2, ... with the given mean.
    ZeroInflatedGeometric { zero_prob: f64, mean: f64 },
}

impl Default for FanCountDist {
    fn default() -> Self {
        FanCountDist::ZeroInflatedGeometric {
            zero_prob: 0.2,
            mean: 30.0,
        }
    }
}

impl FanCountDist {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FanCountDist::Fixed { .. } => Ok(()),
            FanCountDist::ZeroInflatedGeometric { zero_prob, mean } => {
                if !(0.0..=1.0).contains(&zero_prob) || !(mean >= 1.0 && mean.is_finite()) {
                    return invalid(format!("bad fan-count law: zero_prob={zero_prob}, mean={mean}"));
                }
                Ok(())
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match *self {
            FanCountDist::Fixed { value } => value,
            FanCountDist::ZeroInflatedGeometric { zero_prob, mean } => {
                if rng.random::<f64>() < zero_prob {
                    0
                } else if mean <= 1.0 {
                    1
                } else {
                    1 + Geometric::new(1.0 / mean).expect("validated mean").sample(rng)
                }
            }
        }
    }
}

/// Corpus generator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub global: GlobalParamsV2,
    pub r_fan: Lognormal,
    pub r_nonfan: Lognormal,
    #[serde(default)]
    pub submitter_fans: FanCountDist,
    pub n_stories: usize,
    /// Digg hours simulated after each submission.
    pub horizon: f64,
    pub seed: u64,
    /// Keep redrawing a story until it is promoted.
    #[serde(default)]
    pub promoted_only: bool,
    /// Submission time of the first story, seconds since the epoch.
    #[serde(default = "default_start")]
    pub start_epoch: f64,
    /// Seconds between consecutive submissions.
    #[serde(default = "default_spacing")]
    pub submission_spacing: f64,
}

fn default_start() -> f64 {
    1_149_120_000.0
}

fn default_spacing() -> f64 {
    600.0
}

impl SimConfig {
    /// Paper-scale corpus with interestingness drawn from the published lognormals.
    pub fn paper(n_stories: usize, seed: u64) -> Self {
        Self {
            global: GlobalParamsV2::paper(),
            r_fan: Lognormal { mu: -1.8, sigma: 0.75 },
            r_nonfan: Lognormal { mu: -4.0, sigma: 0.63 },
            submitter_fans: FanCountDist::default(),
            n_stories,
            horizon: 72.0,
            seed,
            promoted_only: false,
            start_epoch: default_start(),
            submission_spacing: default_spacing(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.global.validate()?;
        self.r_fan.validate()?;
        self.r_nonfan.validate()?;
        self.submitter_fans.validate()?;
        if self.n_stories == 0 {
            return invalid("n_stories must be at least 1");
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return invalid(format!("horizon must be positive, got {}", self.horizon));
        }
        Ok(())
    }
}

/// Hidden parameters and outcome of one simulated story.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryTruth {
    pub story_id: String,
    pub submitter_fans: u64,
    pub r_fan: f64,
    pub r_nonfan: f64,
    pub promotion_time: Option<f64>,
    pub final_votes: u64,
}

impl StoryTruth {
    pub fn params(&self) -> StoryParams {
        StoryParams::v2(self.r_fan, self.r_nonfan, self.submitter_fans)
    }
}

/// Simulated vote streams with the parameters that generated them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub stories: Vec<StoryRecord>,
    pub truth: Vec<StoryTruth>,
}

struct Pools<'a> {
    g: &'a GlobalParamsV2,
    surf: SurfLaw,
    geometry: ListGeometry,
    r_fan: f64,
    r_nonfan: f64,
    t: f64,
    fans: f64,
    nonfans: f64,
    promoted_at: Option<f64>,
}

impl Pools<'_> {
    fn rates(&self) -> (f64, f64) {
        let p = nonfan_visibility(story_page(self.t, self.promoted_at, &self.geometry), self.g.c, &self.surf);
        (
            self.g.omega * self.r_fan * self.fans,
            self.g.omega * self.r_nonfan * p * self.nonfans,
        )
    }

    fn advance(&mut self, to: f64) {
        let exposure = nonfan_exposure(self.t, to, self.promoted_at, self.g.c, &self.surf, &self.geometry)[0];
        self.fans *= (-self.g.omega * (to - self.t)).exp();
        self.nonfans *= (-self.g.omega * exposure).exp();
        self.t = to;
    }

    /// End of the stretch over which the rate cannot increase.
    fn regime_end(&self, horizon: f64) -> f64 {
        if self.promoted_at.is_none() && self.t < self.geometry.upcoming_lifetime {
            self.geometry.upcoming_lifetime.min(horizon)
        } else {
            horizon
        }
    }
}

/// Simulates one story for `horizon` Digg hours.
pub fn simulate_story<R: Rng + ?Sized>(
    global: &GlobalParamsV2,
    story: &StoryParams,
    horizon: f64,
    rng: &mut R,
) -> Result<StoryRecord> {
    simulate_story_with_id(global, story, horizon, "story", 0.0, rng)
}

pub(crate) fn simulate_story_with_id<R: Rng + ?Sized>(
    global: &GlobalParamsV2,
    story: &StoryParams,
    horizon: f64,
    story_id: &str,
    submitted_at: f64,
    rng: &mut R,
) -> Result<StoryRecord> {
    global.validate()?;
    story.validate()?;
    let StoryParams::V2 {
        r_fan,
        r_nonfan,
        submitter_fans,
    } = *story
    else {
        return invalid("the simulator needs V2 story parameters");
    };
    if submitter_fans + 1 >= global.users {
        return invalid(format!("submitter fans {submitter_fans} must be fewer than the {} users", global.users));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return invalid(format!("horizon must be positive, got {horizon}"));
    }
    let mut pools = Pools {
        g: global,
        surf: SurfLaw::new(global.surf_mu, global.surf_lambda)?,
        geometry: ListGeometry::from(global),
        r_fan,
        r_nonfan,
        t: 0.0,
        fans: submitter_fans as f64,
        nonfans: (global.users - submitter_fans - 1) as f64,
        promoted_at: None,
    };
    let voter = |k: usize| format!("{story_id}-{k}");
    let mut votes = vec![VoteEvent::new(story_id, voter(0), 0.0, false)];
    let lifetime = global.upcoming_lifetime;
    let check_promotion = |pools: &mut Pools, v: usize, rng: &mut R| {
        if pools.promoted_at.is_none() && pools.t < lifetime {
            let p = global.promotion.probability_unchecked(v as u64);
            if p > 0.0 && rng.random::<f64>() < p {
                pools.promoted_at = Some(pools.t);
            }
        }
    };
    check_promotion(&mut pools, 1, rng);

    while pools.t < horizon {
        let end = pools.regime_end(horizon);
        let (fan_rate, nonfan_rate) = pools.rates();
        let bound = fan_rate + nonfan_rate;
        if !(bound > 0.0) {
            pools.advance(end);
            continue;
        }
        let wait: f64 = Exp1.sample(rng);
        let proposal = pools.t + wait / bound;
        if proposal >= end {
            pools.advance(end);
            continue;
        }
        pools.advance(proposal);
        let (fan_rate, nonfan_rate) = pools.rates();
        let u: f64 = rng.random::<f64>() * bound;
        if u >= fan_rate + nonfan_rate {
            continue;
        }
        let is_fan = u < fan_rate;
        votes.push(VoteEvent::new(story_id, voter(votes.len()), pools.t, is_fan));
        let at_risk = pools.nonfans.round().max(0.0) as u64;
        if at_risk > 0 {
            let converted = Binomial::new(at_risk, global.rho).expect("rho validated").sample(rng) as f64;
            pools.fans += converted;
            pools.nonfans = (pools.nonfans - converted).max(0.0);
        }
        check_promotion(&mut pools, votes.len(), rng);
    }
    let n = votes.len() as u64;
    Ok(StoryRecord::new(story_id, submitted_at, submitter_fans, votes, pools.promoted_at, Some(n))?.with_observed_until(horizon))
}

/// RNG for story `index` of a corpus seeded with `seed`.
pub fn story_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn draw_rate<R: Rng + ?Sized>(law: &Lognormal, rng: &mut R) -> f64 {
    LogNormal::new(law.mu, law.sigma)
        .expect("validated lognormal")
        .sample(rng)
        .min(1.0)
}

/// Draws a corpus: per-story parameters from the configured laws, then the
/// vote stream. Stories are generated in parallel and merged by index.
pub fn make_corpus(config: &SimConfig) -> Result<Corpus> {
    config.validate()?;
    let width = config.n_stories.to_string().len().max(4);
    let results: Vec<Result<(StoryRecord, StoryTruth)>> = (0..config.n_stories)
        .into_par_iter()
        .map(|i| {
            let mut rng = story_rng(config.seed, i as u64);
            let id = format!("s{i:0width$}");
            let submitted_at = config.start_epoch + i as f64 * config.submission_spacing;
            loop {
                let r_fan = draw_rate(&config.r_fan, &mut rng);
                let r_nonfan = draw_rate(&config.r_nonfan, &mut rng);
                let s = config.submitter_fans.sample(&mut rng).min(config.global.users - 2);
                let params = StoryParams::v2(r_fan, r_nonfan, s);
                let record = simulate_story_with_id(&config.global, &params, config.horizon, &id, submitted_at, &mut rng)?;
                if config.promoted_only && record.promotion_time.is_none() {
                    continue;
                }
                let truth = StoryTruth {
                    story_id: id.clone(),
                    submitter_fans: s,
                    r_fan,
                    r_nonfan,
                    promotion_time: record.promotion_time,
                    final_votes: record.n_votes() as u64,
                };
                return Ok((record, truth));
            }
        })
        .collect();
    let mut stories = Vec::with_capacity(config.n_stories);
    let mut truth = Vec::with_capacity(config.n_stories);
    for r in results {
        let (s, t) = r?;
        stories.push(s);
        truth.push(t);
    }
    Ok(Corpus { stories, truth })
}

/// User activity: each user's expected vote count per unit sample length is lognormal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationModel {
    pub n_users: u64,
    pub mu_act: f64,
    pub sigma_act: f64,
}

/// Histogram `n_k` of users casting `k` votes during a sample of length
/// `sample_length`, `k = 0` included.
pub fn simulate_population_activity<R: Rng + ?Sized>(
    pop: &PopulationModel,
    sample_length: f64,
    rng: &mut R,
) -> Result<Vec<u64>> {
    if !(sample_length.is_finite() && sample_length > 0.0) {
        return invalid(format!("sample length must be positive, got {sample_length}"));
    }
    if !(pop.mu_act.is_finite() && pop.sigma_act.is_finite() && pop.sigma_act > 0.0) {
        return invalid(format!("activity law needs finite mu and positive sigma, got ({}, {})", pop.mu_act, pop.sigma_act));
    }
    let law = LogNormal::new(pop.mu_act + sample_length.ln(), pop.sigma_act).expect("checked above");
    let mut hist: Vec<u64> = Vec::new();
    for _ in 0..pop.n_users {
        let mean = law.sample(rng);
        let k = if mean > 0.0 {
            Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0)
        } else {
            0
        };
        if k >= hist.len() {
            hist.resize(k + 1, 0);
        }
        hist[k] += 1;
    }
    if hist.is_empty() {
        hist.push(0);
    }
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_interest_gives_only_the_submitter() {
        let g = GlobalParamsV2::paper();
        let mut rng = story_rng(1, 0);
        let rec = simulate_story(&g, &StoryParams::v2(0.0, 0.0, 50), 72.0, &mut rng).unwrap();
        assert_eq!(rec.n_votes(), 1);
        assert!(!rec.votes[0].is_fan);
    }

    #[test]
    fn same_seed_same_story() {
        let g = GlobalParamsV2::paper();
        let p = StoryParams::v2(0.2, 0.03, 25);
        let a = simulate_story(&g, &p, 72.0, &mut story_rng(7, 3)).unwrap();
        let b = simulate_story(&g, &p, 72.0, &mut story_rng(7, 3)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = simulate_story(&g, &p, 72.0, &mut story_rng(7, 4)).unwrap();
        assert_ne!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&c).unwrap());
    }

    #[test]
    fn fan_votes_need_fans() {
        let g = GlobalParamsV2::paper();
        // no submitter fans and no conversions: every vote is a non-fan vote
        let g = GlobalParamsV2 { rho: 1e-12, ..g };
        let rec = simulate_story(&g, &StoryParams::v2(0.9, 0.05, 0), 72.0, &mut story_rng(2, 0)).unwrap();
        assert!(rec.n_votes() > 1);
        assert!(rec.votes.iter().all(|v| !v.is_fan));
    }

    #[test]
    fn geometric_fan_counts_have_the_requested_mean() {
        let law = FanCountDist::ZeroInflatedGeometric {
            zero_prob: 0.25,
            mean: 20.0,
        };
        let mut rng = story_rng(3, 0);
        let n = 200_000;
        let draws: Vec<u64> = (0..n).map(|_| law.sample(&mut rng)).collect();
        let zeros = draws.iter().filter(|&&k| k == 0).count() as f64 / n as f64;
        let mean_nonzero = draws.iter().filter(|&&k| k > 0).sum::<u64>() as f64 / draws.iter().filter(|&&k| k > 0).count() as f64;
        assert!((zeros - 0.25).abs() < 0.005);
        assert!((mean_nonzero - 20.0).abs() < 0.3);
    }
}
