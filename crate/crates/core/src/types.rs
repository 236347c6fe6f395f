//! Domain types shared by the models, estimators and the CLI.
//!
//! All per-story times are hours since the story was submitted. Model V1
//! works in wall-clock hours and model V2 in activity-rescaled "Digg hours";
//! [`TimeUnit`] tags which one a series is expressed in.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::visibility::PromotionModel;

/// Time axis a trajectory or per-story series is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    WallHours,
    DiggHours,
}

/// One vote on one story.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteEvent {
    pub story_id: String,
    pub voter_id: String,
    /// Hours since the story was submitted.
    pub time: f64,
    /// Voter was a fan of some earlier voter on this story.
    pub is_fan: bool,
}

impl VoteEvent {
    pub fn new(story_id: impl Into<String>, voter_id: impl Into<String>, time: f64, is_fan: bool) -> Self {
        Self {
            story_id: story_id.into(),
            voter_id: voter_id.into(),
            time,
            is_fan,
        }
    }
}

/// Observed vote stream of a single story.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryRecord {
    pub story_id: String,
    /// Absolute submission time, seconds since the Unix epoch.
    pub submitted_at: f64,
    /// Fans of the submitter at submission time.
    pub submitter_fans: u64,
    /// Votes ordered by time (ties broken by voter id). The first is the submitter's.
    pub votes: Vec<VoteEvent>,
    /// Hours since submission at which the story reached the front page.
    pub promotion_time: Option<f64>,
    pub final_votes: Option<u64>,
    /// End of the observation window in hours since submission, when known.
    #[serde(default)]
    pub observed_until: Option<f64>,
}

impl StoryRecord {
    /// Builds a record, sorting the votes and checking the invariants.
    pub fn new(
        story_id: impl Into<String>,
        submitted_at: f64,
        submitter_fans: u64,
        mut votes: Vec<VoteEvent>,
        promotion_time: Option<f64>,
        final_votes: Option<u64>,
    ) -> Result<Self> {
        sort_votes(&mut votes);
        let record = Self {
            story_id: story_id.into(),
            submitted_at,
            submitter_fans,
            votes,
            promotion_time,
            final_votes,
            observed_until: None,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn with_observed_until(mut self, t: f64) -> Self {
        self.observed_until = Some(t);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.votes.first() else {
            return invalid(format!("story {}: no votes (the submitter's vote is required)", self.story_id));
        };
        if first.is_fan {
            return invalid(format!("story {}: submitter vote marked as a fan vote", self.story_id));
        }
        for v in &self.votes {
            if !(v.time.is_finite() && v.time >= 0.0) {
                return invalid(format!("story {}: vote time {} is not a non-negative number", self.story_id, v.time));
            }
        }
        if self.votes.windows(2).any(|w| vote_order(&w[0], &w[1]) == std::cmp::Ordering::Greater) {
            return invalid(format!("story {}: votes are not sorted", self.story_id));
        }
        if let Some(tp) = self.promotion_time {
            if !(tp.is_finite() && tp >= first.time) {
                return invalid(format!("story {}: promotion at {} precedes every vote", self.story_id, tp));
            }
        }
        Ok(())
    }

    pub fn n_votes(&self) -> usize {
        self.votes.len()
    }

    /// Number of votes cast at or before `t`.
    pub fn votes_by(&self, t: f64) -> usize {
        self.votes.partition_point(|v| v.time <= t)
    }

    /// Votes received while the story was still on the upcoming list, the
    /// promoting vote included.
    pub fn votes_before_promotion(&self) -> Option<usize> {
        self.promotion_time.map(|tp| self.votes_by(tp))
    }

    /// Fan and non-fan vote counts among the first `k` votes (submitter included in non-fan).
    pub fn fan_split(&self, k: usize) -> (usize, usize) {
        let k = k.min(self.votes.len());
        let fans = self.votes[..k].iter().filter(|v| v.is_fan).count();
        (fans, k - fans)
    }

    /// Copy of the record restricted to its first `k` votes. The promotion
    /// time survives only if it happened within the window, and the
    /// observation window ends at the k-th vote.
    pub fn truncated(&self, k: usize) -> StoryRecord {
        let k = k.clamp(1, self.votes.len());
        let votes = self.votes[..k].to_vec();
        let end = votes.last().map(|v| v.time).unwrap_or(0.0);
        StoryRecord {
            story_id: self.story_id.clone(),
            submitted_at: self.submitted_at,
            submitter_fans: self.submitter_fans,
            votes,
            promotion_time: self.promotion_time.filter(|&tp| tp <= end),
            final_votes: self.final_votes,
            observed_until: Some(end),
        }
    }

    /// End of the observation window: the explicit value if present, else the last vote.
    pub fn observation_end(&self) -> f64 {
        let last = self.votes.last().map(|v| v.time).unwrap_or(0.0);
        self.observed_until.map_or(last, |t| t.max(last))
    }
}

fn vote_order(a: &VoteEvent, b: &VoteEvent) -> std::cmp::Ordering {
    a.time.total_cmp(&b.time).then_with(|| a.voter_id.cmp(&b.voter_id))
}

/// Sorts votes by time, breaking ties on voter id. Stable and total.
pub fn sort_votes(votes: &mut [VoteEvent]) {
    votes.sort_by(vote_order);
}

/// Site-wide parameters of the single-interestingness model (wall hours).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalParamsV1 {
    /// Rate users visit the site, users/hour.
    pub nu: f64,
    /// Fraction of visitors who browse the upcoming list.
    pub c: f64,
    /// Rate fans return to the site, 1/hour.
    pub omega: f64,
    pub surf_mu: f64,
    pub surf_lambda: f64,
    /// New fans per vote are `a * N^-b`.
    pub a: f64,
    pub b: f64,
    /// Votes needed for promotion.
    pub h: u32,
    /// Upcoming-list pages per hour.
    pub k_upcoming: f64,
    /// Front-page pages per hour.
    pub k_front: f64,
    /// Hours an unpromoted story stays on the upcoming list.
    #[serde(default = "default_upcoming_lifetime")]
    pub upcoming_lifetime: f64,
}

fn default_upcoming_lifetime() -> f64 {
    24.0
}

impl GlobalParamsV1 {
    /// Values of the original May 2006 fit.
    pub fn paper() -> Self {
        Self {
            nu: 600.0,
            c: 0.3,
            omega: 0.12,
            surf_mu: 0.6,
            surf_lambda: 0.6,
            a: 51.0,
            b: 0.62,
            h: 40,
            k_upcoming: 3.60,
            k_front: 0.18,
            upcoming_lifetime: 24.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("nu", self.nu),
            ("c", self.c),
            ("omega", self.omega),
            ("surf_mu", self.surf_mu),
            ("surf_lambda", self.surf_lambda),
            ("a", self.a),
            ("k_upcoming", self.k_upcoming),
            ("k_front", self.k_front),
            ("upcoming_lifetime", self.upcoming_lifetime),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("{name} must be positive, got {v}"));
            }
        }
        if self.c > 1.0 {
            return invalid(format!("c must be at most 1, got {}", self.c));
        }
        if !(self.b > 0.0 && self.b < 1.0) {
            return invalid(format!("b must lie in (0,1), got {}", self.b));
        }
        if self.h < 2 {
            return invalid(format!("promotion threshold must be at least 2, got {}", self.h));
        }
        Ok(())
    }
}

/// Site-wide parameters of the fan/non-fan model (Digg hours).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalParamsV2 {
    /// Rate each user visits the site, 1/Digg-hour.
    pub omega: f64,
    /// Active users.
    pub users: u64,
    pub c: f64,
    pub surf_mu: f64,
    pub surf_lambda: f64,
    /// Probability a user who has not seen the story is a fan of the latest voter.
    pub rho: f64,
    pub k_upcoming: f64,
    pub k_front: f64,
    pub promotion: PromotionModel,
    #[serde(default = "default_upcoming_lifetime")]
    pub upcoming_lifetime: f64,
}

impl GlobalParamsV2 {
    /// Values of the June 2006 fit. The promotion curve was only published as a
    /// figure; the logistic coefficients here are a stand-in with its shape.
    pub fn paper() -> Self {
        Self {
            omega: 0.2,
            users: 70_000,
            c: 0.065,
            surf_mu: 6.3,
            surf_lambda: 0.14,
            rho: 9.48e-6,
            k_upcoming: 3.60,
            k_front: 0.18,
            promotion: PromotionModel::default_logistic(),
            upcoming_lifetime: 24.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega", self.omega),
            ("c", self.c),
            ("surf_mu", self.surf_mu),
            ("surf_lambda", self.surf_lambda),
            ("k_upcoming", self.k_upcoming),
            ("k_front", self.k_front),
            ("upcoming_lifetime", self.upcoming_lifetime),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("{name} must be positive, got {v}"));
            }
        }
        if self.c > 1.0 {
            return invalid(format!("c must be at most 1, got {}", self.c));
        }
        if self.users < 2 {
            return invalid("need at least two active users");
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return invalid(format!("rho must lie in (0,1), got {}", self.rho));
        }
        if self.rho * (self.users - 1) as f64 >= 1.0 {
            return invalid(format!(
                "rho * (U - 1) = {} must stay below 1",
                self.rho * (self.users - 1) as f64
            ));
        }
        self.promotion.validate()
    }
}

/// Per-story unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum StoryParams {
    V1 { r: f64, submitter_fans: u64 },
    V2 { r_fan: f64, r_nonfan: f64, submitter_fans: u64 },
}

impl StoryParams {
    pub fn v1(r: f64, submitter_fans: u64) -> Self {
        StoryParams::V1 { r, submitter_fans }
    }

    pub fn v2(r_fan: f64, r_nonfan: f64, submitter_fans: u64) -> Self {
        StoryParams::V2 {
            r_fan,
            r_nonfan,
            submitter_fans,
        }
    }

    pub fn submitter_fans(&self) -> u64 {
        match *self {
            StoryParams::V1 { submitter_fans, .. } | StoryParams::V2 { submitter_fans, .. } => submitter_fans,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs: &[f64] = match self {
            StoryParams::V1 { r, .. } => &[*r],
            StoryParams::V2 { r_fan, r_nonfan, .. } => &[*r_fan, *r_nonfan],
        };
        for &p in probs {
            if !(0.0..=1.0).contains(&p) {
                return invalid(format!("interestingness {p} is not a probability"));
            }
        }
        Ok(())
    }
}

/// Lognormal law given by the mean and standard deviation of the logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lognormal {
    pub mu: f64,
    pub sigma: f64,
}

impl Lognormal {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        let law = Self { mu, sigma };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.sigma.is_finite() && self.sigma > 0.0) {
            return invalid(format!("lognormal needs finite mu and positive sigma, got ({}, {})", self.mu, self.sigma));
        }
        Ok(())
    }

    /// Log density at `x > 0`.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let z = (x.ln() - self.mu) / self.sigma;
        -0.5 * z * z - x.ln() - self.sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }

    pub fn median(&self) -> f64 {
        self.mu.exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vote(id: &str, t: f64, fan: bool) -> VoteEvent {
        VoteEvent::new("s", id, t, fan)
    }

    #[test]
    fn record_sorts_with_voter_tiebreak() {
        let rec = StoryRecord::new(
            "s",
            0.0,
            3,
            vec![vote("b", 1.0, false), vote("sub", 0.0, false), vote("a", 1.0, true)],
            None,
            None,
        )
        .unwrap();
        let ids: Vec<_> = rec.votes.iter().map(|v| v.voter_id.as_str()).collect();
        assert_eq!(ids, ["sub", "a", "b"]);
    }

    #[test]
    fn record_rejects_empty_and_fan_submitter() {
        assert!(StoryRecord::new("s", 0.0, 0, vec![], None, None).is_err());
        assert!(StoryRecord::new("s", 0.0, 0, vec![vote("x", 0.0, true)], None, None).is_err());
    }

    #[test]
    fn promotion_needs_a_prior_vote() {
        let votes = vec![vote("sub", 1.0, false)];
        assert!(StoryRecord::new("s", 0.0, 0, votes.clone(), Some(0.5), None).is_err());
        assert!(StoryRecord::new("s", 0.0, 0, votes, Some(1.0), None).is_ok());
    }

    #[test]
    fn truncation_drops_late_promotion() {
        let votes = (0..5).map(|i| vote(&format!("u{i}"), i as f64, false)).collect();
        let rec = StoryRecord::new("s", 0.0, 0, votes, Some(3.0), Some(100)).unwrap();
        let early = rec.truncated(2);
        assert_eq!(early.n_votes(), 2);
        assert_eq!(early.promotion_time, None);
        assert_eq!(early.observation_end(), 1.0);
        assert_eq!(rec.truncated(4).promotion_time, Some(3.0));
        assert_eq!(rec.votes_before_promotion(), Some(4));
    }

    #[test]
    fn paper_parameters_validate() {
        GlobalParamsV1::paper().validate().unwrap();
        GlobalParamsV2::paper().validate().unwrap();
        let mut g = GlobalParamsV2::paper();
        g.rho = 1.0 / 60_000.0;
        assert!(g.validate().is_err());
    }
}
