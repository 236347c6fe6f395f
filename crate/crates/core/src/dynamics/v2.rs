use serde::{Deserialize, Serialize};

use super::Samples;
use crate::error::{invalid, Result};
use crate::ode::{integrate_segment, StepControl};
use crate::types::{GlobalParamsV2, StoryParams, TimeUnit};
use crate::visibility::{story_page, ListGeometry, ListPosition, PromotionModel, SurfLaw};

/// Largest number of further votes searched for the median promotion vote.
const PROMOTION_SEARCH_LIMIT: u64 = 1_000_000;

/// Solution of the fan/non-fan model, in Digg hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryV2 {
    pub unit: TimeUnit,
    pub times: Vec<f64>,
    pub v_fan: Vec<f64>,
    pub v_nonfan: Vec<f64>,
    /// Unseen fans of prior voters, `F(t)`.
    pub fans: Vec<f64>,
    /// Unseen users who are not fans of prior voters, `N(t)`.
    pub nonfans: Vec<f64>,
    pub positions: Vec<ListPosition>,
    pub promotion_time: Option<f64>,
}

impl TrajectoryV2 {
    pub fn final_votes(&self) -> f64 {
        let i = self.times.len() - 1;
        self.v_fan[i] + self.v_nonfan[i]
    }

    /// Total expected votes at `t`, interpolated linearly between samples.
    pub fn votes_at(&self, t: f64) -> f64 {
        let total = |i: usize| self.v_fan[i] + self.v_nonfan[i];
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            return total(0);
        }
        if i == self.times.len() {
            return total(i - 1);
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (t - t0) / (t1 - t0);
        total(i - 1) * (1.0 - w) + total(i) * w
    }
}

/// Starting point of a V2 solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateV2 {
    pub t: f64,
    pub v_fan: f64,
    pub v_nonfan: f64,
    pub fans: f64,
    pub nonfans: f64,
    pub promoted_at: Option<f64>,
    /// Whole votes already cast, which conditions the promotion rule.
    pub votes_cast: u64,
}

impl StateV2 {
    /// State at submission: one (submitter) vote, `S` fans.
    pub fn initial(global: &GlobalParamsV2, submitter_fans: u64) -> Self {
        Self {
            t: 0.0,
            v_fan: 0.0,
            v_nonfan: 1.0,
            fans: submitter_fans as f64,
            nonfans: (global.users - submitter_fans - 1) as f64,
            promoted_at: None,
            votes_cast: 1,
        }
    }
}

/// Vote count at which the deterministic solver promotes a story that is
/// still upcoming after `votes_cast` votes.
pub fn promotion_vote_target(model: &PromotionModel, votes_cast: u64) -> Option<f64> {
    model
        .median_promotion_vote(votes_cast.max(1), PROMOTION_SEARCH_LIMIT)
        .map(|v| v as f64)
}

#[derive(Clone, Copy)]
enum Regime {
    Upcoming,
    Front(f64),
    Removed,
}

struct Model<'a> {
    g: &'a GlobalParamsV2,
    surf: SurfLaw,
    r_fan: f64,
    r_nonfan: f64,
}

impl Model<'_> {
    fn rhs(&self, regime: Regime, t: f64, y: &[f64; 4]) -> [f64; 4] {
        let g = self.g;
        let visibility = match regime {
            Regime::Upcoming => g.c * self.surf.survival(g.k_upcoming * t),
            Regime::Front(tp) => self.surf.survival(g.k_front * (t - tp)),
            Regime::Removed => 0.0,
        };
        let (f, n) = (y[2].max(0.0), y[3].max(0.0));
        let dv_f = g.omega * self.r_fan * f;
        let dv_n = g.omega * self.r_nonfan * visibility * n;
        let converted = g.rho * n * (dv_f + dv_n);
        [dv_f, dv_n, -g.omega * f + converted, -g.omega * visibility * n - converted]
    }
}

fn check_story(story: &StoryParams) -> Result<(f64, f64, u64)> {
    story.validate()?;
    match *story {
        StoryParams::V2 {
            r_fan,
            r_nonfan,
            submitter_fans,
        } => Ok((r_fan, r_nonfan, submitter_fans)),
        StoryParams::V1 { .. } => invalid("model V2 needs V2 story parameters"),
    }
}

/// Integrates the V2 rate equations from submission to `horizon` Digg hours.
pub fn solve_v2(global: &GlobalParamsV2, story: &StoryParams, horizon: f64, ctrl: &StepControl) -> Result<TrajectoryV2> {
    global.validate()?;
    let (r_fan, r_nonfan, s) = check_story(story)?;
    if s + 1 >= global.users {
        return invalid(format!("submitter fans {s} must be fewer than the {} users", global.users));
    }
    solve_v2_from(global, r_fan, r_nonfan, StateV2::initial(global, s), horizon, ctrl)
}

/// Integrates the V2 rate equations from an arbitrary state to `horizon`.
pub fn solve_v2_from(
    global: &GlobalParamsV2,
    r_fan: f64,
    r_nonfan: f64,
    start: StateV2,
    horizon: f64,
    ctrl: &StepControl,
) -> Result<TrajectoryV2> {
    for (name, r) in [("r_fan", r_fan), ("r_nonfan", r_nonfan)] {
        if !(0.0..=1.0).contains(&r) {
            return invalid(format!("{name} must lie in [0,1], got {r}"));
        }
    }
    if !(horizon.is_finite() && horizon >= start.t) {
        return invalid(format!("horizon {horizon} precedes the start time {}", start.t));
    }
    let model = Model {
        g: global,
        surf: SurfLaw::new(global.surf_mu, global.surf_lambda)?,
        r_fan,
        r_nonfan,
    };
    let y0 = [start.v_fan, start.v_nonfan, start.fans, start.nonfans];
    let mut samples = Samples::<4>::default();
    samples.push(start.t, &y0);
    let mut sink = |t: f64, y: &[f64; 4]| samples.push(t, y);
    let no_event = None::<&fn(f64, &[f64; 4]) -> f64>;
    let lifetime = global.upcoming_lifetime;

    let mut promotion_time = start.promoted_at;
    let mut t = start.t;
    let mut y = y0;
    if promotion_time.is_none() && t < lifetime {
        let up = |t: f64, y: &[f64; 4]| model.rhs(Regime::Upcoming, t, y);
        let end = match promotion_vote_target(&global.promotion, start.votes_cast) {
            Some(target) => {
                let crossing = move |_t: f64, y: &[f64; 4]| y[0] + y[1] - target;
                integrate_segment(&up, t, y, horizon.min(lifetime), ctrl, Some(&crossing), &mut sink)?
            }
            None => integrate_segment(&up, t, y, horizon.min(lifetime), ctrl, no_event, &mut sink)?,
        };
        t = end.t;
        y = end.y;
        if end.event {
            promotion_time = Some(t);
        }
    }
    if t < horizon {
        let regime = match promotion_time {
            Some(tp) => Regime::Front(tp),
            None if t < lifetime => Regime::Upcoming,
            None => Regime::Removed,
        };
        let rest = |s: f64, y: &[f64; 4]| model.rhs(regime, s, y);
        let t_mid = if matches!(regime, Regime::Upcoming) { lifetime.min(horizon) } else { horizon };
        let end = integrate_segment(&rest, t, y, t_mid, ctrl, no_event, &mut sink)?;
        if end.t < horizon {
            let gone = |s: f64, y: &[f64; 4]| model.rhs(Regime::Removed, s, y);
            integrate_segment(&gone, end.t, end.y, horizon, ctrl, no_event, &mut sink)?;
        }
    }

    let geometry = ListGeometry::from(global);
    let positions = samples
        .times
        .iter()
        .map(|&t| story_page(t, promotion_time, &geometry))
        .collect();
    let col = |i: usize| samples.states.iter().map(|y| y[i]).collect::<Vec<_>>();
    Ok(TrajectoryV2 {
        unit: TimeUnit::DiggHours,
        positions,
        v_fan: col(0),
        v_nonfan: col(1),
        fans: col(2),
        nonfans: col(3),
        times: samples.times,
        promotion_time,
    })
}
