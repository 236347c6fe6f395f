use serde::{Deserialize, Serialize};

use super::Samples;
use crate::error::{invalid, Result};
use crate::ode::{integrate_segment, StepControl};
use crate::types::{GlobalParamsV1, StoryParams, TimeUnit};
use crate::visibility::{story_page, ListGeometry, ListPosition, SurfLaw};

/// Solution of the single-interestingness model, in wall hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryV1 {
    pub unit: TimeUnit,
    pub times: Vec<f64>,
    /// Expected votes `N_vote(t)`.
    pub votes: Vec<f64>,
    /// Fans of voters who have not yet seen the story, `s(t)`.
    pub fans: Vec<f64>,
    pub positions: Vec<ListPosition>,
    pub promotion_time: Option<f64>,
}

impl TrajectoryV1 {
    pub fn final_votes(&self) -> f64 {
        *self.votes.last().expect("trajectory has samples")
    }
}

#[derive(Clone, Copy)]
enum Regime {
    Upcoming,
    Front(f64),
    Removed,
}

struct Model {
    g: GlobalParamsV1,
    surf: SurfLaw,
    r: f64,
}

impl Model {
    fn rhs(&self, regime: Regime, t: f64, y: &[f64; 2]) -> [f64; 2] {
        let g = &self.g;
        let n = y[0].max(1.0);
        let s = y[1].max(0.0);
        let list = match regime {
            Regime::Upcoming => g.c * g.nu * self.surf.survival(g.k_upcoming * t),
            Regime::Front(tp) => g.nu * self.surf.survival(g.k_front * (t - tp)),
            Regime::Removed => 0.0,
        };
        let dn = self.r * (list + g.omega * s);
        [dn, -g.omega * s + g.a * n.powf(-g.b) * dn]
    }
}

fn check_story(story: &StoryParams) -> Result<(f64, u64)> {
    story.validate()?;
    match *story {
        StoryParams::V1 { r, submitter_fans } => Ok((r, submitter_fans)),
        StoryParams::V2 { .. } => invalid("model V1 needs V1 story parameters"),
    }
}

/// Integrates the V1 rate equations from submission to `horizon` wall hours.
pub fn solve_v1(global: &GlobalParamsV1, story: &StoryParams, horizon: f64, ctrl: &StepControl) -> Result<TrajectoryV1> {
    global.validate()?;
    let (r, s0) = check_story(story)?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return invalid(format!("horizon must be positive, got {horizon}"));
    }
    let model = Model {
        g: global.clone(),
        surf: SurfLaw::new(global.surf_mu, global.surf_lambda)?,
        r,
    };
    let h = f64::from(global.h);
    let mut samples = Samples::<2>::default();
    let y0 = [1.0, s0 as f64];
    samples.push(0.0, &y0);
    let mut sink = |t: f64, y: &[f64; 2]| samples.push(t, y);

    let lifetime = global.upcoming_lifetime;
    let up_rhs = |t: f64, y: &[f64; 2]| model.rhs(Regime::Upcoming, t, y);
    let crossing = |_t: f64, y: &[f64; 2]| y[0] - h;
    let first = integrate_segment(&up_rhs, 0.0, y0, horizon.min(lifetime), ctrl, Some(&crossing), &mut sink)?;

    let mut promotion_time = None;
    if first.event {
        let tp = first.t;
        promotion_time = Some(tp);
        let front = |t: f64, y: &[f64; 2]| model.rhs(Regime::Front(tp), t, y);
        integrate_segment(&front, tp, first.y, horizon, ctrl, None::<&fn(f64, &[f64; 2]) -> f64>, &mut sink)?;
    } else if horizon > lifetime {
        let gone = |t: f64, y: &[f64; 2]| model.rhs(Regime::Removed, t, y);
        integrate_segment(&gone, lifetime, first.y, horizon, ctrl, None::<&fn(f64, &[f64; 2]) -> f64>, &mut sink)?;
    }

    let geometry = ListGeometry::from(global);
    let positions = samples
        .times
        .iter()
        .map(|&t| story_page(t, promotion_time, &geometry))
        .collect();
    Ok(TrajectoryV1 {
        unit: TimeUnit::WallHours,
        positions,
        votes: samples.states.iter().map(|y| y[0]).collect(),
        fans: samples.states.iter().map(|y| y[1]).collect(),
        times: samples.times,
        promotion_time,
    })
}

/// Time at which the expected vote count reaches the promotion threshold, or
/// `None` if the story leaves the upcoming list first.
pub fn promotion_time_v1(global: &GlobalParamsV1, story: &StoryParams) -> Result<Option<f64>> {
    let ctrl = StepControl::default().with_sample_interval(global.upcoming_lifetime);
    Ok(solve_v1(global, story, global.upcoming_lifetime, &ctrl)?.promotion_time)
}

/// Smallest interestingness that gets a story promoted, for each submitter fan count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromotionBoundary {
    pub submitter_fans: Vec<u64>,
    /// `None` where even `r = 1` is not enough.
    pub min_r: Vec<Option<f64>>,
}

impl PromotionBoundary {
    /// Classification by the boundary at the nearest tabulated fan count not above `s`.
    pub fn is_promoted(&self, s: u64, r: f64) -> bool {
        let i = self.submitter_fans.partition_point(|&x| x <= s);
        if i == 0 {
            return false;
        }
        self.min_r[i - 1].is_some_and(|m| r >= m)
    }
}

/// Locates the promoted/unpromoted boundary in `r` for each fan count by bisection.
pub fn promoted_region(global: &GlobalParamsV1, submitter_fans: &[u64], tol: f64) -> Result<PromotionBoundary> {
    let mut fans = submitter_fans.to_vec();
    fans.sort_unstable();
    fans.dedup();
    let promoted = |s: u64, r: f64| -> Result<bool> { Ok(promotion_time_v1(global, &StoryParams::v1(r, s))?.is_some()) };
    let mut min_r = Vec::with_capacity(fans.len());
    for &s in &fans {
        if !promoted(s, 1.0)? {
            min_r.push(None);
            continue;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if promoted(s, mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        min_r.push(Some(hi));
    }
    Ok(PromotionBoundary {
        submitter_fans: fans,
        min_r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_interest_is_pure_fan_decay() {
        let g = GlobalParamsV1::paper();
        let traj = solve_v1(&g, &StoryParams::v1(0.0, 30), 50.0, &StepControl::default()).unwrap();
        for (i, &t) in traj.times.iter().enumerate() {
            assert_eq!(traj.votes[i], 1.0);
            assert_relative_eq!(traj.fans[i], 30.0 * (-g.omega * t).exp(), max_relative = 1e-7);
        }
        assert_eq!(traj.promotion_time, None);
        assert_eq!(*traj.positions.last().unwrap(), ListPosition::Removed);
    }

    #[test]
    fn promotion_restarts_front_page() {
        let g = GlobalParamsV1::paper();
        let traj = solve_v1(&g, &StoryParams::v1(0.51, 5), 100.0, &StepControl::default()).unwrap();
        let tp = traj.promotion_time.unwrap();
        let i = traj.times.iter().position(|&t| t == tp).unwrap();
        assert_eq!(traj.positions[i], ListPosition::FrontPage { page: 1.0 });
        assert_relative_eq!(traj.votes[i], 40.0, max_relative = 1e-9);
        assert!(matches!(traj.positions[i - 1], ListPosition::Upcoming { .. }));
        assert!(traj.votes.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn rejects_v2_parameters() {
        let g = GlobalParamsV1::paper();
        assert!(solve_v1(&g, &StoryParams::v2(0.1, 0.1, 3), 10.0, &StepControl::default()).is_err());
    }
}
