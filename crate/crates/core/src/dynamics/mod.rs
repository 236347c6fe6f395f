//! Expected-vote trajectories of both models.
//!
//! Regime switches (promotion, expiry from the upcoming list) are handled by
//! integrating each smooth stretch separately; the promotion time is located
//! as an event of the integrator.

mod v1;
mod v2;

use std::io::Write;

pub use v1::{promoted_region, promotion_time_v1, solve_v1, PromotionBoundary, TrajectoryV1};
pub use v2::{promotion_vote_target, solve_v2, solve_v2_from, StateV2, TrajectoryV2};

use crate::error::Result;
use crate::visibility::ListPosition;

/// Collects samples, replacing a sample that lands on the previous time.
#[derive(Debug, Default)]
pub(crate) struct Samples<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
}

impl<const N: usize> Samples<N> {
    pub fn push(&mut self, t: f64, y: &[f64; N]) {
        if let Some(&last) = self.times.last() {
            if (t - last).abs() <= 1e-12 * t.abs().max(1.0) {
                *self.states.last_mut().expect("states track times") = *y;
                return;
            }
        }
        self.times.push(t);
        self.states.push(*y);
    }
}

fn position_columns(p: &ListPosition) -> (String, &'static str) {
    (p.page().map(|x| format!("{x}")).unwrap_or_default(), p.list_name())
}

/// Writes `t, N_vote, s, page, list` rows.
pub fn write_trajectory_v1_csv<W: Write>(traj: &TrajectoryV1, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "n_vote", "s", "page", "list"])?;
    for i in 0..traj.times.len() {
        let (page, list) = position_columns(&traj.positions[i]);
        w.write_record([
            traj.times[i].to_string(),
            traj.votes[i].to_string(),
            traj.fans[i].to_string(),
            page,
            list.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `t, vF, vN, F, N, page, list` rows.
pub fn write_trajectory_v2_csv<W: Write>(traj: &TrajectoryV2, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "v_fan", "v_nonfan", "fans", "nonfans", "page", "list"])?;
    for i in 0..traj.times.len() {
        let (page, list) = position_columns(&traj.positions[i]);
        w.write_record([
            traj.times[i].to_string(),
            traj.v_fan[i].to_string(),
            traj.v_nonfan[i].to_string(),
            traj.fans[i].to_string(),
            traj.nonfans[i].to_string(),
            page,
            list.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
