//! Activity-rescaled time.
//!
//! A "Digg hour" is the site's average number of front-page votes in an hour.
//! The Digg time elapsed between two instants is the number of front-page
//! votes cast between them divided by that average, which flattens the daily
//! cycle in site activity. The clock is the piecewise-linear interpolation of
//! the cumulative vote count between observed vote times.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Default number of front-page votes in one Digg hour.
pub const DEFAULT_VOTES_PER_DIGG_HOUR: f64 = 2500.0;

/// Monotone map between wall-clock hours and Digg hours.
///
/// Breakpoints are `(wall_hours, cumulative_votes)`. Wall times strictly
/// increase; cumulative counts never decrease, and repeat only where an
/// observation window records an idle stretch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityClock {
    breakpoints: Vec<(f64, f64)>,
    votes_per_digg_hour: f64,
}

impl ActivityClock {
    /// Clock spanning the first to the last vote of `times` (hours, sorted).
    pub fn from_votes(times: &[f64], votes_per_digg_hour: f64) -> Result<Self> {
        check_stream(times, votes_per_digg_hour)?;
        let mut breakpoints: Vec<(f64, f64)> = Vec::new();
        for (i, &t) in times.iter().enumerate() {
            let count = (i + 1) as f64;
            match breakpoints.last_mut() {
                Some(last) if last.0 == t => last.1 = count,
                _ => breakpoints.push((t, count)),
            }
        }
        if breakpoints.len() < 2 {
            return invalid("activity stream needs votes at two distinct times");
        }
        Ok(Self {
            breakpoints,
            votes_per_digg_hour,
        })
    }

    /// Clock over an explicit observation window `[start, end]`; stretches
    /// without votes at either end stay flat.
    pub fn from_votes_in_window(times: &[f64], start: f64, end: f64, votes_per_digg_hour: f64) -> Result<Self> {
        check_stream(times, votes_per_digg_hour)?;
        if !(start < end) {
            return invalid(format!("window start {start} must precede end {end}"));
        }
        if times[0] < start || times[times.len() - 1] > end {
            return invalid("activity stream extends outside the observation window");
        }
        let mut breakpoints = vec![(start, 0.0)];
        for (i, &t) in times.iter().enumerate() {
            let count = (i + 1) as f64;
            match breakpoints.last_mut() {
                Some(last) if last.0 == t => last.1 = count,
                _ => breakpoints.push((t, count)),
            }
        }
        let total = times.len() as f64;
        if breakpoints.last().map(|b| b.0) != Some(end) {
            breakpoints.push((end, total));
        }
        Ok(Self {
            breakpoints,
            votes_per_digg_hour,
        })
    }

    /// Clock on which wall hours and Digg hours coincide from `start` on.
    pub fn identity(start: f64, votes_per_digg_hour: f64) -> Self {
        Self {
            breakpoints: vec![(start, 0.0), (start + 1.0, votes_per_digg_hour)],
            votes_per_digg_hour,
        }
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn votes_per_digg_hour(&self) -> f64 {
        self.votes_per_digg_hour
    }

    pub fn start(&self) -> f64 {
        self.breakpoints[0].0
    }

    pub fn end(&self) -> f64 {
        self.breakpoints[self.breakpoints.len() - 1].0
    }

    fn digg_at(&self, i: usize) -> f64 {
        (self.breakpoints[i].1 - self.breakpoints[0].1) / self.votes_per_digg_hour
    }

    fn mean_slope(&self) -> f64 {
        let n = self.breakpoints.len() - 1;
        self.digg_at(n) / (self.end() - self.start())
    }

    fn segment_slope(&self, i: usize) -> f64 {
        let (t0, c0) = self.breakpoints[i];
        let (t1, c1) = self.breakpoints[i + 1];
        (c1 - c0) / (t1 - t0) / self.votes_per_digg_hour
    }

    /// Slope used beyond the ends: the terminal segment's, or the mean rate
    /// if that segment is idle.
    fn terminal_slope(&self, first: bool) -> f64 {
        let i = if first { 0 } else { self.breakpoints.len() - 2 };
        let s = self.segment_slope(i);
        if s > 0.0 {
            s
        } else {
            self.mean_slope()
        }
    }

    /// Digg hours elapsed from the start of the clock to wall time `t`.
    pub fn to_digg_time(&self, t: f64) -> f64 {
        let bp = &self.breakpoints;
        let last = bp.len() - 1;
        if t <= bp[0].0 {
            return (t - bp[0].0) * self.terminal_slope(true);
        }
        if t >= bp[last].0 {
            return self.digg_at(last) + (t - bp[last].0) * self.terminal_slope(false);
        }
        let i = bp.partition_point(|b| b.0 <= t) - 1;
        let (t0, _) = bp[i];
        self.digg_at(i) + (t - t0) * self.segment_slope(i)
    }

    /// Earliest wall time at which the clock reads `d` Digg hours.
    pub fn from_digg_time(&self, d: f64) -> f64 {
        let bp = &self.breakpoints;
        let last = bp.len() - 1;
        if d <= 0.0 {
            return bp[0].0 + d / self.terminal_slope(true);
        }
        let top = self.digg_at(last);
        if d > top {
            return bp[last].0 + (d - top) / self.terminal_slope(false);
        }
        let base = bp[0].1;
        let i = bp.partition_point(|b| (b.1 - base) / self.votes_per_digg_hour < d);
        // digg_at(i - 1) < d <= digg_at(i), so segment i - 1 is rising
        let (t0, _) = bp[i - 1];
        t0 + (d - self.digg_at(i - 1)) / self.segment_slope(i - 1)
    }

    /// Digg hours between two wall times.
    pub fn elapsed(&self, from: f64, to: f64) -> f64 {
        self.to_digg_time(to) - self.to_digg_time(from)
    }
}

fn check_stream(times: &[f64], votes_per_digg_hour: f64) -> Result<()> {
    if !(votes_per_digg_hour.is_finite() && votes_per_digg_hour > 0.0) {
        return invalid(format!("votes per Digg hour must be positive, got {votes_per_digg_hour}"));
    }
    if times.len() < 2 {
        return invalid(format!("activity stream needs at least 2 votes, got {}", times.len()));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return invalid("activity stream contains a non-finite time");
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return invalid("activity stream is not sorted by time");
    }
    Ok(())
}

/// Builds a clock from sorted front-page vote times in hours.
pub fn build_activity_clock(times: &[f64], votes_per_digg_hour: f64) -> Result<ActivityClock> {
    ActivityClock::from_votes(times, votes_per_digg_hour)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn uniform(rate: f64, from: f64, to: f64) -> Vec<f64> {
        let n = ((to - from) * rate).round() as usize;
        (1..=n).map(|i| from + i as f64 / rate).collect()
    }

    #[test]
    fn constant_stream_spans_wall_hours() {
        let times = uniform(2500.0, 0.0, 4.0);
        let clock = build_activity_clock(&times, 2500.0).unwrap();
        assert_relative_eq!(clock.elapsed(0.0, 4.0), 4.0, epsilon = 1e-9);
        assert_relative_eq!(clock.elapsed(1.0, 2.5), 1.5, epsilon = 1e-9);
    }

    #[test]
    fn idle_hour_adds_no_digg_time() {
        let times = uniform(5000.0, 0.0, 1.0);
        let clock = ActivityClock::from_votes_in_window(&times, 0.0, 2.0, 2500.0).unwrap();
        assert_relative_eq!(clock.elapsed(0.0, 2.0), 2.0, epsilon = 1e-12);
        assert_relative_eq!(clock.elapsed(0.0, 1.0), 2.0, epsilon = 1e-12);
        // the idle stretch maps back to its earliest wall time
        assert_relative_eq!(clock.from_digg_time(2.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn double_rate_first_hour() {
        let mut times = uniform(5000.0, 0.0, 1.0);
        times.extend(uniform(2500.0, 1.0, 3.0));
        let clock = ActivityClock::from_votes_in_window(&times, 0.0, 3.0, 2500.0).unwrap();
        assert_relative_eq!(clock.to_digg_time(0.5), 1.0, epsilon = 1e-12);
        assert_relative_eq!(clock.to_digg_time(2.0), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn identity_clock() {
        let clock = ActivityClock::identity(0.0, 2500.0);
        for t in [0.0, 0.3, 7.0, 100.0] {
            assert_relative_eq!(clock.to_digg_time(t), t, epsilon = 1e-12);
            assert_relative_eq!(clock.from_digg_time(t), t, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_bad_streams() {
        assert!(build_activity_clock(&[], 2500.0).is_err());
        assert!(build_activity_clock(&[1.0], 2500.0).is_err());
        assert!(build_activity_clock(&[2.0, 1.0], 2500.0).is_err());
        assert!(build_activity_clock(&[1.0, 1.0], 2500.0).is_err());
        assert!(build_activity_clock(&[1.0, 2.0], 0.0).is_err());
    }

    #[test]
    fn extrapolates_with_terminal_slopes() {
        let times = uniform(2500.0, 0.0, 2.0);
        let clock = build_activity_clock(&times, 2500.0).unwrap();
        assert_relative_eq!(clock.elapsed(-1.0, 3.0), 4.0, epsilon = 1e-9);
        assert_relative_eq!(clock.from_digg_time(clock.to_digg_time(5.0)), 5.0, epsilon = 1e-9);
    }

    proptest! {
        #[test]
        fn round_trip_on_random_clocks(gaps in proptest::collection::vec(1e-3f64..2.0, 2..60), probe in 0.0f64..1.0) {
            let mut t = 0.0;
            let times: Vec<f64> = gaps.iter().map(|g| { t += g; t }).collect();
            let clock = build_activity_clock(&times, 2500.0).unwrap();
            let wall = clock.start() + probe * (clock.end() - clock.start());
            let back = clock.from_digg_time(clock.to_digg_time(wall));
            prop_assert!((back - wall).abs() < 1e-9);
            // monotone
            let later = clock.to_digg_time(wall + 0.1);
            prop_assert!(later >= clock.to_digg_time(wall));
        }
    }
}
