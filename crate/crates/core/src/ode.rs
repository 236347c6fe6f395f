//! Adaptive Dormand–Prince 5(4) integration for small fixed-size systems.
//!
//! Right-hand sides with discontinuities are integrated one smooth segment at
//! a time. A segment ends at its time limit or when the event function
//! changes sign from negative to non-negative; the crossing is localized by
//! bisection on the length of the final step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances and output spacing for the adaptive solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    /// Spacing of the recorded samples. Event times are always recorded too.
    pub sample_interval: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-8,
            max_step: 0.5,
            sample_interval: 0.25,
            max_steps: 2_000_000,
        }
    }
}

impl StepControl {
    pub fn with_sample_interval(mut self, dt: f64) -> Self {
        self.sample_interval = dt;
        self
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One Dormand–Prince step: fifth-order solution and error estimate.
fn dp_step<const N: usize, F>(rhs: &F, t: f64, y: &[f64; N], h: f64) -> ([f64; N], [f64; N])
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut k = [[0.0; N]; 7];
    k[0] = rhs(t, y);
    for s in 1..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..N {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        k[s] = rhs(t + C[s] * h, &ys);
    }
    let mut y5 = *y;
    let mut err = [0.0; N];
    for s in 0..7 {
        for i in 0..N {
            y5[i] += h * B[s] * k[s][i];
            err[i] += h * E[s] * k[s][i];
        }
    }
    (y5, err)
}

/// How a segment finished.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SegmentEnd<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub event: bool,
}

fn check_finite<const N: usize>(t: f64, y: &[f64; N]) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Integration {
            t,
            reason: format!("non-finite state {y:?}"),
        })
    }
}

/// Integrates one smooth segment from `t0` to at most `t_end`.
///
/// `sink` receives `(t, y)` at every multiple of the sample interval that
/// falls inside the segment and at the segment end.
pub(crate) fn integrate_segment<const N: usize, F, G, S>(
    rhs: &F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    ctrl: &StepControl,
    event: Option<&G>,
    sink: &mut S,
) -> Result<SegmentEnd<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    G: Fn(f64, &[f64; N]) -> f64,
    S: FnMut(f64, &[f64; N]),
{
    check_finite(t0, &y0)?;
    if let Some(g) = event {
        if g(t0, &y0) >= 0.0 {
            return Ok(SegmentEnd {
                t: t0,
                y: y0,
                event: true,
            });
        }
    }
    let mut t = t0;
    let mut y = y0;
    let span = t_end - t0;
    if span <= 0.0 {
        return Ok(SegmentEnd { t, y, event: false });
    }
    let dt_sample = ctrl.sample_interval;
    let mut next_sample = ((t0 / dt_sample).floor() + 1.0) * dt_sample;
    let mut h = (span * 1e-3).min(ctrl.max_step).max(1e-9);
    let mut steps = 0usize;
    let time_tol = 1e-12 * t_end.abs().max(1.0);

    while t_end - t > time_tol {
        steps += 1;
        if steps > ctrl.max_steps {
            return Err(Error::Integration {
                t,
                reason: "step budget exhausted".into(),
            });
        }
        let mut target = (t + h).min(t_end);
        if next_sample < t_end && next_sample > t + time_tol {
            target = target.min(next_sample);
        }
        let step = target - t;
        let (y1, err) = dp_step(rhs, t, &y, step);
        let mut norm = 0.0;
        for i in 0..N {
            let sc = ctrl.atol + ctrl.rtol * y[i].abs().max(y1[i].abs());
            norm += (err[i] / sc).powi(2);
        }
        let norm = (norm / N as f64).sqrt();
        if !norm.is_finite() {
            h = step * 0.1;
            if h < 1e-14 {
                return Err(Error::Integration {
                    t,
                    reason: "step size underflow with non-finite error estimate".into(),
                });
            }
            continue;
        }
        if norm > 1.0 {
            h = step * (0.9 * norm.powf(-0.2)).max(0.2);
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Integration {
                    t,
                    reason: "step size underflow".into(),
                });
            }
            continue;
        }
        check_finite(target, &y1)?;

        if let Some(g) = event {
            if g(target, &y1) >= 0.0 {
                // bisect on the step length for the first non-negative event value
                let (mut lo, mut hi) = (0.0, step);
                let mut y_hi = y1;
                for _ in 0..200 {
                    if hi - lo <= time_tol {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    let (ym, _) = dp_step(rhs, t, &y, mid);
                    if g(t + mid, &ym) >= 0.0 {
                        hi = mid;
                        y_hi = ym;
                    } else {
                        lo = mid;
                    }
                }
                let te = t + hi;
                check_finite(te, &y_hi)?;
                sink(te, &y_hi);
                return Ok(SegmentEnd {
                    t: te,
                    y: y_hi,
                    event: true,
                });
            }
        }

        t = target;
        y = y1;
        if (t - next_sample).abs() <= time_tol {
            sink(t, &y);
            next_sample += dt_sample;
        }
        let grow = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
        h = (step * grow).min(ctrl.max_step);
    }
    sink(t_end, &y);
    Ok(SegmentEnd {
        t: t_end,
        y,
        event: false,
    })
}
