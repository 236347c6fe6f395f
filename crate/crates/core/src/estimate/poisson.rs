//! Log-likelihood of an inhomogeneous Poisson process observed on `(0, T)`:
//! `sum_i log v(t_i) - integral_0^T v(t) dt`.

use crate::error::{invalid, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let pair = f(c - x) + f(c + x);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod quadrature to relative tolerance `rtol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rtol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut intervals = vec![(a, b, gk15(&f, a, b))];
    for _ in 0..5000 {
        let total: f64 = intervals.iter().map(|iv| iv.2 .0).sum();
        let err: f64 = intervals.iter().map(|iv| iv.2 .1).sum();
        if err <= rtol * total.abs() || err <= 1e-300 {
            return total;
        }
        let (k, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .expect("non-empty");
        let (lo, hi, _) = intervals.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            intervals.push((lo, hi, (0.0, 0.0)));
            continue;
        }
        intervals.push((lo, mid, gk15(&f, lo, mid)));
        intervals.push((mid, hi, gk15(&f, mid, hi)));
    }
    intervals.iter().map(|iv| iv.2 .0).sum()
}

fn check_times(times: &[f64], horizon: f64) -> Result<()> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return invalid(format!("observation length must be positive, got {horizon}"));
    }
    if times.iter().any(|&t| !(t > 0.0 && t < horizon)) {
        return invalid("vote times must lie inside (0, T)");
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return invalid("vote times must be sorted");
    }
    Ok(())
}

/// Log-likelihood of `times` under rate `rate` on `(0, horizon)`. The
/// integral is split at the vote times and computed adaptively to 1e-12
/// relative accuracy. Returns negative infinity if the rate vanishes at a vote.
pub fn loglik_inhomogeneous<F: Fn(f64) -> f64>(rate: F, times: &[f64], horizon: f64) -> Result<f64> {
    check_times(times, horizon)?;
    let mut sum_log = 0.0;
    for &t in times {
        let v = rate(t);
        if !(v > 0.0) {
            return Ok(f64::NEG_INFINITY);
        }
        sum_log += v.ln();
    }
    let mut integral = 0.0;
    let mut prev = 0.0;
    for &t in times.iter().chain(std::iter::once(&horizon)) {
        integral += integrate(&rate, prev, t, 1e-12);
        prev = t;
    }
    Ok(sum_log - integral)
}

/// Constant-rate log-likelihood `n log v - v T`.
pub fn loglik_constant(rate: f64, n: usize, horizon: f64) -> f64 {
    if n > 0 && rate <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let log_term = if n == 0 { 0.0 } else { n as f64 * rate.ln() };
    log_term - rate * horizon
}

/// Maximizer of [`loglik_constant`]: `n / T`.
pub fn constant_rate_mle(n: usize, horizon: f64) -> Result<f64> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return invalid(format!("observation length must be positive, got {horizon}"));
    }
    Ok(n as f64 / horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_rate_closed_form() {
        let times = [0.5, 1.0, 2.5, 3.0];
        let ll = loglik_inhomogeneous(|_| 2.0, &times, 4.0).unwrap();
        assert_relative_eq!(ll, -8.0 + 4.0 * 2f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(loglik_constant(2.0, 4, 4.0), ll, epsilon = 1e-12);
    }

    #[test]
    fn no_votes_is_minus_the_integral() {
        let ll = loglik_inhomogeneous(|t: f64| (-t).exp(), &[], 3.0).unwrap();
        assert_relative_eq!(ll, -(1.0 - (-3.0f64).exp()), epsilon = 1e-13);
    }

    #[test]
    fn vanishing_rate_at_a_vote() {
        let ll = loglik_inhomogeneous(|t: f64| if t < 1.0 { 1.0 } else { 0.0 }, &[1.5], 2.0).unwrap();
        assert_eq!(ll, f64::NEG_INFINITY);
    }

    #[test]
    fn rejects_times_outside_window() {
        assert!(loglik_inhomogeneous(|_| 1.0, &[0.0], 1.0).is_err());
        assert!(loglik_inhomogeneous(|_| 1.0, &[2.0], 1.0).is_err());
    }
}
