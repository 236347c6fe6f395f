//! Lognormal mixtures of Poisson counts, and the zero-truncated fit used
//! when users who never voted are unobserved.
//!
//! `P(mu, sigma; k)` is the probability of `k` events from a Poisson law
//! whose mean is lognormal. With `rate = e^u` the integrand in `u` is smooth
//! and unimodal, so it is integrated by the trapezoid rule on a grid centred
//! at its mode, widened until the integrand has fallen by a factor `e^40`.

use serde::{Deserialize, Serialize};

use super::optim::{minimize, BfgsOptions};
use super::FitResult;
use crate::error::{invalid, Result};
use crate::special::ln_factorial;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const DROP: f64 = 40.0;
const MAX_NODES: usize = 200_000;

/// Integral of `exp(l(u))` and of `exp(l(u)) a(u)`, `exp(l(u)) b(u)`,
/// returned as `(ln I, E[a], E[b])` under the normalized integrand.
fn trapezoid<L: Fn(f64) -> f64, A: Fn(f64) -> (f64, f64)>(l: L, moments: A, center: f64, step: f64) -> (f64, f64, f64) {
    let peak = l(center);
    let mut top = peak;
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    let add = |u: f64, lu: f64, top: f64, s0: &mut f64, s1: &mut f64, s2: &mut f64| {
        let w = (lu - top).exp();
        let (a, b) = moments(u);
        *s0 += w;
        *s1 += w * a;
        *s2 += w * b;
    };
    add(center, peak, top, &mut s0, &mut s1, &mut s2);
    for dir in [1.0, -1.0] {
        let mut prev = peak;
        for i in 1..MAX_NODES {
            let u = center + dir * i as f64 * step;
            let lu = l(u);
            if lu > top {
                // rescale the running sums to the new maximum
                let k = (top - lu).exp();
                s0 *= k;
                s1 *= k;
                s2 *= k;
                top = lu;
            }
            add(u, lu, top, &mut s0, &mut s1, &mut s2);
            if lu < top - DROP && lu <= prev {
                break;
            }
            prev = lu;
        }
    }
    (top + (s0 * step).ln(), s1 / s0, s2 / s0)
}

/// Mode of `k u - e^u - (u - mu)^2 / (2 sigma^2)` and the curvature scale there.
fn mode(mu: f64, sigma: f64, k: f64) -> (f64, f64) {
    let s2 = sigma * sigma;
    let slope = |u: f64| k - u.exp() - (u - mu) / s2;
    let (mut lo, mut hi) = (mu - 1.0, mu + 1.0);
    while slope(lo) < 0.0 {
        lo -= 2.0 * (hi - lo);
    }
    while slope(hi) > 0.0 {
        hi += 2.0 * (hi - lo);
    }
    let mut u = 0.5 * (lo + hi);
    for _ in 0..200 {
        let d = slope(u);
        if d > 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let mut next = u + d / (u.exp() + 1.0 / s2);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - u).abs() <= 1e-13 * (1.0 + u.abs()) {
            u = next;
            break;
        }
        u = next;
    }
    (u, 1.0 / (u.exp() + 1.0 / s2).sqrt())
}

fn check(mu: f64, sigma: f64) -> Result<()> {
    if !(mu.is_finite() && sigma.is_finite() && sigma > 0.0) {
        return invalid(format!("need finite mu and positive sigma, got ({mu}, {sigma})"));
    }
    Ok(())
}

/// `ln P(mu, sigma; k)` with its derivatives in `mu` and `sigma`.
pub fn poisson_lognormal_ln_pmf_grad(mu: f64, sigma: f64, k: u64) -> Result<(f64, f64, f64)> {
    check(mu, sigma)?;
    let kf = k as f64;
    let s2 = sigma * sigma;
    let (center, scale) = mode(mu, sigma, kf);
    let l = |u: f64| kf * u - u.exp() - (u - mu).powi(2) / (2.0 * s2);
    let m = |u: f64| {
        let z = u - mu;
        (z / s2, z * z / (s2 * sigma) - 1.0 / sigma)
    };
    let (ln_int, d_mu, d_sigma) = trapezoid(l, m, center, scale / 8.0);
    Ok((ln_int - ln_factorial(k) - sigma.ln() - LN_SQRT_2PI, d_mu, d_sigma))
}

/// Probability of `k` events from a Poisson law with lognormal mean.
pub fn poisson_lognormal_pmf(mu: f64, sigma: f64, k: u64) -> Result<f64> {
    Ok(poisson_lognormal_ln_pmf_grad(mu, sigma, k)?.0.exp())
}

/// `ln(1 - P(mu, sigma; 0))` with its derivatives, without cancellation.
pub fn ln_prob_positive_grad(mu: f64, sigma: f64) -> Result<(f64, f64, f64)> {
    check(mu, sigma)?;
    let s2 = sigma * sigma;
    let l = |u: f64| -(u - mu).powi(2) / (2.0 * s2) + (-(-u.exp()).exp_m1()).ln();
    let m = |u: f64| {
        let z = u - mu;
        (z / s2, z * z / (s2 * sigma) - 1.0 / sigma)
    };
    // the integrand peaks between mu and the mode of the k = 1 term
    let (center, scale) = mode(mu, sigma, 1.0);
    let (ln_int, d_mu, d_sigma) = trapezoid(l, m, center, scale.min(sigma) / 8.0);
    Ok((ln_int - sigma.ln() - LN_SQRT_2PI, d_mu, d_sigma))
}

/// Zero-truncated log-likelihood `sum_k n_k ln P_k - U+ ln(1 - P_0)` of a
/// histogram (`hist[k]` users with `k` events; `hist[0]` is ignored), with its
/// gradient in `(mu, sigma)`.
pub fn zero_truncated_loglik(hist: &[u64], mu: f64, sigma: f64) -> Result<(f64, [f64; 2])> {
    let (lp, dp_mu, dp_sigma) = ln_prob_positive_grad(mu, sigma)?;
    let mut total = 0.0;
    let mut g = [0.0; 2];
    let mut observed = 0.0;
    for (k, &n) in hist.iter().enumerate().skip(1) {
        if n == 0 {
            continue;
        }
        let n = n as f64;
        let (l, d_mu, d_sigma) = poisson_lognormal_ln_pmf_grad(mu, sigma, k as u64)?;
        total += n * l;
        g[0] += n * d_mu;
        g[1] += n * d_sigma;
        observed += n;
    }
    Ok((total - observed * lp, [g[0] - observed * dp_mu, g[1] - observed * dp_sigma]))
}

/// Result of [`fit_activity_zero_truncated`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityFit {
    pub mu: f64,
    pub sigma: f64,
    /// Users seen at least once.
    pub observed_users: u64,
    /// Estimated active users, `U+ / (1 - P0)`.
    pub users: f64,
    pub prob_zero: f64,
    pub result: FitResult,
}

/// Zero-truncated maximum-likelihood fit of a lognormal-Poisson activity law.
pub fn fit_activity_zero_truncated(hist: &[u64]) -> Result<ActivityFit> {
    let observed: u64 = hist.iter().skip(1).sum();
    if observed < 100 {
        return invalid(format!("need at least 100 users with activity, got {observed}"));
    }
    let distinct = hist.iter().skip(1).filter(|&&n| n > 0).count();
    let objective = |z: &[f64]| -> (f64, Vec<f64>) {
        let sigma = z[1].exp();
        match zero_truncated_loglik(hist, z[0], sigma) {
            Ok((v, g)) if v.is_finite() => {
                let s = 1.0 / observed as f64;
                (-v * s, vec![-g[0] * s, -g[1] * sigma * s])
            }
            _ => (f64::INFINITY, vec![0.0, 0.0]),
        }
    };
    let mut best: Option<(f64, [f64; 2])> = None;
    for mu in [-4.0, -2.0, 0.0, 2.0] {
        for sigma in [0.3f64, 1.0, 2.0] {
            let z = [mu, sigma.ln()];
            let f = objective(&z).0;
            if best.is_none_or(|b| f < b.0) {
                best = Some((f, z));
            }
        }
    }
    let start = best.expect("grid is non-empty").1;
    let m = minimize(
        objective,
        &start,
        &BfgsOptions {
            gtol: 1e-7,
            ..BfgsOptions::default()
        },
    );
    let (mu, sigma) = (m.x[0], m.x[1].exp());
    let p0 = -ln_prob_positive_grad(mu, sigma)?.0.exp_m1();
    let users = observed as f64 / (1.0 - p0);
    Ok(ActivityFit {
        mu,
        sigma,
        observed_users: observed,
        users,
        prob_zero: p0,
        result: FitResult {
            names: vec!["mu".into(), "sigma".into()],
            estimate: vec![mu, sigma],
            log_likelihood: -m.f * observed as f64,
            converged: m.converged && distinct >= 2,
            iterations: m.iterations,
            stderr: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn degenerate_mixture_is_poisson() {
        for k in 0..15u64 {
            let p = poisson_lognormal_pmf(3f64.ln(), 1e-6, k).unwrap();
            let poisson = (k as f64 * 3f64.ln() - 3.0 - ln_factorial(k)).exp();
            assert!((p - poisson).abs() < 1e-6, "k={k}: {p} vs {poisson}");
        }
    }

    #[test]
    fn reference_values() {
        // adaptive quadrature references for (mu, sigma) = (-2.06, 1.82)
        let refs = [(0, 0.756685), (1, 0.136939), (2, 0.045167), (3, 0.020694)];
        for (k, want) in refs {
            assert_relative_eq!(poisson_lognormal_pmf(-2.06, 1.82, k).unwrap(), want, max_relative = 1e-5);
        }
    }

    #[test]
    fn positive_mass_complements_zero_mass() {
        for (mu, sigma) in [(-2.06, 1.82), (1.0, 0.3), (-6.0, 2.5)] {
            let p0 = poisson_lognormal_pmf(mu, sigma, 0).unwrap();
            let p_pos = ln_prob_positive_grad(mu, sigma).unwrap().0.exp();
            assert_relative_eq!(p0 + p_pos, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn pmf_sums_to_one() {
        let total: f64 = (0..20_000u64).map(|k| poisson_lognormal_pmf(-2.06, 1.82, k).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }
}
