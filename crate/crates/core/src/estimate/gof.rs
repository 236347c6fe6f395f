//! Lognormal fits and Kolmogorov–Smirnov goodness of fit with a parametric
//! bootstrap that refits every replicate.

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};
use crate::special::norm_cdf;

/// Maximum-likelihood lognormal parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LognormalFit {
    pub mu: f64,
    pub sigma: f64,
    /// All values equal, so `sigma = 0` and the law is a point mass.
    pub degenerate: bool,
}

fn check_positive(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return invalid("no values to fit");
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return domain(format!("lognormal values must be positive, got {v}"));
    }
    Ok(())
}

/// Mean and (maximum-likelihood) standard deviation of the logs.
pub fn fit_lognormal(values: &[f64]) -> Result<LognormalFit> {
    check_positive(values)?;
    let n = values.len() as f64;
    let mu = values.iter().map(|v| v.ln()).sum::<f64>() / n;
    let var = values.iter().map(|v| (v.ln() - mu).powi(2)).sum::<f64>() / n;
    let sigma = var.sqrt();
    Ok(LognormalFit {
        mu,
        sigma,
        degenerate: sigma <= 1e-12 * (1.0 + mu.abs()),
    })
}

/// Lognormal log-likelihood of `values` and its gradient in `(mu, sigma)`.
pub fn lognormal_loglik(values: &[f64], mu: f64, sigma: f64) -> Result<(f64, [f64; 2])> {
    check_positive(values)?;
    let n = values.len() as f64;
    let mut ll = -n * (sigma.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln());
    let (mut d_mu, mut d_sigma) = (0.0, -n / sigma);
    for v in values {
        let z = v.ln() - mu;
        ll -= v.ln() + z * z / (2.0 * sigma * sigma);
        d_mu += z / (sigma * sigma);
        d_sigma += z * z / sigma.powi(3);
    }
    Ok((ll, [d_mu, d_sigma]))
}

/// Parametric family tested by [`ks_bootstrap_gof`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Lognormal,
    Exponential,
}

#[derive(Debug, Clone, Copy)]
enum Fitted {
    Lognormal(f64, f64),
    Exponential(f64),
}

impl Fitted {
    fn fit(family: Family, values: &[f64]) -> Result<Self> {
        Ok(match family {
            Family::Lognormal => {
                let f = fit_lognormal(values)?;
                Fitted::Lognormal(f.mu, f.sigma.max(1e-300))
            }
            Family::Exponential => {
                check_positive(values)?;
                Fitted::Exponential(values.len() as f64 / values.iter().sum::<f64>())
            }
        })
    }

    fn cdf(&self, x: f64) -> f64 {
        match *self {
            Fitted::Lognormal(mu, sigma) => norm_cdf((x.ln() - mu) / sigma),
            Fitted::Exponential(rate) => -(-rate * x).exp_m1(),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        match *self {
            Fitted::Lognormal(mu, sigma) => {
                let d = LogNormal::new(mu, sigma).expect("fitted sigma is positive");
                (0..n).map(|_| d.sample(rng)).collect()
            }
            Fitted::Exponential(rate) => {
                let d = Exp::new(rate).expect("fitted rate is positive");
                (0..n).map(|_| d.sample(rng)).collect()
            }
        }
    }
}

/// Kolmogorov–Smirnov distance between the empirical law of `values` and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> f64 {
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Outcome of a bootstrap goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub family: Family,
    pub statistic: f64,
    pub p_value: f64,
    pub n_boot: usize,
}

/// Bootstrap p-value of the KS statistic: each replicate is drawn from the
/// fitted law, refitted, and its distance to its own fit compared with the
/// observed one.
pub fn ks_bootstrap_gof<R: Rng + ?Sized>(values: &[f64], family: Family, n_boot: usize, rng: &mut R) -> Result<GofResult> {
    if n_boot < 200 {
        return invalid(format!("need at least 200 bootstrap replicates, got {n_boot}"));
    }
    let fitted = Fitted::fit(family, values)?;
    let observed = ks_statistic(values, |x| fitted.cdf(x));
    let mut exceed = 0usize;
    for _ in 0..n_boot {
        let replicate = fitted.sample(values.len(), rng);
        let refit = Fitted::fit(family, &replicate)?;
        if ks_statistic(&replicate, |x| refit.cdf(x)) >= observed {
            exceed += 1;
        }
    }
    Ok(GofResult {
        family,
        statistic: observed,
        p_value: exceed as f64 / n_boot as f64,
        n_boot,
    })
}
