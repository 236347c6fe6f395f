//! Quasi-Newton minimization with Armijo backtracking.
//!
//! Box constraints are handled by the callers through smooth reparameterizations
//! (log, logit), so the minimizer itself is unconstrained.

use nalgebra::{DMatrix, DVector};

/// Stopping rules for [`minimize`].
#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    /// Converged once `|grad|_inf <= gtol * (1 + |f|)`.
    pub gtol: f64,
    pub max_iter: usize,
    /// Stop when this many consecutive iterations improve `f` by less than `ftol * (1 + |f|)`.
    pub ftol: f64,
    pub stall_iters: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            gtol: 1e-8,
            max_iter: 500,
            ftol: 1e-14,
            stall_iters: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn inf_norm(g: &[f64]) -> f64 {
    g.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Minimizes `f`, which returns the value and gradient. Every accepted
/// iterate has a value no larger than the previous one.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &BfgsOptions) -> Minimum
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let (mut fx, g0) = f(x.as_slice());
    let mut g = DVector::from_vec(g0);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut first = true;
    let mut stalled = 0;
    let mut iterations = 0;
    let done = |fx: f64, g: &DVector<f64>| fx.is_finite() && inf_norm(g.as_slice()) <= opts.gtol * (1.0 + fx.abs());

    while iterations < opts.max_iter && !done(fx, &g) && fx.is_finite() {
        iterations += 1;
        let mut dir = -(&h * &g);
        let mut slope = dir.dot(&g);
        if !(slope < 0.0) {
            h = DMatrix::identity(n, n);
            dir = -g.clone();
            slope = dir.dot(&g);
        }
        if first {
            // keep the first trial step modest in parameter space
            let len = dir.norm();
            if len > 1.0 {
                dir /= len;
                slope /= len;
            }
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &x + step * &dir;
            let (ft, gt) = f(trial.as_slice());
            if ft.is_finite() && ft <= fx + 1e-4 * step * slope {
                accepted = Some((trial, ft, DVector::from_vec(gt)));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            break;
        };
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-300 {
            if first {
                h = DMatrix::identity(n, n) * (sy / y.dot(&y));
            }
            let rho = 1.0 / sy;
            let eye = DMatrix::<f64>::identity(n, n);
            let left = &eye - rho * &s * y.transpose();
            let right = &eye - rho * &y * s.transpose();
            h = &left * &h * &right + rho * &s * s.transpose();
            first = false;
        }
        let improvement = fx - f_new;
        x = x_new;
        g = g_new;
        fx = f_new;
        if improvement <= opts.ftol * (1.0 + fx.abs()) {
            stalled += 1;
            if stalled >= opts.stall_iters {
                break;
            }
        } else {
            stalled = 0;
        }
    }
    Minimum {
        converged: done(fx, &g),
        x: x.as_slice().to_vec(),
        f: fx,
        grad: g.as_slice().to_vec(),
        iterations,
    }
}

/// Symmetric finite-difference Hessian from an analytic gradient.
pub fn numerical_hessian<G>(mut grad: G, x: &[f64], rel_step: f64) -> DMatrix<f64>
where
    G: FnMut(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let mut hess = DMatrix::zeros(n, n);
    for j in 0..n {
        let h = rel_step * x[j].abs().max(1e-3);
        let mut up = x.to_vec();
        let mut dn = x.to_vec();
        up[j] += h;
        dn[j] -= h;
        let (gu, gd) = (grad(&up), grad(&dn));
        for i in 0..n {
            hess[(i, j)] = (gu[i] - gd[i]) / (2.0 * h);
        }
    }
    (&hess + hess.transpose()) * 0.5
}

/// Standard errors from the inverse of the observed information, if it is positive definite.
pub fn standard_errors(information: &DMatrix<f64>) -> Option<Vec<f64>> {
    let chol = information.clone().cholesky()?;
    let cov = chol.inverse();
    Some((0..cov.nrows()).map(|i| cov[(i, i)].max(0.0).sqrt()).collect())
}
