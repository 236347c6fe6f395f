//! Pearson and Spearman correlation with a two-sided permutation test.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

fn check(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return invalid(format!("length mismatch: {} vs {}", x.len(), y.len()));
    }
    if x.len() < 3 {
        return invalid(format!("need at least 3 pairs, got {}", x.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return invalid("correlation inputs must be finite");
    }
    Ok(())
}

fn centered(v: &[f64]) -> Result<Vec<f64>> {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let c: Vec<f64> = v.iter().map(|x| x - mean).collect();
    if c.iter().all(|x| x.abs() <= 1e-300) {
        return invalid("correlation is undefined for a constant vector");
    }
    Ok(c)
}

fn dot_corr(x: &[f64], y: &[f64]) -> f64 {
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check(x, y)?;
    Ok(dot_corr(&centered(x)?, &centered(y)?))
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check(x, y)?;
    pearson(&ranks(x), &ranks(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrTest {
    pub r: f64,
    pub p_value: f64,
    pub n_perm: usize,
}

/// Pearson correlation with the two-sided permutation p-value
/// `(1 + #{|r_perm| >= |r|}) / (1 + n_perm)`.
pub fn permutation_corr_test<R: Rng + ?Sized>(x: &[f64], y: &[f64], n_perm: usize, rng: &mut R) -> Result<CorrTest> {
    check(x, y)?;
    let (cx, mut cy) = (centered(x)?, centered(y)?);
    let r = dot_corr(&cx, &cy);
    let mut hits = 0usize;
    for _ in 0..n_perm {
        cy.shuffle(rng);
        if dot_corr(&cx, &cy).abs() >= r.abs() - 1e-12 {
            hits += 1;
        }
    }
    Ok(CorrTest {
        r,
        p_value: (1 + hits) as f64 / (1 + n_perm) as f64,
        n_perm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::story_rng;
    use approx::assert_relative_eq;

    #[test]
    fn identical_vectors() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let t = permutation_corr_test(&x, &x, 999, &mut story_rng(1, 0)).unwrap();
        assert_relative_eq!(t.r, 1.0, epsilon = 1e-12);
        assert_relative_eq!(t.p_value, 1.0 / 1000.0);
    }

    #[test]
    fn average_ranks_for_ties() {
        assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn spearman_ignores_monotone_transforms() {
        let x: Vec<f64> = (1..40).map(|i| i as f64 * 0.7).collect();
        let y: Vec<f64> = x.iter().map(|v| (v * 1.3).sin() + v * 0.1).collect();
        let a = spearman(&x, &y).unwrap();
        let b = spearman(&x.iter().map(|v| v.exp()).collect::<Vec<_>>(), &y).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn constant_vector_is_an_error() {
        assert!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }
}
