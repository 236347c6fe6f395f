use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Exp1, LogNormal};
use vote_dynamics::estimate::{
    constant_rate_mle, fit_activity_zero_truncated, fit_global_params, fit_lognormal, fit_promotion_counts,
    fit_story_interest, ks_bootstrap_gof, loglik_inhomogeneous, permutation_corr_test, profile_loglik, spearman,
    story_loglik, Family, GlobalFitOptions, InterestPrior, PromotionCounts, StoryFitOptions, VoteSubset,
};
use vote_dynamics::simulate::{make_corpus, simulate_population_activity, simulate_story, story_rng, PopulationModel, SimConfig};
use vote_dynamics::{GlobalParamsV2, StoryParams, StoryRecord, VoteEvent};

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[test]
fn large_story_recovers_its_interest() {
    let g = GlobalParamsV2::paper();
    let (rf, rn) = (0.35, 0.04);
    let rec = simulate_story(&g, &StoryParams::v2(rf, rn, 150), 72.0, &mut story_rng(21, 0)).unwrap();
    assert!(rec.n_votes() >= 200, "{}", rec.n_votes());
    let fit = fit_story_interest(&rec, &g, &StoryFitOptions::default()).unwrap();
    assert!(fit.converged);
    assert!((fit.r_fan / rf - 1.0).abs() < 0.25, "r_fan {}", fit.r_fan);
    assert!((fit.r_nonfan / rn - 1.0).abs() < 0.25, "r_nonfan {}", fit.r_nonfan);
}

#[test]
fn prior_lifts_zero_fan_interest() {
    let g = GlobalParamsV2::paper();
    let votes: Vec<VoteEvent> = [0.0, 0.4, 0.9, 1.7, 2.2, 3.0, 4.1, 5.5, 6.0, 7.3]
        .iter()
        .enumerate()
        .map(|(i, &t)| VoteEvent::new("z", format!("u{i}"), t, false))
        .collect();
    let rec = StoryRecord::new("z", 0.0, 25, votes, None, None).unwrap().with_observed_until(8.0);
    let mle = fit_story_interest(&rec, &g, &StoryFitOptions::default()).unwrap();
    assert_eq!(mle.r_fan, 0.0);
    let map = fit_story_interest(
        &rec,
        &g,
        &StoryFitOptions {
            prior: Some(InterestPrior::paper()),
            ..StoryFitOptions::default()
        },
    )
    .unwrap();
    assert!(map.r_fan > 0.0 && map.r_fan < 1.0, "{}", map.r_fan);
    assert!(map.log_posterior.is_some_and(f64::is_finite));
}

#[test]
fn window_fit_uses_only_early_votes() {
    let g = GlobalParamsV2::paper();
    let rec = simulate_story(&g, &StoryParams::v2(0.3, 0.03, 40), 72.0, &mut story_rng(22, 0)).unwrap();
    let opts = StoryFitOptions {
        window: Some(10),
        ..StoryFitOptions::default()
    };
    let a = fit_story_interest(&rec, &g, &opts).unwrap();
    let b = fit_story_interest(&rec.truncated(10), &g, &opts).unwrap();
    assert_eq!(a.n_fan + a.n_nonfan, b.n_fan + b.n_nonfan);
    assert!((a.r_fan - b.r_fan).abs() <= 1e-9 * (1.0 + a.r_fan));
    assert!((a.r_nonfan - b.r_nonfan).abs() <= 1e-9 * (1.0 + a.r_nonfan));
}

#[test]
fn truth_beats_doubled_parameters() {
    let config = SimConfig::paper(60, 23);
    let corpus = make_corpus(&config).unwrap();
    let g = &config.global;
    let at_truth = profile_loglik(&corpus.stories, g, VoteSubset::All).unwrap().0;
    for (name, p) in [
        ("c", GlobalParamsV2 { c: 2.0 * g.c, ..g.clone() }),
        ("mu", GlobalParamsV2 { surf_mu: 2.0 * g.surf_mu, ..g.clone() }),
        ("lambda", GlobalParamsV2 { surf_lambda: 2.0 * g.surf_lambda, ..g.clone() }),
        ("rho", GlobalParamsV2 { rho: 1.4 * g.rho, ..g.clone() }),
        ("rho", GlobalParamsV2 { rho: 0.5 * g.rho, ..g.clone() }),
    ] {
        let other = profile_loglik(&corpus.stories, &p, VoteSubset::All).unwrap().0;
        assert!(at_truth > other, "{name}: {at_truth} vs {other}");
    }
}

#[test]
fn single_story_global_fit_is_flagged() {
    let corpus = make_corpus(&SimConfig::paper(1, 24)).unwrap();
    let fit = fit_global_params(&corpus.stories, &GlobalParamsV2::paper(), &GlobalFitOptions::default()).unwrap();
    let wide = match &fit.visibility.stderr {
        None => true,
        Some(se) => se.iter().zip(&fit.visibility.estimate).any(|(s, e)| !(s.is_finite() && *s < 0.5 * e.abs())),
    };
    assert!(!fit.converged || wide, "{fit:?}");
}

#[test]
fn near_poisson_activity_has_small_sigma() {
    let pop = PopulationModel {
        n_users: 50_000,
        mu_act: 0.5,
        sigma_act: 1e-4,
    };
    let hist = simulate_population_activity(&pop, 1.0, &mut story_rng(25, 0)).unwrap();
    let fit = fit_activity_zero_truncated(&hist).unwrap();
    assert!(fit.sigma < 0.1, "{}", fit.sigma);
    assert!((fit.mu - 0.5).abs() < 0.05, "{}", fit.mu);
}

#[test]
fn lognormal_refit_of_interest_sized_sample() {
    let law = LogNormal::new(-1.67, 0.47).unwrap();
    let mut rng = story_rng(26, 0);
    let xs: Vec<f64> = (0..510).map(|_| law.sample(&mut rng)).collect();
    let fit = fit_lognormal(&xs).unwrap();
    assert!((fit.mu + 1.67).abs() <= 0.04, "{}", fit.mu);
    assert!((fit.sigma - 0.47).abs() <= 0.03, "{}", fit.sigma);
    assert!(!fit.degenerate);
}

#[test]
fn gof_p_values_are_uniform_under_the_null() {
    let law = LogNormal::new(0.3, 0.8).unwrap();
    let mut rng = story_rng(27, 0);
    let mut ps: Vec<f64> = (0..150)
        .map(|_| {
            let xs: Vec<f64> = (0..80).map(|_| law.sample(&mut rng)).collect();
            ks_bootstrap_gof(&xs, Family::Lognormal, 200, &mut rng).unwrap().p_value
        })
        .collect();
    ps.sort_by(f64::total_cmp);
    let n = ps.len() as f64;
    // one-sample KS of the p-values against U(0,1), 1% critical value
    let d = ps
        .iter()
        .enumerate()
        .map(|(i, &p)| (p - i as f64 / n).abs().max(((i + 1) as f64 / n - p).abs()))
        .fold(0.0, f64::max);
    assert!(d < 1.628 / n.sqrt(), "KS {d}");
}

#[test]
fn exponential_data_fails_lognormal_gof() {
    let mut rng = story_rng(28, 0);
    let xs: Vec<f64> = (0..600).map(|_| Exp1.sample(&mut rng)).collect();
    let gof = ks_bootstrap_gof(&xs, Family::Lognormal, 300, &mut rng).unwrap();
    assert!(gof.p_value < 0.01, "{}", gof.p_value);
    let gof = ks_bootstrap_gof(&xs, Family::Exponential, 300, &mut rng).unwrap();
    assert!(gof.p_value > 0.01, "{}", gof.p_value);
}

/// Counts from stories that collect a uniform number of upcoming votes and are
/// promoted after vote `v >= 2` with probability `prob(v)`.
fn promotion_counts<F: Fn(u64) -> f64, R: Rng>(stories: usize, prob: F, rng: &mut R) -> PromotionCounts {
    let mut counts = PromotionCounts::default();
    for _ in 0..stories {
        let total = rng.random_range(2..150u64);
        for v in 2..=total {
            let v_ = v as usize;
            if v_ >= counts.trials.len() {
                counts.trials.resize(v_ + 1, 0);
                counts.promoted.resize(v_ + 1, 0);
            }
            counts.trials[v_] += 1;
            if rng.random::<f64>() < prob(v) {
                counts.promoted[v_] += 1;
                break;
            }
        }
    }
    counts
}

#[test]
fn logistic_promotion_is_recovered() {
    let (a, b) = (-6.0, 0.08);
    let counts = promotion_counts(10_000, |v| logistic(a + b * v as f64), &mut story_rng(29, 0));
    let fit = fit_promotion_counts(&counts).unwrap();
    assert!(fit.result.converged);
    let (fa, fb) = (fit.result.estimate[0], fit.result.estimate[1]);
    assert!((fa / a - 1.0).abs() < 0.15, "intercept {fa}");
    assert!((fb / b - 1.0).abs() < 0.15, "slope {fb}");
}

#[test]
fn threshold_promotion_gives_midpoint_near_threshold() {
    let counts = promotion_counts(3_000, |v| if v >= 40 { 1.0 } else { 0.0 }, &mut story_rng(30, 0));
    let fit = fit_promotion_counts(&counts).unwrap();
    assert!((38.0..=42.0).contains(&fit.midpoint), "{}", fit.midpoint);
}

#[test]
fn permutation_test_on_perfect_and_null_data() {
    let mut rng = story_rng(31, 0);
    let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
    let t = permutation_corr_test(&x, &x, 999, &mut rng).unwrap();
    assert!((t.r - 1.0).abs() < 1e-12);
    assert!((t.p_value - 1.0 / 1000.0).abs() < 1e-12);

    let mut quiet = 0;
    for _ in 0..100 {
        let u: Vec<f64> = (0..500).map(|_| rng.random()).collect();
        let v: Vec<f64> = (0..500).map(|_| rng.random()).collect();
        let t = permutation_corr_test(&u, &v, 199, &mut rng).unwrap();
        if t.r.abs() < 0.1 && t.p_value > 0.05 {
            quiet += 1;
        }
    }
    assert!(quiet >= 90, "{quiet}");
}

#[test]
fn piecewise_constant_rate_matches_closed_form() {
    let rate = |t: f64| if t < 2.0 { 3.0 } else if t < 5.0 { 0.5 } else { 1.25 };
    let times = [0.1, 0.7, 1.9, 2.5, 4.0, 5.5, 6.1, 7.9];
    let expected = -(3.0 * 2.0 + 0.5 * 3.0 + 1.25 * 3.0) + 3.0 * 3f64.ln() + 2.0 * 0.5f64.ln() + 3.0 * 1.25f64.ln();
    let got = loglik_inhomogeneous(rate, &times, 8.0).unwrap();
    assert!((got - expected).abs() < 1e-10, "{got} vs {expected}");
    assert!(constant_rate_mle(0, 1.0).unwrap() == 0.0);
    assert!(constant_rate_mle(3, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn map_fan_interest_is_positive(seed in 0u64..5_000, rn in 0.005f64..0.05, s in 0u64..40) {
        let g = GlobalParamsV2::paper();
        let rec = simulate_story(&g, &StoryParams::v2(0.05, rn, s), 24.0, &mut story_rng(seed, 0)).unwrap();
        prop_assume!(rec.n_votes() >= 3);
        let fit = fit_story_interest(&rec, &g, &StoryFitOptions { prior: Some(InterestPrior::paper()), ..StoryFitOptions::default() }).unwrap();
        prop_assert!(fit.r_fan > 0.0 && fit.r_nonfan > 0.0);
    }

    #[test]
    fn story_mle_beats_nearby_points(seed in 0u64..5_000, rf in 0.05f64..0.6, rn in 0.005f64..0.05, s in 1u64..60) {
        let g = GlobalParamsV2::paper();
        let rec = simulate_story(&g, &StoryParams::v2(rf, rn, s), 48.0, &mut story_rng(seed, 1)).unwrap();
        let fit = fit_story_interest(&rec, &g, &StoryFitOptions::default()).unwrap();
        prop_assume!(fit.r_fan > 0.0 && fit.r_nonfan > 0.0);
        let best = story_loglik(&rec, &g, fit.r_fan, fit.r_nonfan).unwrap().0;
        for (a, b) in [(1.05, 1.0), (0.95, 1.0), (1.0, 1.05), (1.0, 0.95)] {
            let other = story_loglik(&rec, &g, fit.r_fan * a, fit.r_nonfan * b).unwrap().0;
            prop_assert!(best >= other - 1e-9, "{} < {}", best, other);
        }
    }

    #[test]
    fn spearman_ignores_monotone_maps(xs in proptest::collection::vec(-5.0f64..5.0, 5..40), seed in 0u64..100) {
        let mut rng = story_rng(seed, 0);
        let ys: Vec<f64> = xs.iter().map(|x| x + rng.random::<f64>()).collect();
        prop_assume!(xs.iter().any(|&x| x != xs[0]));
        let a = spearman(&xs, &ys).unwrap();
        let mapped: Vec<f64> = xs.iter().map(|x| x.exp() * 3.0 + 1.0).collect();
        let b = spearman(&mapped, &ys).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }
}
