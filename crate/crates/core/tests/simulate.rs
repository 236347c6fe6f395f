use proptest::prelude::*;
use vote_dynamics::estimate::{ks_statistic, poisson_lognormal_pmf};
use vote_dynamics::simulate::{
    make_corpus, simulate_population_activity, simulate_story, story_rng, PopulationModel, SimConfig,
};
use vote_dynamics::{GlobalParamsV2, PromotionModel, StoryParams};

fn never_promoted() -> GlobalParamsV2 {
    GlobalParamsV2 {
        promotion: PromotionModel::Threshold { h: u32::MAX },
        ..GlobalParamsV2::paper()
    }
}

/// 99% quantile of chi-square with `df` degrees of freedom (Wilson-Hilferty).
fn chi2_q99(df: f64) -> f64 {
    let a = 2.0 / (9.0 * df);
    df * (1.0 - a + 2.326_348 * a.sqrt()).powi(3)
}

#[test]
fn frozen_pool_gaps_are_exponential() {
    // a huge fan pool that barely decays keeps the rate at omega * r * S
    let g = GlobalParamsV2 {
        omega: 1e-6,
        users: 2_000_000_000,
        rho: 1e-15,
        ..never_promoted()
    };
    let s = 1_000_000_000u64;
    let rate = g.omega * 1.0 * s as f64;
    let rec = simulate_story(&g, &StoryParams::v2(1.0, 0.0, s), 10.0, &mut story_rng(11, 0)).unwrap();
    let gaps: Vec<f64> = rec.votes.windows(2).map(|w| w[1].time - w[0].time).collect();
    assert!(gaps.len() > 9_000, "{}", gaps.len());
    let d = ks_statistic(&gaps, |x| 1.0 - (-rate * x).exp());
    let critical = 1.628 / (gaps.len() as f64).sqrt();
    assert!(d < critical, "KS {d} vs {critical}");
    assert!(rec.votes[1..].iter().all(|v| v.is_fan));
}

#[test]
fn paper_corpus_promotes_some_but_not_all() {
    let corpus = make_corpus(&SimConfig::paper(200, 5)).unwrap();
    let promoted = corpus.stories.iter().filter(|s| s.promotion_time.is_some()).count();
    assert!(promoted > 0 && promoted < 200, "{promoted}");
    for (s, t) in corpus.stories.iter().zip(&corpus.truth) {
        assert_eq!(s.story_id, t.story_id);
        assert_eq!(s.n_votes() as u64, t.final_votes);
        assert_eq!(s.promotion_time, t.promotion_time);
    }
}

#[test]
fn corpora_are_reproducible_and_seed_dependent() {
    let a = make_corpus(&SimConfig::paper(20, 9)).unwrap();
    let b = make_corpus(&SimConfig::paper(20, 9)).unwrap();
    let c = make_corpus(&SimConfig::paper(20, 10)).unwrap();
    assert_eq!(serde_json::to_string(&a.stories).unwrap(), serde_json::to_string(&b.stories).unwrap());
    assert_ne!(a.truth, c.truth);
}

#[test]
fn promoted_only_corpus_is_all_promoted() {
    let config = SimConfig {
        promoted_only: true,
        ..SimConfig::paper(30, 12)
    };
    let corpus = make_corpus(&config).unwrap();
    assert_eq!(corpus.stories.len(), 30);
    assert!(corpus.stories.iter().all(|s| s.promotion_time.is_some()));
}

#[test]
fn activity_zero_fraction_matches_mixture() {
    let pop = PopulationModel {
        n_users: 1_000_000,
        mu_act: -2.06,
        sigma_act: 1.82,
    };
    let hist = simulate_population_activity(&pop, 1.0, &mut story_rng(3, 0)).unwrap();
    let zero = hist[0] as f64 / pop.n_users as f64;
    assert!((zero - 0.757).abs() < 0.01, "{zero}");

    // chi-square against the mixture pmf, pooling the tail into one cell
    let n = pop.n_users as f64;
    let (mut stat, mut cells, mut tail_obs, mut tail_exp) = (0.0, 0usize, 0.0, 1.0);
    for (k, &count) in hist.iter().enumerate() {
        let e = n * poisson_lognormal_pmf(pop.mu_act, pop.sigma_act, k as u64).unwrap();
        if e < 20.0 {
            break;
        }
        let o = count as f64;
        stat += (o - e).powi(2) / e;
        tail_obs += o;
        tail_exp -= e / n;
        cells += 1;
    }
    let (o, e) = (n - tail_obs, n * tail_exp);
    stat += (o - e).powi(2) / e;
    let df = cells as f64;
    assert!(stat < chi2_q99(df), "chi2 {stat} on {df} df");
}

#[test]
fn narrow_activity_is_poisson() {
    let pop = PopulationModel {
        n_users: 200_000,
        mu_act: 3f64.ln(),
        sigma_act: 1e-6,
    };
    let hist = simulate_population_activity(&pop, 1.0, &mut story_rng(4, 0)).unwrap();
    let mean = hist.iter().enumerate().map(|(k, &n)| k as f64 * n as f64).sum::<f64>() / pop.n_users as f64;
    let se = (3.0 / pop.n_users as f64).sqrt();
    assert!((mean - 3.0).abs() < 4.0 * se, "{mean}");
}

#[test]
fn rejects_bad_inputs() {
    let g = GlobalParamsV2::paper();
    let mut rng = story_rng(0, 0);
    assert!(simulate_story(&g, &StoryParams::v2(0.1, 0.01, 3), 0.0, &mut rng).is_err());
    assert!(simulate_story(&g, &StoryParams::v1(0.1, 3), 10.0, &mut rng).is_err());
    assert!(simulate_story(&g, &StoryParams::v2(0.1, 0.01, g.users), 10.0, &mut rng).is_err());
    let pop = PopulationModel {
        n_users: 10,
        mu_act: 0.0,
        sigma_act: 0.0,
    };
    assert!(simulate_population_activity(&pop, 1.0, &mut rng).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn seed_determines_story(seed in 0u64..10_000, rf in 0.0f64..0.6, rn in 0.0f64..0.05, s in 0u64..60) {
        let g = GlobalParamsV2::paper();
        let p = StoryParams::v2(rf, rn, s);
        let a = simulate_story(&g, &p, 24.0, &mut story_rng(seed, 1)).unwrap();
        let b = simulate_story(&g, &p, 24.0, &mut story_rng(seed, 1)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn votes_are_ordered_and_labelled(seed in 0u64..10_000, rf in 0.0f64..0.6, rn in 0.0f64..0.05, s in 0u64..60) {
        let g = GlobalParamsV2 { rho: 1e-15, ..GlobalParamsV2::paper() };
        let rec = simulate_story(&g, &StoryParams::v2(rf, rn, s), 24.0, &mut story_rng(seed, 2)).unwrap();
        prop_assert_eq!(rec.votes[0].time, 0.0);
        prop_assert!(!rec.votes[0].is_fan);
        prop_assert!(rec.votes.windows(2).all(|w| w[0].time <= w[1].time));
        prop_assert!(rec.votes.iter().all(|v| v.time <= 24.0));
        // with negligible conversion, fan votes need submitter fans
        if s == 0 {
            prop_assert!(rec.votes.iter().all(|v| !v.is_fan));
        }
        prop_assert_eq!(rec.final_votes, Some(rec.n_votes() as u64));
    }

    #[test]
    fn single_story_corpus_matches_story_truth(seed in 0u64..1_000) {
        let corpus = make_corpus(&SimConfig::paper(1, seed)).unwrap();
        let t = &corpus.truth[0];
        let mut rng = story_rng(seed, 0);
        // replay the parameter draws, then simulate with the same stream
        let config = SimConfig::paper(1, seed);
        let replay = {
            use rand_distr::{Distribution, LogNormal};
            let rf = LogNormal::new(config.r_fan.mu, config.r_fan.sigma).unwrap().sample(&mut rng).min(1.0);
            let rn = LogNormal::new(config.r_nonfan.mu, config.r_nonfan.sigma).unwrap().sample(&mut rng).min(1.0);
            let s = config.submitter_fans.sample(&mut rng);
            (rf, rn, s)
        };
        prop_assert_eq!(replay, (t.r_fan, t.r_nonfan, t.submitter_fans));
        let rec = simulate_story(&config.global, &t.params(), config.horizon, &mut rng).unwrap();
        prop_assert_eq!(rec.votes.len(), corpus.stories[0].votes.len());
        prop_assert!(rec.votes.iter().zip(&corpus.stories[0].votes).all(|(a, b)| a.time == b.time && a.is_fan == b.is_fan));
    }
}
