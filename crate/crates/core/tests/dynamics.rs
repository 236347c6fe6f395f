use approx::assert_relative_eq;
use proptest::prelude::*;
use vote_dynamics::dynamics::{promotion_time_v1, solve_v1, solve_v2};
use vote_dynamics::visibility::{law_of_surfing_upper, PromotionModel};
use vote_dynamics::{GlobalParamsV1, GlobalParamsV2, StepControl, StoryParams};

/// Fixed-step explicit Euler for model V1 with the step functions evaluated directly.
fn euler_v1(g: &GlobalParamsV1, r: f64, s0: f64, horizon: f64, dt: f64) -> (f64, f64) {
    let f = |m: f64| law_of_surfing_upper(m, g.surf_mu, g.surf_lambda).unwrap();
    let (mut n, mut s, mut t) = (1.0f64, s0, 0.0);
    let mut tp: Option<f64> = None;
    let steps = (horizon / dt).round() as usize;
    for _ in 0..steps {
        let list = match tp {
            Some(tp) => g.nu * f(g.k_front * (t - tp) + 1.0),
            None if t < g.upcoming_lifetime => g.c * g.nu * f(g.k_upcoming * t + 1.0),
            None => 0.0,
        };
        let dn = r * (list + g.omega * s);
        let ds = -g.omega * s + g.a * n.powf(-g.b) * dn;
        n += dt * dn;
        s += dt * ds;
        t += dt;
        if tp.is_none() && t < g.upcoming_lifetime && n >= f64::from(g.h) {
            tp = Some(t);
        }
    }
    (n, s)
}

/// Fixed-step explicit Euler for model V2 with median-rule promotion.
fn euler_v2(g: &GlobalParamsV2, rf: f64, rn: f64, s0: u64, horizon: f64, dt: f64) -> [f64; 4] {
    let f = |m: f64| law_of_surfing_upper(m, g.surf_mu, g.surf_lambda).unwrap();
    let target = g.promotion.median_promotion_vote(1, 1_000_000).map(|v| v as f64);
    let mut y = [0.0, 1.0, s0 as f64, (g.users - s0 - 1) as f64];
    let mut t = 0.0;
    let mut tp: Option<f64> = None;
    let steps = (horizon / dt).round() as usize;
    for _ in 0..steps {
        let pn = match tp {
            Some(tp) => f(g.k_front * (t - tp) + 1.0),
            None if t < g.upcoming_lifetime => g.c * f(g.k_upcoming * t + 1.0),
            None => 0.0,
        };
        let dvf = g.omega * rf * y[2];
        let dvn = g.omega * rn * pn * y[3];
        let conv = g.rho * y[3] * (dvf + dvn);
        let d = [dvf, dvn, -g.omega * y[2] + conv, -g.omega * pn * y[3] - conv];
        for i in 0..4 {
            y[i] += dt * d[i];
        }
        t += dt;
        if tp.is_none() && t < g.upcoming_lifetime && target.is_some_and(|h| y[0] + y[1] >= h) {
            tp = Some(t);
        }
    }
    y
}

#[test]
fn v1_matches_fine_step_oracle() {
    let g = GlobalParamsV1::paper();
    for (s, r) in [(5, 0.51), (40, 0.28), (100, 0.13), (0, 0.05)] {
        let traj = solve_v1(&g, &StoryParams::v1(r, s), 100.0, &StepControl::default()).unwrap();
        let (n, fans) = euler_v1(&g, r, s as f64, 100.0, 1e-4);
        assert_relative_eq!(traj.final_votes(), n, max_relative = 5e-3);
        assert_relative_eq!(*traj.fans.last().unwrap(), fans, max_relative = 5e-3, epsilon = 1e-6);
    }
}

#[test]
fn v2_matches_fine_step_oracle_at_median_interest() {
    let g = GlobalParamsV2::paper();
    let (rf, rn) = ((-1.8f64).exp(), (-4.0f64).exp());
    for s in [0, 10, 60] {
        let traj = solve_v2(&g, &StoryParams::v2(rf, rn, s), 72.0, &StepControl::default()).unwrap();
        let y = euler_v2(&g, rf, rn, s, 72.0, 1e-4);
        let last = traj.times.len() - 1;
        let got = [traj.v_fan[last], traj.v_nonfan[last], traj.fans[last], traj.nonfans[last]];
        for i in 0..4 {
            assert_relative_eq!(got[i], y[i], max_relative = 5e-3, epsilon = 1e-6);
        }
    }
}

#[test]
fn v2_threshold_oracle_with_early_promotion() {
    let g = GlobalParamsV2 {
        promotion: PromotionModel::Threshold { h: 25 },
        ..GlobalParamsV2::paper()
    };
    let traj = solve_v2(&g, &StoryParams::v2(0.3, 0.05, 30), 48.0, &StepControl::default()).unwrap();
    assert!(traj.promotion_time.is_some());
    let y = euler_v2(&g, 0.3, 0.05, 30, 48.0, 1e-4);
    assert_relative_eq!(traj.final_votes(), y[0] + y[1], max_relative = 5e-3);
}

#[test]
fn v1_extremes_of_promotion() {
    let g = GlobalParamsV1::paper();
    assert!(promotion_time_v1(&g, &StoryParams::v1(1.0, 200)).unwrap().is_some());
    assert!(promotion_time_v1(&g, &StoryParams::v1(0.0, 200)).unwrap().is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn v1_final_votes_grow_with_interest(s in 0u64..150, r in 0.01f64..0.9, dr in 0.001f64..0.1) {
        let g = GlobalParamsV1::paper();
        let ctrl = StepControl::default().with_sample_interval(10.0);
        let lo = solve_v1(&g, &StoryParams::v1(r, s), 60.0, &ctrl).unwrap().final_votes();
        let hi = solve_v1(&g, &StoryParams::v1((r + dr).min(1.0), s), 60.0, &ctrl).unwrap().final_votes();
        prop_assert!(hi >= lo * (1.0 - 1e-9));
    }

    #[test]
    fn v1_promotion_is_monotone_in_interest(s in 0u64..150, r in 0.01f64..0.9, dr in 0.001f64..0.1) {
        let g = GlobalParamsV1::paper();
        let low = promotion_time_v1(&g, &StoryParams::v1(r, s)).unwrap();
        let high = promotion_time_v1(&g, &StoryParams::v1((r + dr).min(1.0), s)).unwrap();
        if let Some(t_low) = low {
            prop_assert!(high.is_some_and(|t_high| t_high <= t_low + 1e-9));
        }
    }

    #[test]
    fn v2_final_votes_grow_with_each_interest(s in 0u64..80, rf in 0.0f64..0.8, rn in 0.0f64..0.1, d in 0.001f64..0.05) {
        let g = GlobalParamsV2 { promotion: PromotionModel::Threshold { h: 40 }, ..GlobalParamsV2::paper() };
        let ctrl = StepControl::default().with_sample_interval(10.0);
        let base = solve_v2(&g, &StoryParams::v2(rf, rn, s), 72.0, &ctrl).unwrap().final_votes();
        let more_f = solve_v2(&g, &StoryParams::v2(rf + d, rn, s), 72.0, &ctrl).unwrap().final_votes();
        let more_n = solve_v2(&g, &StoryParams::v2(rf, rn + d, s), 72.0, &ctrl).unwrap().final_votes();
        prop_assert!(more_f >= base * (1.0 - 1e-9));
        prop_assert!(more_n >= base * (1.0 - 1e-9));
    }

    #[test]
    fn v2_pools_never_grow(s in 0u64..80, rf in 0.0f64..1.0, rn in 0.0f64..0.2) {
        let g = GlobalParamsV2::paper();
        let traj = solve_v2(&g, &StoryParams::v2(rf, rn, s), 72.0, &StepControl::default()).unwrap();
        for i in 1..traj.times.len() {
            prop_assert!(traj.fans[i] + traj.nonfans[i] <= traj.fans[i - 1] + traj.nonfans[i - 1] + 1e-6);
            prop_assert!(traj.nonfans[i] <= traj.nonfans[i - 1] + 1e-6);
            prop_assert!(traj.fans[i] >= 0.0 && traj.nonfans[i] >= 0.0);
            prop_assert!(traj.v_fan[i] >= traj.v_fan[i - 1] - 1e-9);
            prop_assert!(traj.v_nonfan[i] >= traj.v_nonfan[i - 1] - 1e-9);
        }
    }
}
