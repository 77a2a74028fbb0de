use bpskrx_core::baselines::{
    helstrom_bound, hynore_error, kennedy_error, optimized_displacement_error, sql_error,
};
use bpskrx_core::feedforward::{
    dffre_error, evaluate, hffre_correct_at, hffre_error, step_correct_prob,
};
use bpskrx_core::trajectory::estimate_error;
use bpskrx_core::{DetectorModel, FeedForwardConfig, PnrResolution, RngSpec};
use proptest::prelude::*;

fn m(k: u32) -> PnrResolution {
    PnrResolution::new(k).unwrap()
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp())
}

#[test]
fn feed_forward_dominance_and_sql_beating() {
    let ideal = DetectorModel::ideal(m(2));
    for a2 in log_grid(0.05, 4.0, 9) {
        let alpha = a2.sqrt();
        for n in [1, 2, 5] {
            let d = dffre_error(alpha, &FeedForwardConfig::dffre(n, ideal)).unwrap().p_err;
            let h = hffre_error(alpha, &FeedForwardConfig::hffre(n, ideal)).unwrap().p_err;
            let sql = sql_error(alpha).unwrap();
            assert!(helstrom_bound(alpha) <= h, "a2={a2} N={n}");
            assert!(h <= d + 1e-9, "a2={a2} N={n}: {h} > {d}");
            assert!(d + 1e-9 <= 0.5);
            assert!(h <= sql && d <= sql, "a2={a2} N={n}");
        }
    }
}

#[test]
fn benchmark_receivers_are_bracketed() {
    let ideal = DetectorModel::ideal(m(2));
    for a2 in log_grid(0.01, 10.0, 12) {
        let alpha = a2.sqrt();
        let hel = helstrom_bound(alpha);
        let disp = optimized_displacement_error(alpha, &ideal).unwrap().p_err;
        assert!(hel <= disp && disp <= 0.5, "a2={a2}");
        let hy = hynore_error(alpha, m(2)).unwrap().p_err;
        assert!(hel <= hy && hy <= kennedy_error(alpha) + 1e-12, "a2={a2}");
    }
}

#[test]
fn more_copies_lower_the_ratio_at_low_energy() {
    let ideal = DetectorModel::ideal(m(2));
    let alpha = 0.1f64.sqrt();
    for cfg in [FeedForwardConfig::dffre, FeedForwardConfig::hffre] {
        let r: Vec<f64> = [1, 2, 5]
            .iter()
            .map(|&n| evaluate(alpha, &cfg(n, ideal)).unwrap().ratio)
            .collect();
        assert!(r[0] > r[1] && r[1] > r[2], "{r:?}");
    }
}

#[test]
fn finer_resolution_helps_the_hybrid() {
    let alpha = 2f64.sqrt();
    let p = |k| hffre_error(alpha, &FeedForwardConfig::hffre(1, DetectorModel::ideal(m(k)))).unwrap().p_err;
    assert!(p(4) <= p(2) + 1e-9);
}

#[test]
fn threshold_choice_matches_exhaustive_evaluation() {
    let dark = DetectorModel::new(m(2), 1.0, 1e-3, 1.0).unwrap();
    let alpha = 3f64.sqrt();
    let chosen = dffre_error(alpha, &FeedForwardConfig::dffre(1, dark)).unwrap();
    let finals: Vec<f64> = (1..=2)
        .map(|n_th| {
            let (_, trace) =
                hffre_correct_at(alpha, 1.0, 0.0, &FeedForwardConfig::hffre(1, dark), n_th).unwrap();
            *trace.last().unwrap()
        })
        .collect();
    let best = if finals[1] > finals[0] { 2 } else { 1 };
    assert_eq!(chosen.params.n_th, best);
    assert_eq!(1.0 - chosen.p_err, finals[(best - 1) as usize]);
}

#[test]
fn simulator_agrees_under_combined_imperfections() {
    // points beyond the acceptance grid, including combined imperfections
    let cases = [
        (0.5, FeedForwardConfig::dffre(2, DetectorModel::new(m(3), 0.5, 0.0, 1.0).unwrap())),
        (1.5, FeedForwardConfig::hffre(2, DetectorModel::new(m(2), 0.8, 1e-2, 1.0).unwrap())),
        (0.8, FeedForwardConfig::hffre(1, DetectorModel::new(m(3), 0.9, 1e-3, 0.99).unwrap())),
    ];
    for (i, (a2, cfg)) in cases.into_iter().enumerate() {
        let alpha = f64::sqrt(a2);
        let r = evaluate(alpha, &cfg).unwrap();
        assert!((1e-4..=0.5).contains(&r.p_err));
        let (p, se) =
            estimate_error(alpha, &r.params, &cfg, 1_000_000, RngSpec::new(77, i as u64)).unwrap();
        assert!((p - r.p_err).abs() <= 4.0 * se, "case {i}: {p} vs {}", r.p_err);
    }
}

fn any_model() -> impl Strategy<Value = DetectorModel> {
    (1u32..=4, 0.3f64..=1.0, prop_oneof![Just(0.0), 1e-4f64..0.05], prop_oneof![Just(1.0), 0.95f64..=1.0])
        .prop_map(|(k, eta, nu, xi)| DetectorModel::new(m(k), eta, nu, xi).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn step_probability_stays_a_probability(
        p in 0.0f64..=1.0,
        beta in 0.0f64..6.0,
        amp in 0.0f64..4.0,
        n in 1usize..8,
        model in any_model(),
    ) {
        let n_th = model.m.get();
        let q = step_correct_prob(p, beta, amp, n, &model, n_th).unwrap();
        prop_assert!((0.0..=1.0).contains(&q));
    }

    #[test]
    fn no_receiver_beats_helstrom(a2 in 0.01f64..6.0, n in 1usize..4, model in any_model()) {
        let alpha = a2.sqrt();
        let d = dffre_error(alpha, &FeedForwardConfig::dffre(n, model)).unwrap();
        prop_assert!(d.p_err >= helstrom_bound(alpha));
        prop_assert!(d.p_err <= 0.5);
        prop_assert_eq!(d.per_step_correct.len(), n + 1);
        prop_assert!(d.params.betas.iter().all(|&b| b >= 0.0 && b <= alpha / (n as f64).sqrt() + 5.0));
    }
}
