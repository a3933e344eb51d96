use powcheck_core::accuracy::contingency_from;
use powcheck_core::bleu::{corpus_bleu, swap_effects};
use powcheck_core::likert::{simulate_ratings, Condition, Preset};
use powcheck_core::priors::{odds_ratio, predict_overlap, PriorBundle};
use powcheck_core::rng::stream;
use powcheck_core::significance::{binom_test, mcnemar_test, paired_randomization_test, McNemarVariant};
use proptest::prelude::*;

fn fixture(name: &str) -> Vec<String> {
    let path = format!("{}/tests/fixtures/bleu/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).unwrap().lines().map(String::from).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exact_mcnemar_equals_binomial_test(k1 in 0u64..300, k2 in 0u64..300) {
        prop_assume!(k1 + k2 > 0);
        let m = mcnemar_test(k1, k2, McNemarVariant::ExactConditional, None).unwrap();
        let b = binom_test(k2, k1 + k2, 0.5).unwrap();
        prop_assert!((m.p_value - b.p_value).abs() < 1e-15);
    }

    #[test]
    fn mcnemar_p_invariant_under_relabeling(k1 in 0u64..500, k2 in 0u64..500) {
        for v in [McNemarVariant::ChiSquare, McNemarVariant::ExactConditional] {
            let a = mcnemar_test(k1, k2, v, Some(2000)).unwrap();
            let b = mcnemar_test(k2, k1, v, Some(2000)).unwrap();
            prop_assert_eq!(a.p_value, b.p_value);
            prop_assert_eq!(a.effect_sign, -b.effect_sign);
        }
    }

    #[test]
    fn binomial_p_invariant_under_relabeling(k in 0u64..=80) {
        let a = binom_test(k, 80, 0.5).unwrap();
        let b = binom_test(80 - k, 80, 0.5).unwrap();
        prop_assert!((a.p_value - b.p_value).abs() < 1e-14);
    }

    #[test]
    fn randomization_p_invariant_under_relabeling(
        a in prop::collection::vec(-1.0f64..1.0, 5..40),
        shift in -0.3f64..0.3,
        seed in any::<u64>(),
    ) {
        let b: Vec<f64> = a.iter().enumerate().map(|(i, x)| x + shift + 0.1 * (i as f64).sin()).collect();
        let p = paired_randomization_test(&a, &b, 500, seed).unwrap();
        let q = paired_randomization_test(&b, &a, 500, seed).unwrap();
        prop_assert_eq!(p.p_value, q.p_value);
        prop_assert_eq!(p.effect_sign, -q.effect_sign);
    }

    #[test]
    fn zero_differences_give_unit_p(n in 1usize..60, v in -5.0f64..5.0, seed in any::<u64>()) {
        let a = vec![v; n];
        prop_assert_eq!(paired_randomization_test(&a, &a, 200, seed).unwrap().p_value, 1.0);
    }

    #[test]
    fn contingency_readback(pa in 0.0f64..=1.0, frac in -1.0f64..=1.0) {
        let delta = frac * (1.0 - pa);
        let s = contingency_from(pa, delta, None).unwrap();
        prop_assert!((s.agreement() - pa).abs() < 1e-12);
        prop_assert!((s.delta_acc() - delta).abs() < 1e-12);
    }

    #[test]
    fn overlap_monotone(a in 0.5f64..0.95, b in 0.5f64..0.95, d in 0.0f64..0.05, e in 0.0f64..0.05) {
        for bundle in [PriorBundle::glue(), PriorBundle::squad2()] {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(predict_overlap(lo, d, &bundle).value <= predict_overlap(hi, d, &bundle).value);
            let (small, large) = if d <= e { (d, e) } else { (e, d) };
            prop_assert!(predict_overlap(a, small, &bundle).value >= predict_overlap(a, large, &bundle).value);
        }
    }

    #[test]
    fn odds_ratio_is_one_without_difference(o in 0.0f64..0.999) {
        prop_assert_eq!(odds_ratio(o, 0.0).unwrap(), 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn corpus_bleu_is_order_invariant(perm in Just((0..60).collect::<Vec<usize>>()).prop_shuffle()) {
        let (r, h) = (fixture("ref.txt"), fixture("sys_a.txt"));
        let base = corpus_bleu(&r, &h).unwrap().score;
        let rp: Vec<&String> = perm.iter().map(|&i| &r[i]).collect();
        let hp: Vec<&String> = perm.iter().map(|&i| &h[i]).collect();
        prop_assert!((corpus_bleu(&rp, &hp).unwrap().score - base).abs() < 1e-9);
    }
}

#[test]
fn swap_effects_antisymmetric() {
    let (r, a, b) = (fixture("ref.txt"), fixture("sys_a.txt"), fixture("sys_b.txt"));
    let ab = swap_effects(&r, &a, &b, 0, 1).unwrap();
    let ba = swap_effects(&r, &b, &a, 0, 1).unwrap();
    assert!((ab.delta_b + ba.delta_b).abs() < 1e-12);
    for (x, y) in ab.deltas.iter().zip(&ba.deltas) {
        assert!((x + y).abs() < 1e-9);
    }
}

#[test]
fn ratings_condition_symmetric() {
    // Negating the effect and swapping the labels leaves the distribution of
    // the condition difference (and per-condition moments) unchanged.
    let p = Preset::HighVariance.params(0.5, 0.15);
    let q = p.with_effect(-0.15);
    let reps = 4000;
    let moments = |params, swap: bool| {
        let (mut s, mut s2, mut hi) = (0.0, 0.0, 0.0);
        for rep in 0..reps {
            let t = simulate_ratings(&params, 3, 20, &mut stream(if swap { 7 } else { 8 }, rep)).unwrap();
            let mut d = t.condition_difference();
            if swap {
                d = -d;
            }
            s += d;
            s2 += d * d;
            let treat: f64 = t
                .rows()
                .iter()
                .filter(|r| (r.condition == Condition::Treatment) != swap)
                .map(|r| r.rating)
                .sum::<f64>()
                / 60.0;
            hi += treat;
        }
        let n = reps as f64;
        (s / n, s2 / n - (s / n) * (s / n), hi / n)
    };
    let (m1, v1, t1) = moments(p, false);
    let (m2, v2, t2) = moments(q, true);
    let se = (v1 / reps as f64).sqrt();
    assert!((m1 - m2).abs() < 4.0 * se * 2f64.sqrt(), "{m1} vs {m2}");
    assert!((v1 / v2 - 1.0).abs() < 0.1, "{v1} vs {v2}");
    assert!((t1 - t2).abs() < 0.01);
}
