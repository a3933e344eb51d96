//! Statistical properties of the engine and the scenario processes.

use powcheck_core::accuracy::{estimate_params, mcnemar_power, ContingencySpec, PairedPredictions};
use powcheck_core::binomial::BinomialProcess;
use powcheck_core::bleu::{mt_randomization_test_with, simulate_mt_dataset, MtGenSpec};
use powcheck_core::likert::{likert_power, Preset};
use powcheck_core::priors::{fit_ols, PriorBundle};
use powcheck_core::rng::{normal, stream, uniform};
use powcheck_core::significance::McNemarVariant;
use powcheck_core::{estimate_power, SimulationConfig};

fn cfg(reps: u64, seed: u64) -> SimulationConfig {
    SimulationConfig::new(0.05, reps, seed).unwrap()
}

#[test]
fn mc_stderr_matches_seed_to_seed_spread() {
    let p = BinomialProcess::from_prob(60, 0.6).unwrap();
    let runs: Vec<_> = (0..50).map(|s| estimate_power(&p, &cfg(2000, 100 + s)).unwrap()).collect();
    let mean = runs.iter().map(|r| r.power).sum::<f64>() / 50.0;
    let var = runs.iter().map(|r| (r.power - mean).powi(2)).sum::<f64>() / 49.0;
    let se2 = runs.iter().map(|r| r.mc_stderr.powi(2)).sum::<f64>() / 50.0;
    assert!(var <= 4.0 * se2, "{var} vs {se2}");
    assert!(var >= se2 / 4.0, "{var} vs {se2}");
}

#[test]
fn binomial_power_monotone_in_n_and_effect() {
    let c = cfg(4000, 3);
    let mut last = (0.0, 0.0);
    for n in [20, 40, 80, 160] {
        let r = estimate_power(&BinomialProcess::from_prob(n, 0.6).unwrap(), &c).unwrap();
        assert!(r.power + 2.0 * r.mc_stderr >= last.0 - 2.0 * last.1);
        last = (r.power, r.mc_stderr);
    }
    let mut last = (0.0, 0.0);
    for e in [0.02, 0.05, 0.1, 0.15] {
        let r = estimate_power(&BinomialProcess::new(80, e).unwrap(), &c).unwrap();
        assert!(r.power + 2.0 * r.mc_stderr >= last.0 - 2.0 * last.1);
        last = (r.power, r.mc_stderr);
    }
}

#[test]
fn mcnemar_null_rate_and_agreement_pattern() {
    let c = cfg(20_000, 5);
    let exact = mcnemar_power(0.9, 0.0, 500, McNemarVariant::ExactConditional, &c).unwrap();
    assert!(exact.power <= 0.05 + 2.0 * exact.mc_stderr, "{}", exact.power);
    let chi = mcnemar_power(0.9, 0.0, 500, McNemarVariant::ChiSquare, &c).unwrap();
    assert!((chi.power - 0.05).abs() < 3.0 * chi.mc_stderr + 0.005, "{}", chi.power);

    let c = cfg(5000, 6);
    let mut last: Option<(f64, f64)> = None;
    for pa in [0.8, 0.85, 0.9, 0.95] {
        let r = mcnemar_power(pa, 0.02, 1000, McNemarVariant::ExactConditional, &c).unwrap();
        if let Some((p, se)) = last {
            assert!(r.power > p - 2.0 * (se + r.mc_stderr), "pa {pa}: {} after {p}", r.power);
        }
        last = Some((r.power, r.mc_stderr));
    }
}

#[test]
fn estimated_cells_converge_to_generating_spec() {
    let spec = ContingencySpec::new(0.78, 0.05, 0.08, 0.09).unwrap();
    let mut rng = stream(12, 0);
    let pairs: Vec<(bool, bool)> = (0..100_000)
        .map(|_| {
            let u = uniform(&mut rng);
            if u < 0.78 {
                (true, true)
            } else if u < 0.83 {
                (true, false)
            } else if u < 0.91 {
                (false, true)
            } else {
                (false, false)
            }
        })
        .collect();
    let est = estimate_params(&PairedPredictions::from_pairs(pairs).unwrap()).unwrap();
    for (a, b) in est.spec.cells().iter().zip(spec.cells()) {
        assert!((a - b).abs() < 0.01);
    }
    assert!((est.agreement - spec.agreement()).abs() < 0.01);
    assert!((est.delta_acc - spec.delta_acc()).abs() < 0.01);
}

#[test]
fn ols_recovers_bundled_overlap_coefficients() {
    let glue = PriorBundle::glue();
    let m = &glue.overlap;
    let mut rng = stream(21, 0);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for _ in 0..m.n_observations {
        let min_acc = 0.5 + 0.45 * uniform(&mut rng);
        let diff = 0.1 * uniform(&mut rng);
        rows.push(vec![min_acc, diff]);
        y.push(m.intercept + m.coefficients[0] * min_acc + m.coefficients[1] * diff + normal(&mut rng, 0.0, 0.02));
    }
    let fit = fit_ols(&["min_acc", "acc_diff"], &rows, &y).unwrap();
    assert!((fit.intercept - m.intercept).abs() <= m.std_errors[0]);
    for k in 0..2 {
        assert!((fit.coefficients[k] - m.coefficients[k]).abs() <= m.std_errors[k + 1]);
    }
}

#[test]
fn mt_null_p_values_are_super_uniform() {
    let spec = MtGenSpec::new(500, 0.0, 0.125, 25.8).unwrap();
    let sims = 1000;
    let mut ps: Vec<f64> = (0..sims)
        .map(|s| {
            let mut rng = stream(31, s);
            let d = simulate_mt_dataset(&spec, &mut rng).unwrap();
            mt_randomization_test_with(&d, 999, &mut rng).unwrap().p_value
        })
        .collect();
    ps.sort_by(f64::total_cmp);
    // One-sided KS: the empirical CDF must not exceed the uniform CDF.
    let d_plus = ps
        .iter()
        .enumerate()
        .map(|(i, p)| (i + 1) as f64 / sims as f64 - p)
        .fold(f64::NEG_INFINITY, f64::max);
    let critical = (-(0.05f64).ln() / (2.0 * sims as f64)).sqrt();
    assert!(d_plus < critical, "D+ = {d_plus}, critical {critical}");
}

#[test]
fn likert_power_monotone_in_design() {
    let c = cfg(300, 4);
    let p = Preset::HighVariance.params(0.5, 0.1);
    for grid in [[(3, 50), (3, 100), (3, 200)], [(3, 100), (6, 100), (12, 100)]] {
        let mut last: Option<(f64, f64)> = None;
        for (w, i) in grid {
            let r = likert_power(&p, w, i, &c).unwrap();
            if let Some((pw, se)) = last {
                assert!(r.power >= pw - 2.0 * (se + r.mc_stderr), "({w},{i}): {} after {pw}", r.power);
            }
            last = Some((r.power, r.mc_stderr));
        }
    }
}
