//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p powcheck-core --test acceptance`.

use std::time::{Duration, Instant};

use powcheck_core::accuracy::{
    lachenbruch_mde, mcnemar_power, AgreementFamily, PowerMethod, PriorFamily,
};
use powcheck_core::binomial::{exact_binomial_power, BinomialProcess};
use powcheck_core::bleu::{
    corpus_bleu, fit_mixture, mt_power, mt_randomization_test, simulate_mt_dataset, swap_effects, MtGenSpec, MtProcess,
    DEFAULT_ZERO_TOL,
};
use powcheck_core::likert::{
    fit_lmm, gls_fixed_effects, likert_power, simulate_ratings, Condition, LikertParams, Preset, Rating, RatingsTable,
    VarianceComponents,
};
use powcheck_core::priors::{fit_ols, PriorBundle};
use powcheck_core::randomization::all_subset_sums;
use powcheck_core::rng::{laplace, stream, uniform};
use powcheck_core::significance::McNemarVariant;
use powcheck_core::{estimate_power, find_mde, MdeOptions, SimulationConfig};

struct Suite {
    failed: usize,
}

impl Suite {
    fn check(&mut self, id: &str, pass: bool, detail: String) {
        if !pass {
            self.failed += 1;
        }
        println!("{} {id}: {detail}", if pass { "PASS" } else { "FAIL" });
    }

    fn info(&self, id: &str, detail: String) {
        println!("INFO {id}: {detail}");
    }
}

fn cfg(reps: u64, seed: u64) -> SimulationConfig {
    SimulationConfig::new(0.05, reps, seed).unwrap()
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn fixture(name: &str) -> Vec<String> {
    let path = format!("{}/tests/fixtures/bleu/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).unwrap().lines().map(String::from).collect()
}

fn exact_binomial(s: &mut Suite) {
    let ((a, b), dt) = timed(|| {
        (
            exact_binomial_power(25, 0.65, 0.05).unwrap().power,
            exact_binomial_power(100, 0.65, 0.05).unwrap().power,
        )
    });
    s.check(
        "1 exact binomial power",
        (0.27..=0.33).contains(&a) && b > 0.80 && dt < Duration::from_secs(1),
        format!("n=25 power {a:.4}, n=100 power {b:.4}, {dt:?}"),
    );
}

fn mcnemar(s: &mut Suite) {
    let c = cfg(20_000, 1);
    let v = McNemarVariant::ExactConditional;
    let t = Instant::now();
    let a = mcnemar_power(0.9, 0.02, 500, v, &c).unwrap();
    let tm_a = a.type_m.unwrap_or(f64::NAN);
    s.check(
        "2a McNemar n=500 Pa=0.9 d=0.02",
        within(a.power, 0.25, 0.02) && within(tm_a, 1.9, 0.15),
        format!("power {:.4} (se {:.4}), Type-M {tm_a:.3}", a.power, a.mc_stderr),
    );
    let b = mcnemar_power(0.9, 0.02, 2000, v, &c).unwrap();
    let tm_b = b.type_m.unwrap_or(f64::NAN);
    s.check(
        "2b McNemar n=2000 Pa=0.9 d=0.02",
        within(b.power, 0.79, 0.03) && within(tm_b, 1.1, 0.05),
        format!("power {:.4} (se {:.4}), Type-M {tm_b:.3}", b.power, b.mc_stderr),
    );
    match mcnemar_power(0.975, 0.04, 500, v, &c) {
        Ok(r) => s.check("2c McNemar n=500 Pa=0.975 d=0.04", r.power >= 0.8, format!("power {:.4}", r.power)),
        Err(e) => s.check("2c McNemar n=500 Pa=0.975 d=0.04", false, format!("error: {e}")),
    }
    for (pa, d) in [(0.9, 0.04), (0.975, 0.02)] {
        let r = mcnemar_power(pa, d, 500, v, &c).unwrap();
        s.info("2c", format!("neighbouring scenario Pa={pa} d={d}: power {:.4}", r.power));
    }
    let dt = t.elapsed();
    s.check("2 runtime", dt < Duration::from_secs(60), format!("{dt:?}"));
}

fn prior_mde(s: &mut Suite) {
    let t = Instant::now();
    for (task, n, sota, want, tol) in [
        ("MRPC", 1725, 0.920, 0.0162, 0.002),
        ("SST-2", 1821, 0.972, 0.0102, 0.002),
        ("WNLI", 147, 0.945, 0.0526, 0.004),
    ] {
        let family = PriorFamily {
            bundle: PriorBundle::glue(),
            baseline: sota,
            variant: McNemarVariant::ExactConditional,
        };
        let r = find_mde(&family, n, &MdeOptions::new(0.8, cfg(10_000, 1)));
        match r {
            Ok(m) => s.check(
                &format!("3 MDE {task}"),
                within(m.effect, want, tol),
                format!("MDE {:.4} (target {want} ± {tol}), verified power {:.4}", m.effect, m.verification.power),
            ),
            Err(e) => s.check(&format!("3 MDE {task}"), false, format!("error: {e}")),
        }
        let chi = PriorFamily {
            variant: McNemarVariant::ChiSquare,
            ..family
        };
        if let Ok(m) = find_mde(&chi, n, &MdeOptions::new(0.8, cfg(10_000, 1))) {
            s.info("3", format!("{task} with the chi-square variant: MDE {:.4}", m.effect));
        }
    }
    let dt = t.elapsed();
    s.check("3 runtime", dt < Duration::from_secs(300), format!("{dt:?}"));
}

fn no_prior_bounds(s: &mut Suite) {
    let t = Instant::now();
    let m = lachenbruch_mde(0.920, 1725, 0.8, 0.05, PowerMethod::default()).unwrap();
    s.check(
        "4 Lachenbruch MRPC",
        within(m.mde_mid, 0.0191, 0.002) && within(m.mde_lower, 0.0045, 0.002) && within(m.mde_upper, 0.0248, 0.002),
        format!("mid {:.4}, bounds ({:.4}, {:.4})", m.mde_mid, m.mde_lower, m.mde_upper),
    );
    let w = lachenbruch_mde(0.945, 147, 0.8, 0.05, PowerMethod::default()).unwrap();
    s.check(
        "4 Lachenbruch WNLI",
        within(w.mde_mid, 0.0542, 0.004),
        format!("mid {:.4}, bounds ({:.4}, {:.4})", w.mde_mid, w.mde_lower, w.mde_upper),
    );
    let dt = t.elapsed();
    s.check("4 runtime", dt < Duration::from_secs(300), format!("{dt:?}"));
    let n = lachenbruch_mde(0.920, 1725, 0.8, 0.05, PowerMethod::NormalApprox).unwrap();
    s.info(
        "4",
        format!("normal approximation MRPC mid {:.4}, bounds ({:.4}, {:.4})", n.mde_mid, n.mde_lower, n.mde_upper),
    );
}

fn mt(s: &mut Suite) {
    let t = Instant::now();
    let c = cfg(5000, 1);
    let r = 2000;
    let main = mt_power(&MtGenSpec::new(2000, 1.0, 0.125, 25.8).unwrap(), r, &c).unwrap();
    s.check(
        "5 MT power n=2000",
        within(main.power, 0.75, 0.05),
        format!("power {:.4} (se {:.4})", main.power, main.mc_stderr),
    );
    let null = mt_power(&MtGenSpec::new(2000, 0.0, 0.125, 25.8).unwrap(), r, &c).unwrap();
    s.check(
        "5 MT null rate",
        within(null.power, 0.05, 0.01),
        format!("{} {:.4} (se {:.4})", null.kind.label(), null.power, null.mc_stderr),
    );
    let mut curve = Vec::new();
    for n in [1000, 2000, 4000] {
        let rep = if n == 2000 {
            main.clone()
        } else {
            mt_power(&MtGenSpec::new(n, 1.0, 0.125, 25.8).unwrap(), r, &c).unwrap()
        };
        curve.push((n, rep.power, rep.mc_stderr));
    }
    let monotone = curve.windows(2).all(|w| w[1].1 >= w[0].1 - 2.0 * w[0].2.max(w[1].2));
    s.check(
        "5 MT power monotone in n",
        monotone,
        curve.iter().map(|(n, p, _)| format!("n={n}: {p:.4}")).collect::<Vec<_>>().join(", "),
    );
    let dt = t.elapsed();
    s.check("5 runtime", dt < Duration::from_secs(600), format!("{dt:?}"));
}

fn bleu(s: &mut Suite) {
    let t = Instant::now();
    let (refs, a, b) = (fixture("ref.txt"), fixture("sys_a.txt"), fixture("sys_b.txt"));
    // Reference values from sacrebleu (tokenize="none", smooth_method="none").
    let sa = corpus_bleu(&refs, &a).unwrap().score;
    let sb = corpus_bleu(&refs, &b).unwrap().score;
    s.check(
        "6 corpus BLEU vs reference scorer",
        within(sa, 41.36096734046928, 5e-5) && within(sb, 61.05281261816308, 5e-5),
        format!("A {sa:.6} (ref 41.360967), B {sb:.6} (ref 61.052813)"),
    );

    let fx = swap_effects(&refs, &a, &b, 0, 1).unwrap();
    let mut worst = 0.0f64;
    for i in 0..refs.len() {
        let (mut a2, mut b2) = (a.clone(), b.clone());
        std::mem::swap(&mut a2[i], &mut b2[i]);
        let naive = corpus_bleu(&refs, &a2).unwrap().score - corpus_bleu(&refs, &b2).unwrap().score - fx.delta_b;
        worst = worst.max((naive - fx.deltas[i]).abs());
    }
    s.check("6 swap effects vs naive recomputation", worst <= 1e-9, format!("max abs difference {worst:.3e}"));

    let spec = MtGenSpec::new(15, 1.0, 0.125, 25.8).unwrap();
    let deltas = simulate_mt_dataset(&spec, &mut stream(77, 0)).unwrap();
    let obs = -0.5 * deltas.iter().sum::<f64>();
    let scale: f64 = deltas.iter().map(|d| d.abs()).sum();
    let exact = all_subset_sums(&deltas)
        .iter()
        .filter(|&&x| (obs + x).abs() >= obs.abs() - 1e-9 * scale)
        .count() as f64
        / 32768.0;
    let reps = 400_000u64;
    let mc = mt_randomization_test(&deltas, reps, 5).unwrap().p_value;
    let tol = 4.0 * (exact * (1.0 - exact) / reps as f64).sqrt() + 1.0 / reps as f64;
    s.check(
        "6 MT randomization vs 2^15 enumeration",
        within(mc, exact, tol),
        format!("Monte Carlo p {mc:.5}, exact p {exact:.5} (tol {tol:.5})"),
    );
    let dt = t.elapsed();
    s.check("6 runtime", dt < Duration::from_secs(60), format!("{dt:?}"));
}

fn mixture(s: &mut Suite) {
    let mut rng = stream(7, 0);
    let draws: Vec<f64> = (0..5000)
        .map(|_| if uniform(&mut rng) < 0.2 { 0.0 } else { laplace(&mut rng, -0.004, 0.0129) })
        .collect();
    let f = fit_mixture(&draws, DEFAULT_ZERO_TOL).unwrap();
    let l = f.laplace.unwrap();
    s.check(
        "7 Delta-Laplace fit on direct draws",
        within(f.p0, 0.2, 0.02) && within(l.mu, -0.004, 0.001) && within(l.b / 0.0129, 1.0, 0.05),
        format!("p0 {:.4}, mu {:.5}, b {:.5}", f.p0, l.mu, l.b),
    );

    let spec = MtGenSpec::new(2000, 1.0, 0.125, 25.8).unwrap();
    let (mut p0, mut b0) = (0.0, 0.0);
    for seed in 0..50 {
        let d = simulate_mt_dataset(&spec, &mut stream(seed, 0)).unwrap();
        let f = fit_mixture(&d, DEFAULT_ZERO_TOL).unwrap();
        p0 += f.p0 / 50.0;
        b0 += f.laplace.unwrap().b0 / 50.0;
    }
    s.check(
        "7 simulate then fit round trip",
        within(p0, 0.125, 0.03) && within(b0 / 25.8, 1.0, 0.10),
        format!("mean P0 {p0:.4}, mean b0 {b0:.3} over 50 seeds"),
    );
}

fn likert(s: &mut Suite) {
    let t = Instant::now();
    let c = cfg(1000, 1);
    let hv = likert_power(&Preset::HighVariance.params(0.5, 0.05), 3, 100, &c).unwrap();
    s.check(
        "8 high variance 3x100 b1=0.05 power < 0.5",
        hv.power < 0.5,
        format!("power {:.4} (se {:.4})", hv.power, hv.mc_stderr),
    );
    let lv = likert_power(&Preset::LowVariance.params(0.5, 0.05), 10, 100, &c).unwrap();
    s.check(
        "8 low variance 10x100 b1=0.05 power >= 0.75",
        lv.power >= 0.75,
        format!("power {:.4} (se {:.4})", lv.power, lv.mc_stderr),
    );
    // Known-variance Wald power for the same design, as a cross-check.
    let p = Preset::LowVariance.params(0.5, 0.05);
    let (w, i) = (10.0, 100.0);
    let se = ((2.0 * p.sigma_e.powi(2) + i * p.sigma_w1.powi(2) + w * p.sigma_i1.powi(2)) / (w * i)).sqrt();
    s.info(
        "8",
        format!(
            "known-variance Wald power for low variance 10x100: {:.4}",
            powcheck_core::math::norm_cdf(0.05 / se - 1.96)
        ),
    );
    let mut powers = Vec::new();
    for b1 in [0.05, 0.1, 0.2] {
        powers.push(likert_power(&Preset::HighVariance.params(0.5, b1), 3, 100, &c).unwrap().power);
    }
    s.check(
        "8 power strictly increasing in b1",
        powers.windows(2).all(|w| w[1] > w[0]),
        format!("high variance 3x100: {powers:.4?}"),
    );
    let dt = t.elapsed();
    s.check("8 runtime", dt < Duration::from_secs(1800), format!("{dt:?}"));
}

fn relative_error(est: f64, truth: f64) -> f64 {
    (est - truth).abs() / truth
}

fn lmm(s: &mut Suite) {
    // Round trip 1: no random effects.
    let zero = LikertParams {
        beta0: 0.5,
        beta1: 0.2,
        sigma_w0: 0.0,
        sigma_w1: 0.0,
        sigma_i0: 0.0,
        sigma_i1: 0.0,
        sigma_e: 0.2,
    };
    let mut ok = 0;
    let mut worst_e = 0.0f64;
    for seed in 0..20 {
        let t = simulate_ratings(&zero, 50, 100, &mut stream(seed, 0)).unwrap();
        let f = fit_lmm(&t).unwrap();
        let re = relative_error(f.components.sigma_e, 0.2);
        worst_e = worst_e.max(re);
        if (f.beta1 - 0.2).abs() <= 3.0 * f.se_beta1 && re <= 0.05 {
            ok += 1;
        }
    }
    s.check(
        "9 round trip without random effects",
        ok == 20,
        format!("{ok}/20 fixtures pass; worst sigma_e relative error {worst_e:.4}"),
    );

    // Round trip 2: constant data.
    let rows: Vec<Rating> = (0..5u32)
        .flat_map(|w| {
            (0..8u32).flat_map(move |i| {
                [Condition::Baseline, Condition::Treatment].map(|condition| Rating {
                    worker: w,
                    item: i,
                    condition,
                    rating: 0.5,
                })
            })
        })
        .collect();
    let f = fit_lmm(&RatingsTable::new(rows).unwrap()).unwrap();
    s.check(
        "9 constant data",
        f.beta1 == 0.0 && f.components.variances() == [0.0; 5],
        format!("beta1 {}, variances {:?}", f.beta1, f.components.variances()),
    );

    // Round trip 3: high variance preset.
    let hv = Preset::HighVariance.params(0.5, 0.2);
    let truth = VarianceComponents::of(&hv);
    let names = ["sigma_w0", "sigma_w1", "sigma_i0", "sigma_i1", "sigma_e"];
    let sd = |c: &VarianceComponents| [c.sigma_w0, c.sigma_w1, c.sigma_i0, c.sigma_i1, c.sigma_e];
    let mut beta_ok = 0;
    let mut all_ok = 0;
    let mut misses = [0usize; 5];
    for seed in 0..20 {
        let t = simulate_ratings(&hv, 50, 100, &mut stream(1000 + seed, 0)).unwrap();
        let f = fit_lmm(&t).unwrap();
        let b_ok = (f.beta1 - 0.2).abs() <= 3.0 * f.se_beta1;
        beta_ok += b_ok as usize;
        let mut comps_ok = true;
        for (k, (e, tr)) in sd(&f.components).iter().zip(sd(&truth)).enumerate() {
            if relative_error(*e, tr) > 0.25 {
                misses[k] += 1;
                comps_ok = false;
            }
        }
        all_ok += (b_ok && comps_ok) as usize;
    }
    let miss_text: Vec<String> = names.iter().zip(misses).map(|(n, m)| format!("{n} {m}")).collect();
    s.check(
        "9 round trip high variance preset",
        all_ok == 20,
        format!(
            "{all_ok}/20 fixtures pass; beta1 within 3 SE in {beta_ok}/20; misses beyond 25% per component: {}",
            miss_text.join(", ")
        ),
    );

    // GLS with zero random-effect variances is OLS.
    let t = simulate_ratings(&hv, 6, 12, &mut stream(3, 0)).unwrap();
    let g = gls_fixed_effects(&t, &VarianceComponents::from_variances([0.0, 0.0, 0.0, 0.0, 0.05])).unwrap();
    let x: Vec<Vec<f64>> = t.rows().iter().map(|r| vec![r.condition.x()]).collect();
    let y: Vec<f64> = t.rows().iter().map(|r| r.rating).collect();
    let o = fit_ols(&["x"], &x, &y).unwrap();
    let gap = (g.beta0 - o.intercept).abs().max((g.beta1 - o.coefficients[0]).abs());
    s.check("9 GLS equals OLS", gap < 1e-12, format!("max coefficient gap {gap:.2e}"));

    let null = likert_power(&Preset::HighVariance.params(0.5, 0.0), 50, 100, &cfg(1000, 2)).unwrap();
    s.check(
        "9 null detection rate 50x100",
        (0.01..=0.06).contains(&null.power),
        format!("{} {:.4} (se {:.4})", null.kind.label(), null.power, null.mc_stderr),
    );
}

fn engine(s: &mut Suite) {
    let c = cfg(20_000, 3);
    let null = estimate_power(
        &MtProcess {
            spec: MtGenSpec::new(200, 0.0, 0.125, 25.8).unwrap(),
            randomizations: 999,
        },
        &c,
    )
    .unwrap();
    s.check(
        "10 exact randomization test null rate",
        within(null.power, 0.05, 3.0 * null.mc_stderr),
        format!("{} {:.4} (se {:.4})", null.kind.label(), null.power, null.mc_stderr),
    );
    let bin = estimate_power(&BinomialProcess::new(60, 0.0).unwrap(), &c).unwrap();
    let size = exact_binomial_power(60, 0.5, 0.05).unwrap().rejection_rate;
    s.info(
        "10",
        format!(
            "binomial null n=60: simulated {:.4}, exact size {size:.4} (discrete test, below alpha)",
            bin.power
        ),
    );

    let pool = |k| rayon::ThreadPoolBuilder::new().num_threads(k).build().unwrap();
    let run = || {
        let mc = mcnemar_power(0.9, 0.02, 500, McNemarVariant::ExactConditional, &cfg(5000, 9)).unwrap();
        let mt = mt_power(&MtGenSpec::new(300, 1.0, 0.125, 25.8).unwrap(), 500, &cfg(500, 9)).unwrap();
        let lk = likert_power(&Preset::LowVariance.params(0.5, 0.05), 4, 30, &cfg(200, 9)).unwrap();
        let mde = find_mde(
            &AgreementFamily {
                agreement: 0.9,
                variant: McNemarVariant::ExactConditional,
            },
            500,
            &MdeOptions::new(0.8, cfg(2000, 9)),
        )
        .unwrap();
        (mc, mt, lk, mde.effect)
    };
    let one = pool(1).install(run);
    let eight = pool(8).install(run);
    s.check(
        "10 determinism across 1 and 8 threads",
        one == eight,
        format!("McNemar {:.4}, MT {:.4}, Likert {:.4}, MDE {:.5}", one.0.power, one.1.power, one.2.power, one.3),
    );
}

fn main() {
    let mut s = Suite { failed: 0 };
    exact_binomial(&mut s);
    mcnemar(&mut s);
    prior_mde(&mut s);
    no_prior_bounds(&mut s);
    mt(&mut s);
    bleu(&mut s);
    mixture(&mut s);
    likert(&mut s);
    lmm(&mut s);
    engine(&mut s);
    println!("{} criteria checks failed", s.failed);
    if s.failed > 0 {
        std::process::exit(1);
    }
}
