//! The simulation engine: power, Type-M/Type-S, MDE search and power curves.
//!
//! A scenario supplies a [`GenerativeProcess`]: it knows its sample size and
//! hypothesized effect, draws one dataset from a random stream, computes the
//! effect statistic on it and runs a significance test. The engine repeats
//! that `reps` times and aggregates.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::Serialize;

use crate::math::sign;
use crate::rng::{self, SimRng};
use crate::significance::{check_alpha, TestResult};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub alpha: f64,
    pub reps: u64,
    pub seed: u64,
    pub compute_type_ms: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            reps: 10_000,
            seed: 1,
            compute_type_ms: true,
        }
    }
}

impl SimulationConfig {
    pub fn new(alpha: f64, reps: u64, seed: u64) -> Result<Self> {
        let c = Self {
            alpha,
            reps,
            seed,
            compute_type_ms: true,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.reps == 0 {
            return Err(Error::param("reps", "must be at least 1"));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_reps(mut self, reps: u64) -> Self {
        self.reps = reps;
        self
    }
}

/// How one repetition counts toward the aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verdict {
    /// The test rejected (used for Type-M/Type-S).
    pub significant: bool,
    /// The repetition counts toward the reported rate.
    pub detected: bool,
    /// The analysis failed (e.g. an unconverged fit); tallied separately.
    pub failed: bool,
}

pub trait GenerativeProcess: Sync {
    type Dataset;

    /// Number of items `n`.
    fn n(&self) -> u64;

    /// Hypothesized effect `e*`, in the scenario's units.
    fn effect(&self) -> f64;

    /// Draw one simulated dataset.
    fn sample(&self, rng: &mut SimRng) -> Result<Self::Dataset>;

    /// The effect statistic `E` on a dataset.
    fn statistic(&self, data: &Self::Dataset) -> f64;

    /// Significance test on a dataset. Randomization tests draw from `rng`,
    /// which continues the repetition's stream.
    fn test(&self, data: &Self::Dataset, rng: &mut SimRng) -> Result<TestResult>;

    /// Default rule: significant when `p <= alpha`; detected when also the
    /// observed effect has the sign of `e*` (no sign check when `e* = 0`).
    fn verdict(&self, observed: f64, result: &TestResult, alpha: f64) -> Verdict {
        let significant = result.p_value <= alpha;
        let e = self.effect();
        let detected = significant && (e == 0.0 || sign(observed) == sign(e));
        Verdict {
            significant,
            detected,
            failed: false,
        }
    }
}

/// What the reported rate measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    Power,
    /// `e* = 0`: the rate is the rejection rate under the null.
    TypeIRate,
}

impl RateKind {
    pub fn label(self) -> &'static str {
        match self {
            RateKind::Power => "power",
            RateKind::TypeIRate => "type-I rate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerReport {
    pub kind: RateKind,
    pub power: f64,
    pub mc_stderr: f64,
    pub type_m: Option<f64>,
    pub type_s: Option<f64>,
    pub n_significant: u64,
    pub n_detected: u64,
    pub n_failed: u64,
    pub n: u64,
    pub effect: f64,
    pub alpha: f64,
    pub reps: u64,
    pub seed: u64,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
struct RepOutcome {
    verdict: Verdict,
    observed: f64,
}

fn one_rep<P: GenerativeProcess>(process: &P, config: &SimulationConfig, rep: u64) -> Result<RepOutcome> {
    let mut rng = rng::stream(config.seed, rep);
    let wrap = |e: Error| Error::Rep {
        rep,
        source: alloc::boxed::Box::new(e),
    };
    let data = process.sample(&mut rng).map_err(wrap)?;
    let observed = process.statistic(&data);
    let result = process.test(&data, &mut rng).map_err(wrap)?;
    Ok(RepOutcome {
        verdict: process.verdict(observed, &result, config.alpha),
        observed,
    })
}

fn run_reps<P: GenerativeProcess>(process: &P, config: &SimulationConfig) -> Result<Vec<RepOutcome>> {
    let reps = config.reps as usize;
    #[cfg(feature = "parallel")]
    let results: Vec<Result<RepOutcome>> = {
        use rayon::prelude::*;
        (0..reps)
            .into_par_iter()
            .map(|i| one_rep(process, config, i as u64))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<RepOutcome>> = (0..reps).map(|i| one_rep(process, config, i as u64)).collect();
    // First failure by repetition index, independent of scheduling.
    results.into_iter().collect()
}

fn aggregate<P: GenerativeProcess>(
    process: &P,
    config: &SimulationConfig,
    outcomes: &[RepOutcome],
    type_ms: bool,
) -> PowerReport {
    let e_star = process.effect();
    let r = outcomes.len() as f64;
    let mut n_sig = 0u64;
    let mut n_det = 0u64;
    let mut n_failed = 0u64;
    let mut wrong_sign = 0u64;
    let mut ratio_sum = 0.0;
    for o in outcomes {
        if o.verdict.failed {
            n_failed += 1;
        }
        if o.verdict.detected {
            n_det += 1;
        }
        if o.verdict.significant {
            n_sig += 1;
            if e_star != 0.0 {
                if sign(o.observed) != sign(e_star) {
                    wrong_sign += 1;
                }
                ratio_sum += o.observed.abs() / e_star.abs();
            }
        }
    }
    let power = n_det as f64 / r;
    let mut diagnostics = Vec::new();
    let (mut type_m, mut type_s) = (None, None);
    if type_ms && e_star != 0.0 {
        if n_sig == 0 {
            diagnostics.push(String::from(
                "no significant repetitions; Type-M and Type-S are undefined",
            ));
        } else {
            type_m = Some(ratio_sum / n_sig as f64);
            type_s = Some(wrong_sign as f64 / n_sig as f64);
            if n_sig < 30 {
                diagnostics.push(format!(
                    "only {n_sig} significant repetitions; Type-M and Type-S are unstable"
                ));
            }
        }
    }
    if n_failed > 0 {
        diagnostics.push(format!(
            "{n_failed} repetitions failed to converge and were counted as non-detections"
        ));
    }
    PowerReport {
        kind: if e_star == 0.0 {
            RateKind::TypeIRate
        } else {
            RateKind::Power
        },
        power,
        mc_stderr: libm::sqrt(power * (1.0 - power) / r),
        type_m,
        type_s,
        n_significant: n_sig,
        n_detected: n_det,
        n_failed,
        n: process.n(),
        effect: e_star,
        alpha: config.alpha,
        reps: config.reps,
        seed: config.seed,
        diagnostics,
    }
}

fn check_n<P: GenerativeProcess>(process: &P) -> Result<()> {
    if process.n() == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    Ok(())
}

/// Estimate power (or the type-I rate when `e* = 0`) by simulation.
///
/// The result depends only on the process, `seed` and `reps`; with the
/// `parallel` feature repetitions run concurrently but are folded in
/// repetition order.
pub fn estimate_power<P: GenerativeProcess>(process: &P, config: &SimulationConfig) -> Result<PowerReport> {
    config.validate()?;
    check_n(process)?;
    let outcomes = run_reps(process, config)?;
    Ok(aggregate(process, config, &outcomes, config.compute_type_ms))
}

/// Like [`estimate_power`] with Type-M and Type-S always populated (when
/// any repetition is significant).
pub fn estimate_type_m_s<P: GenerativeProcess>(process: &P, config: &SimulationConfig) -> Result<PowerReport> {
    if process.effect() == 0.0 {
        return Err(Error::param("effect", "Type-M/Type-S need a nonzero effect"));
    }
    let mut c = *config;
    c.compute_type_ms = true;
    estimate_power(process, &c)
}

/// A one-parameter family of processes indexed by effect size.
pub trait ProcessFamily: Sync {
    type Process: GenerativeProcess;

    fn at(&self, n: u64, effect: f64) -> Result<Self::Process>;

    /// Largest feasible effect at `n`.
    fn max_effect(&self, n: u64) -> f64;

    /// Search lower bound (never evaluated).
    fn min_effect(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdeOptions {
    pub target_power: f64,
    /// Absolute bisection tolerance in effect units.
    pub tolerance: f64,
    pub config: SimulationConfig,
}

impl MdeOptions {
    pub fn new(target_power: f64, config: SimulationConfig) -> Self {
        Self {
            target_power,
            tolerance: 0.0005,
            config,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MdeResult {
    pub effect: f64,
    /// Power at `effect` under the search seed.
    pub power: f64,
    /// Re-estimate at `effect` with an independent seed.
    pub verification: PowerReport,
    /// `(effect, power)` for every candidate evaluated, in search order.
    pub evaluations: Vec<(f64, f64)>,
    pub diagnostics: Vec<String>,
}

/// Smallest effect whose estimated power reaches the target, by bisection
/// between the family's lower bound and its maximum feasible effect.
///
/// Every candidate reuses the same seed, so power estimates at neighbouring
/// effects share their random numbers and the crossing is located with far
/// less noise than independent runs would give.
pub fn find_mde<F: ProcessFamily>(family: &F, n: u64, opts: &MdeOptions) -> Result<MdeResult> {
    let config = SimulationConfig {
        compute_type_ms: false,
        ..opts.config
    };
    config.validate()?;
    if !(opts.target_power > config.alpha && opts.target_power < 1.0) {
        return Err(Error::param("target_power", "must lie in (alpha, 1)"));
    }
    if !(opts.tolerance > 0.0) {
        return Err(Error::param("tolerance", "must be positive"));
    }
    let mut lo = family.min_effect();
    let mut hi = family.max_effect(n);
    if !(hi > lo) {
        return Err(Error::Infeasible(format!(
            "no feasible effect range at n = {n} (maximum effect {hi})"
        )));
    }
    let mut evaluations = Vec::new();
    let mut power_at = |e: f64| -> Result<f64> {
        let p = estimate_power(&family.at(n, e)?, &config)?.power;
        evaluations.push((e, p));
        Ok(p)
    };
    let mut hi_power = power_at(hi)?;
    if hi_power < opts.target_power {
        return Err(Error::InfeasibleMde {
            max_effect: hi,
            power: hi_power,
            target: opts.target_power,
        });
    }
    while hi - lo > opts.tolerance {
        let mid = 0.5 * (lo + hi);
        let p = power_at(mid)?;
        if p >= opts.target_power {
            hi = mid;
            hi_power = p;
        } else {
            lo = mid;
        }
    }

    let mut diagnostics = Vec::new();
    let mut sorted = evaluations.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let r = config.reps as f64;
    for w in sorted.windows(2) {
        let (p0, p1) = (w[0].1, w[1].1);
        let se = libm::sqrt((p0 * (1.0 - p0) + p1 * (1.0 - p1)) / r).max(1.0 / r);
        if p1 < p0 - 2.0 * se {
            diagnostics.push(format!(
                "power not monotone in effect: {:.4} at {:.5} but {:.4} at {:.5}",
                p0, w[0].0, p1, w[1].0
            ));
        }
    }

    let verify_config = SimulationConfig {
        seed: rng::derive_seed(config.seed, "mde-verify"),
        compute_type_ms: opts.config.compute_type_ms,
        ..config
    };
    let verification = estimate_power(&family.at(n, hi)?, &verify_config)?;
    if verification.power < opts.target_power - 2.0 * verification.mc_stderr {
        diagnostics.push(format!(
            "independent verification gives power {:.4} at the reported MDE",
            verification.power
        ));
    }
    Ok(MdeResult {
        effect: hi,
        power: hi_power,
        verification,
        evaluations,
        diagnostics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveCell {
    pub n: u64,
    pub effect: f64,
    pub report: Option<PowerReport>,
    pub error: Option<String>,
}

/// Power over an `(n, effect)` grid; cells are ordered by `n` (outer) then
/// effect (inner), as given.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerCurve {
    pub n_grid: Vec<u64>,
    pub effect_grid: Vec<f64>,
    pub cells: Vec<CurveCell>,
}

pub fn power_curve<F: ProcessFamily>(
    family: &F,
    n_grid: &[u64],
    effect_grid: &[f64],
    config: &SimulationConfig,
) -> Result<PowerCurve> {
    config.validate()?;
    if n_grid.is_empty() || effect_grid.is_empty() {
        return Err(Error::param("grid", "grids must be non-empty"));
    }
    for (i, a) in n_grid.iter().enumerate() {
        if n_grid[..i].contains(a) {
            return Err(Error::param("n_grid", format!("duplicate value {a}")));
        }
    }
    for (i, a) in effect_grid.iter().enumerate() {
        if effect_grid[..i].iter().any(|b| b.to_bits() == a.to_bits()) {
            return Err(Error::param("effect_grid", format!("duplicate value {a}")));
        }
    }
    let mut cells = Vec::with_capacity(n_grid.len() * effect_grid.len());
    for &n in n_grid {
        for &effect in effect_grid {
            let r = family.at(n, effect).and_then(|p| estimate_power(&p, config));
            let (report, error) = match r {
                Ok(rep) => (Some(rep), None),
                Err(e) => (None, Some(format!("{e}"))),
            };
            cells.push(CurveCell {
                n,
                effect,
                report,
                error,
            });
        }
    }
    Ok(PowerCurve {
        n_grid: n_grid.to_vec(),
        effect_grid: effect_grid.to_vec(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binomial::{BinomialFamily, BinomialProcess};

    #[test]
    fn same_seed_same_report() {
        let p = BinomialProcess::new(40, 0.1).unwrap();
        let c = SimulationConfig::new(0.05, 2000, 11).unwrap();
        assert_eq!(estimate_power(&p, &c).unwrap(), estimate_power(&p, &c).unwrap());
    }

    #[test]
    fn zero_effect_is_labelled_type_one_rate() {
        let p = BinomialProcess::new(40, 0.0).unwrap();
        let r = estimate_power(&p, &SimulationConfig::new(0.05, 500, 2).unwrap()).unwrap();
        assert_eq!(r.kind, RateKind::TypeIRate);
        assert!(r.type_m.is_none());
    }

    #[test]
    fn impossible_rejection_gives_zero_power() {
        // n = 3: the smallest two-sided exact p is 0.25.
        let p = BinomialProcess::new(3, 0.3).unwrap();
        let r = estimate_power(&p, &SimulationConfig::new(0.01, 1000, 1).unwrap()).unwrap();
        assert_eq!(r.power, 0.0);
        assert_eq!(r.type_m, None);
        assert!(!r.diagnostics.is_empty());
    }

    #[test]
    fn invalid_config_rejected() {
        let p = BinomialProcess::new(10, 0.1).unwrap();
        let mut c = SimulationConfig::default();
        c.reps = 0;
        assert!(estimate_power(&p, &c).is_err());
        c.reps = 10;
        c.alpha = 1.0;
        assert!(estimate_power(&p, &c).is_err());
    }

    #[test]
    fn single_cell_curve_equals_direct_estimate() {
        let fam = BinomialFamily;
        let c = SimulationConfig::new(0.05, 1000, 5).unwrap();
        let curve = power_curve(&fam, &[50], &[0.1], &c).unwrap();
        assert_eq!(curve.cells.len(), 1);
        let direct = estimate_power(&BinomialProcess::new(50, 0.1).unwrap(), &c).unwrap();
        assert_eq!(curve.cells[0].report.as_ref().unwrap(), &direct);
    }

    #[test]
    fn curve_records_cell_errors_in_place() {
        let fam = BinomialFamily;
        let c = SimulationConfig::new(0.05, 200, 5).unwrap();
        let curve = power_curve(&fam, &[20], &[0.1, 0.7, 0.2], &c).unwrap();
        assert_eq!(curve.cells.len(), 3);
        assert!(curve.cells[0].report.is_some());
        assert!(curve.cells[1].error.is_some());
        assert!(curve.cells[2].report.is_some());
    }

    #[test]
    fn curve_rejects_duplicate_grid_points() {
        let c = SimulationConfig::new(0.05, 10, 5).unwrap();
        assert!(power_curve(&BinomialFamily, &[20, 20], &[0.1], &c).is_err());
        assert!(power_curve(&BinomialFamily, &[], &[0.1], &c).is_err());
    }

    #[test]
    fn mde_infeasible_at_tiny_n() {
        let c = SimulationConfig::new(0.05, 500, 5).unwrap();
        let err = find_mde(&BinomialFamily, 4, &MdeOptions::new(0.8, c)).unwrap_err();
        assert!(matches!(err, Error::InfeasibleMde { .. }));
    }
}
