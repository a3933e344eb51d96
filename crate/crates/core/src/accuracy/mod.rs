//! Paired classifier comparisons: contingency model, McNemar power, MDE
//! families, parameter estimation, no-prior bounds and F1 power.

mod f1;
mod lachenbruch;
mod predictions;

pub use f1::{f1_power_sim, f1_randomization_test, F1Average, F1Dataset, F1Process, PerClassContingency};
pub use lachenbruch::{lachenbruch_mde, Discordance, DiscordanceFamily, LachenbruchBounds, PowerMethod};
pub use predictions::{estimate_params, simulate_pairs, CellCounts, PairedPredictions, ParamEstimate};

use alloc::format;
use serde::{Deserialize, Serialize};

use crate::math::binom_quantile;
use crate::priors::{predict_overlap, PriorBundle};
use crate::rng::{uniform, SimRng};
use crate::significance::{mcnemar_test, McNemarVariant, TestResult};
use crate::sim::{estimate_power, GenerativeProcess, PowerReport, ProcessFamily, SimulationConfig};
use crate::{Error, Result};

const CELL_TOL: f64 = 1e-12;

/// Joint outcome probabilities of two classifiers on one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContingencySpec {
    pub p_both_correct: f64,
    pub p_only_m1: f64,
    pub p_only_m2: f64,
    pub p_both_incorrect: f64,
}

impl ContingencySpec {
    pub fn new(p_both_correct: f64, p_only_m1: f64, p_only_m2: f64, p_both_incorrect: f64) -> Result<Self> {
        let s = Self {
            p_both_correct,
            p_only_m1,
            p_only_m2,
            p_both_incorrect,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let cells = self.cells();
        if cells.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(Error::param("contingency", "cells must be finite and non-negative"));
        }
        let sum: f64 = cells.iter().sum();
        if (sum - 1.0).abs() > CELL_TOL {
            return Err(Error::param("contingency", format!("cells sum to {sum}, not 1")));
        }
        Ok(())
    }

    /// Cells in the order both correct, only m1, only m2, both incorrect.
    pub fn cells(&self) -> [f64; 4] {
        [self.p_both_correct, self.p_only_m1, self.p_only_m2, self.p_both_incorrect]
    }

    /// Agreement rate `P_a`.
    pub fn agreement(&self) -> f64 {
        self.p_both_correct + self.p_both_incorrect
    }

    /// `Δ_acc = acc(m2) - acc(m1)`.
    pub fn delta_acc(&self) -> f64 {
        self.p_only_m2 - self.p_only_m1
    }

    pub fn discordance(&self) -> f64 {
        self.p_only_m1 + self.p_only_m2
    }

    pub fn m1_accuracy(&self) -> f64 {
        self.p_both_correct + self.p_only_m1
    }

    pub fn m2_accuracy(&self) -> f64 {
        self.p_both_correct + self.p_only_m2
    }

    /// Odds ratio `p_only_m2 / p_only_m1`.
    pub fn odds_ratio(&self) -> f64 {
        self.p_only_m2 / self.p_only_m1
    }
}

fn snap(x: f64) -> f64 {
    if x < 0.0 && x > -CELL_TOL {
        0.0
    } else {
        x
    }
}

/// Build the contingency table implied by an agreement rate and an accuracy
/// difference. With a baseline (model 1) accuracy the diagonal is split to
/// match it; without one the agreement mass is split evenly, which McNemar's
/// test never looks at.
pub fn contingency_from(pa: f64, delta_acc: f64, baseline_acc: Option<f64>) -> Result<ContingencySpec> {
    if !(0.0..=1.0).contains(&pa) {
        return Err(Error::param("agreement", "must lie in [0, 1]"));
    }
    if !delta_acc.is_finite() {
        return Err(Error::param("delta", "must be finite"));
    }
    let disc = 1.0 - pa;
    if delta_acc.abs() > disc + CELL_TOL {
        return Err(Error::InfeasibleEffect {
            effect: delta_acc,
            agreement: pa,
        });
    }
    let only_m2 = snap((disc + delta_acc) / 2.0).max(0.0);
    let only_m1 = snap((disc - delta_acc) / 2.0).max(0.0);
    let (both_correct, both_incorrect) = match baseline_acc {
        Some(b) => {
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::param("baseline", "must lie in [0, 1]"));
            }
            let bc = snap(b - only_m1);
            let bi = snap(pa - bc);
            if !(0.0..=1.0).contains(&bc) || !(0.0..=1.0).contains(&bi) {
                return Err(Error::Infeasible(format!(
                    "baseline accuracy {b} is incompatible with agreement {pa} and difference {delta_acc}"
                )));
            }
            (bc, bi)
        }
        None => (pa / 2.0, pa / 2.0),
    };
    ContingencySpec::new(both_correct, only_m1, only_m2, both_incorrect)
}

/// Multinomial contingency process tested with McNemar's test. The effect is
/// `Δ_acc`; the effect statistic is the observed accuracy difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McNemarProcess {
    pub spec: ContingencySpec,
    pub n: u64,
    pub variant: McNemarVariant,
}

impl McNemarProcess {
    pub fn new(spec: ContingencySpec, n: u64, variant: McNemarVariant) -> Result<Self> {
        spec.validate()?;
        if n == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        Ok(Self { spec, n, variant })
    }
}

impl GenerativeProcess for McNemarProcess {
    /// `(n_only_m1, n_only_m2)`.
    type Dataset = (u64, u64);

    fn n(&self) -> u64 {
        self.n
    }

    fn effect(&self) -> f64 {
        self.spec.delta_acc()
    }

    fn sample(&self, rng: &mut SimRng) -> Result<(u64, u64)> {
        // Discordant total, then its split; both by inversion so a larger
        // p_only_m2 never yields fewer model-2 wins under the same stream.
        let d = self.spec.discordance();
        let u1 = uniform(rng);
        let u2 = uniform(rng);
        let m = binom_quantile(u1, self.n, d);
        let share = if d > 0.0 { (self.spec.p_only_m2 / d).min(1.0) } else { 0.0 };
        let k2 = binom_quantile(u2, m, share);
        Ok((m - k2, k2))
    }

    fn statistic(&self, &(k1, k2): &(u64, u64)) -> f64 {
        (k2 as f64 - k1 as f64) / self.n as f64
    }

    fn test(&self, &(k1, k2): &(u64, u64), _rng: &mut SimRng) -> Result<TestResult> {
        mcnemar_test(k1, k2, self.variant, Some(self.n))
    }
}

/// Power of McNemar's test for agreement `pa` and accuracy difference
/// `delta_acc` at `n` paired instances.
pub fn mcnemar_power(
    pa: f64,
    delta_acc: f64,
    n: u64,
    variant: McNemarVariant,
    config: &SimulationConfig,
) -> Result<PowerReport> {
    let spec = contingency_from(pa, delta_acc, None)?;
    estimate_power(&McNemarProcess::new(spec, n, variant)?, config)
}

/// McNemar processes at a fixed agreement rate, indexed by `Δ_acc`.
#[derive(Debug, Clone, Copy)]
pub struct AgreementFamily {
    pub agreement: f64,
    pub variant: McNemarVariant,
}

impl ProcessFamily for AgreementFamily {
    type Process = McNemarProcess;

    fn at(&self, n: u64, effect: f64) -> Result<McNemarProcess> {
        McNemarProcess::new(contingency_from(self.agreement, effect, None)?, n, self.variant)
    }

    fn max_effect(&self, _n: u64) -> f64 {
        1.0 - self.agreement
    }
}

/// McNemar processes whose agreement rate comes from a regression prior:
/// for an improvement `Δ` over `baseline`, `P_a` is the prior's predicted
/// overlap at `(baseline, Δ)`.
#[derive(Debug, Clone)]
pub struct PriorFamily {
    pub bundle: PriorBundle,
    pub baseline: f64,
    pub variant: McNemarVariant,
}

impl PriorFamily {
    pub fn agreement_at(&self, effect: f64) -> f64 {
        predict_overlap(self.baseline, effect, &self.bundle).value
    }
}

impl ProcessFamily for PriorFamily {
    type Process = McNemarProcess;

    fn at(&self, n: u64, effect: f64) -> Result<McNemarProcess> {
        let pa = self.agreement_at(effect);
        McNemarProcess::new(contingency_from(pa, effect, None)?, n, self.variant)
    }

    fn max_effect(&self, _n: u64) -> f64 {
        1.0 - self.baseline
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contingency_cells_from_agreement() {
        let s = contingency_from(0.9, 0.02, None).unwrap();
        assert!((s.p_only_m2 - 0.06).abs() < 1e-15);
        assert!((s.p_only_m1 - 0.04).abs() < 1e-15);
        let s = contingency_from(1.0, 0.0, None).unwrap();
        assert_eq!((s.p_only_m1, s.p_only_m2), (0.0, 0.0));
    }

    #[test]
    fn infeasible_effect_message() {
        let e = contingency_from(0.9, 0.2, None).unwrap_err();
        assert_eq!(alloc::format!("{e}"), "effect exceeds 1 - agreement");
        assert!(e.is_parameter_error());
    }

    #[test]
    fn baseline_sets_diagonal() {
        let s = contingency_from(0.9, 0.02, Some(0.7)).unwrap();
        assert!((s.m1_accuracy() - 0.7).abs() < 1e-15);
        assert!((s.m2_accuracy() - 0.72).abs() < 1e-15);
        assert!((s.agreement() - 0.9).abs() < 1e-15);
        assert!(contingency_from(0.9, 0.02, Some(0.99)).is_err());
    }

    #[test]
    fn sampled_counts_respect_total() {
        let p = McNemarProcess::new(contingency_from(0.8, 0.05, None).unwrap(), 300, McNemarVariant::default()).unwrap();
        let mut rng = crate::rng::stream(1, 1);
        for _ in 0..100 {
            let (a, b) = p.sample(&mut rng).unwrap();
            assert!(a + b <= 300);
        }
    }
}
