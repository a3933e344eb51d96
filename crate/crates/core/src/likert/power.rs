use alloc::string::String;
use serde::Serialize;

use super::{fit_lmm, simulate_ratings, LikertParams, LmmFit, RatingsTable};
use crate::math::norm_sf;
use crate::rng::SimRng;
use crate::significance::TestResult;
use crate::sim::{estimate_power, GenerativeProcess, PowerReport, ProcessFamily, SimulationConfig, Verdict};
use crate::{Error, Result};

/// A positive effect is detected when `t > 1.96` (strictly).
pub const DETECTION_THRESHOLD: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Detection {
    pub detected: bool,
    pub diagnostic: Option<String>,
}

/// Detection rule: only significant positive effects count.
pub fn lmm_detect(fit: &LmmFit) -> Detection {
    if !fit.converged {
        return Detection {
            detected: false,
            diagnostic: Some(String::from("fit did not converge; counted as no detection")),
        };
    }
    Detection {
        detected: fit.t_beta1 > DETECTION_THRESHOLD,
        diagnostic: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikertProcess {
    pub params: LikertParams,
    pub n_workers: usize,
    pub n_items: usize,
}

impl LikertProcess {
    pub fn new(params: LikertParams, n_workers: usize, n_items: usize) -> Result<Self> {
        params.validate()?;
        if n_workers < 2 || n_items < 2 {
            return Err(Error::param("design", "need at least 2 workers and 2 items"));
        }
        Ok(Self {
            params,
            n_workers,
            n_items,
        })
    }
}

impl GenerativeProcess for LikertProcess {
    type Dataset = RatingsTable;

    fn n(&self) -> u64 {
        self.n_items as u64
    }

    fn effect(&self) -> f64 {
        self.params.beta1
    }

    fn sample(&self, rng: &mut SimRng) -> Result<RatingsTable> {
        simulate_ratings(&self.params, self.n_workers, self.n_items, rng)
    }

    /// Difference of condition means (equal to `β̂1` for crossed tables).
    fn statistic(&self, table: &RatingsTable) -> f64 {
        table.condition_difference()
    }

    fn test(&self, table: &RatingsTable, _rng: &mut SimRng) -> Result<TestResult> {
        let fit = fit_lmm(table)?;
        let p = 2.0 * norm_sf(fit.t_beta1.abs());
        let mut r = TestResult::new(p, fit.t_beta1, fit.beta1, "lmm_wald_t");
        r.degenerate = !fit.converged;
        Ok(r)
    }

    fn verdict(&self, _observed: f64, result: &TestResult, _alpha: f64) -> Verdict {
        let ok = !result.degenerate;
        Verdict {
            significant: ok && result.statistic.abs() > DETECTION_THRESHOLD,
            detected: ok && result.statistic > DETECTION_THRESHOLD,
            failed: !ok,
        }
    }
}

/// Proportion of simulated experiments in which the fitted model detects a
/// positive effect. `config.alpha` is ignored: detection uses the fixed
/// `t > 1.96` rule.
pub fn likert_power(params: &LikertParams, n_workers: usize, n_items: usize, config: &SimulationConfig) -> Result<PowerReport> {
    if config.reps < 200 {
        return Err(Error::param("reps", "at least 200 repetitions are required"));
    }
    estimate_power(&LikertProcess::new(*params, n_workers, n_items)?, config)
}

/// Likert processes at a fixed number of workers, indexed by `β1`; `n` is
/// the number of items. Effects are searched up to 1 (the full rating
/// scale).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikertFamily {
    pub params: LikertParams,
    pub n_workers: usize,
}

impl ProcessFamily for LikertFamily {
    type Process = LikertProcess;

    fn at(&self, n: u64, effect: f64) -> Result<LikertProcess> {
        LikertProcess::new(self.params.with_effect(effect), self.n_workers, n as usize)
    }

    fn max_effect(&self, _n: u64) -> f64 {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likert::{FitMethod, VarianceComponents};

    fn fit_with_t(t: f64, converged: bool) -> LmmFit {
        LmmFit {
            beta0: 0.5,
            beta1: t * 0.01,
            se_beta0: 0.01,
            se_beta1: 0.01,
            components: VarianceComponents::from_variances([0.0; 5]),
            t_beta1: t,
            log_likelihood: 0.0,
            converged,
            method: FitMethod::Crossed,
            evaluations: 0,
            warnings: alloc::vec::Vec::new(),
        }
    }

    #[test]
    fn detection_rule() {
        assert!(lmm_detect(&fit_with_t(2.5, true)).detected);
        assert!(!lmm_detect(&fit_with_t(-3.0, true)).detected);
        assert!(!lmm_detect(&fit_with_t(1.96, true)).detected);
        let d = lmm_detect(&fit_with_t(5.0, false));
        assert!(!d.detected);
        assert!(d.diagnostic.is_some());
    }
}
