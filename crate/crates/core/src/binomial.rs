//! One-sample binomial process: `k ~ Binomial(n, 1/2 + e*)` tested against
//! `p0 = 1/2`. Also serves head-to-head preference judgments, where `k`
//! counts the judgments won by the second system.

use serde::Serialize;

use crate::math::{binom_ln_pmf, binom_quantile, sign};
use crate::rng::{uniform, SimRng};
use crate::significance::{binom_test, check_alpha, TestResult};
use crate::sim::{GenerativeProcess, ProcessFamily};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomialProcess {
    n: u64,
    effect: f64,
}

impl BinomialProcess {
    pub fn new(n: u64, effect: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        if !(effect.abs() <= 0.5) {
            return Err(Error::param("effect", "success probability 0.5 + effect must lie in [0, 1]"));
        }
        Ok(Self { n, effect })
    }

    pub fn from_prob(n: u64, prob: f64) -> Result<Self> {
        Self::new(n, prob - 0.5)
    }

    pub fn prob(&self) -> f64 {
        0.5 + self.effect
    }
}

impl GenerativeProcess for BinomialProcess {
    type Dataset = u64;

    fn n(&self) -> u64 {
        self.n
    }

    fn effect(&self) -> f64 {
        self.effect
    }

    fn sample(&self, rng: &mut SimRng) -> Result<u64> {
        Ok(binom_quantile(uniform(rng), self.n, self.prob()))
    }

    fn statistic(&self, k: &u64) -> f64 {
        *k as f64 / self.n as f64 - 0.5
    }

    fn test(&self, k: &u64, _rng: &mut SimRng) -> Result<TestResult> {
        binom_test(*k, self.n, 0.5)
    }
}

/// Binomial processes indexed by `e*`; the maximum effect is 0.5.
#[derive(Debug, Clone, Copy, Default)]
pub struct BinomialFamily;

impl ProcessFamily for BinomialFamily {
    type Process = BinomialProcess;

    fn at(&self, n: u64, effect: f64) -> Result<BinomialProcess> {
        BinomialProcess::new(n, effect)
    }

    fn max_effect(&self, _n: u64) -> f64 {
        0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactPower {
    pub power: f64,
    /// Rejection probability regardless of sign.
    pub rejection_rate: f64,
    pub type_m: Option<f64>,
    pub type_s: Option<f64>,
}

/// Power of the two-sided exact binomial test by enumerating every outcome.
pub fn exact_binomial_power(n: u64, prob: f64, alpha: f64) -> Result<ExactPower> {
    check_alpha(alpha)?;
    let proc_ = BinomialProcess::from_prob(n, prob)?;
    let e_star = proc_.effect;
    let (mut power, mut reject, mut wrong, mut ratio) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..=n {
        let p = binom_test(k, n, 0.5)?.p_value;
        if p > alpha {
            continue;
        }
        let w = libm::exp(binom_ln_pmf(k, n, prob));
        let e = proc_.statistic(&k);
        reject += w;
        if e_star == 0.0 || sign(e) == sign(e_star) {
            power += w;
        } else {
            wrong += w;
        }
        if e_star != 0.0 {
            ratio += w * e.abs() / e_star.abs();
        }
    }
    let (type_m, type_s) = if e_star != 0.0 && reject > 0.0 {
        (Some(ratio / reject), Some(wrong / reject))
    } else {
        (None, None)
    };
    Ok(ExactPower {
        power,
        rejection_rate: reject,
        type_m,
        type_s,
    })
}
