use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::randomization::{count_extreme, SubsetSums};
use crate::rng::{self, laplace, uniform, SimRng};
use crate::significance::TestResult;
use crate::sim::{estimate_power, GenerativeProcess, PowerReport, ProcessFamily, SimulationConfig};
use crate::{Error, Result};

/// Delta-Laplace generator for a comparison of two MT systems over `n`
/// sentences whose true BLEU difference is `delta_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MtGenSpec {
    pub n: u64,
    pub delta_b: f64,
    pub p0: f64,
    pub b0: f64,
}

impl MtGenSpec {
    pub fn new(n: u64, delta_b: f64, p0: f64, b0: f64) -> Result<Self> {
        let s = Self { n, delta_b, p0, b0 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.p0) {
            return Err(Error::param("p0", "must lie in [0, 1]"));
        }
        if !(self.b0 > 0.0 && self.b0.is_finite()) {
            return Err(Error::param("b0", "must be positive"));
        }
        if !self.delta_b.is_finite() {
            return Err(Error::param("delta_b", "must be finite"));
        }
        if self.p0 == 1.0 && self.delta_b != 0.0 {
            return Err(Error::Infeasible(alloc::string::String::from(
                "p0 = 1 makes every swap effect zero, so delta_b must be 0",
            )));
        }
        Ok(())
    }

    /// Laplace location `μ = -2 Δ_B / (n (1 - P0))`.
    pub fn mu(&self) -> f64 {
        if self.p0 >= 1.0 {
            0.0
        } else {
            -2.0 * self.delta_b / (self.n as f64 * (1.0 - self.p0))
        }
    }

    /// Laplace scale `b = b0 / n`.
    pub fn scale(&self) -> f64 {
        self.b0 / self.n as f64
    }
}

/// One simulated vector of swap effects.
pub fn simulate_mt_dataset<R: Rng + ?Sized>(spec: &MtGenSpec, rng: &mut R) -> Result<Vec<f64>> {
    spec.validate()?;
    let (mu, b) = (spec.mu(), spec.scale());
    Ok((0..spec.n)
        .map(|_| {
            if uniform(rng) < spec.p0 {
                0.0
            } else {
                laplace(rng, mu, b)
            }
        })
        .collect())
}

/// Observed BLEU difference implied by swap effects: `-Σδ / 2`.
pub fn observed_delta(deltas: &[f64]) -> f64 {
    -0.5 * deltas.iter().sum::<f64>()
}

/// Randomization test treating swap effects as additive: exchanging subset
/// `S` moves the statistic from `Δ̂_B` to `Δ̂_B + Σ_{i∈S} δ_i`. Two-sided
/// with the add-one correction.
pub fn mt_randomization_test(deltas: &[f64], r: u64, seed: u64) -> Result<TestResult> {
    mt_randomization_test_with(deltas, r, &mut rng::stream(seed, 0))
}

pub fn mt_randomization_test_with(deltas: &[f64], r: u64, rng: &mut SimRng) -> Result<TestResult> {
    if r < 100 {
        return Err(Error::param("R", "at least 100 randomizations are required"));
    }
    let observed = observed_delta(deltas);
    let sums = SubsetSums::new(deltas);
    let count = count_extreme(&sums, r, rng, observed, sums.abs_total(), |s| observed + s);
    let p = (1 + count) as f64 / (r + 1) as f64;
    Ok(TestResult::new(p, observed, observed, "mt_randomization"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MtProcess {
    pub spec: MtGenSpec,
    pub randomizations: u64,
}

impl GenerativeProcess for MtProcess {
    type Dataset = Vec<f64>;

    fn n(&self) -> u64 {
        self.spec.n
    }

    fn effect(&self) -> f64 {
        self.spec.delta_b
    }

    fn sample(&self, rng: &mut SimRng) -> Result<Vec<f64>> {
        simulate_mt_dataset(&self.spec, rng)
    }

    fn statistic(&self, deltas: &Vec<f64>) -> f64 {
        observed_delta(deltas)
    }

    fn test(&self, deltas: &Vec<f64>, rng: &mut SimRng) -> Result<TestResult> {
        mt_randomization_test_with(deltas, self.randomizations, rng)
    }
}

/// Power of the swap randomization test under the Delta-Laplace generator.
pub fn mt_power(spec: &MtGenSpec, randomizations: u64, config: &SimulationConfig) -> Result<PowerReport> {
    spec.validate()?;
    if randomizations < 100 {
        return Err(Error::param("R", "at least 100 randomizations are required"));
    }
    estimate_power(
        &MtProcess {
            spec: *spec,
            randomizations,
        },
        config,
    )
}

/// MT processes at fixed `(P0, b0)`, indexed by the BLEU difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MtFamily {
    pub p0: f64,
    pub b0: f64,
    pub randomizations: u64,
    /// Upper end of the search in BLEU points.
    pub max_delta_b: f64,
}

impl MtFamily {
    pub fn new(p0: f64, b0: f64, randomizations: u64) -> Self {
        Self {
            p0,
            b0,
            randomizations,
            max_delta_b: 20.0,
        }
    }
}

impl ProcessFamily for MtFamily {
    type Process = MtProcess;

    fn at(&self, n: u64, effect: f64) -> Result<MtProcess> {
        if self.randomizations < 100 {
            return Err(Error::param("R", "at least 100 randomizations are required"));
        }
        Ok(MtProcess {
            spec: MtGenSpec::new(n, effect, self.p0, self.b0)?,
            randomizations: self.randomizations,
        })
    }

    fn max_effect(&self, _n: u64) -> f64 {
        self.max_delta_b
    }
}
