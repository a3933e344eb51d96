//! Significance tests shared by every scenario.

use alloc::vec::Vec;
use serde::Serialize;

use crate::math::{binom_cdf, binom_half_cdf, binom_sf, chi_square_sf, norm_cdf, norm_ppf, sign};
use crate::randomization::{count_extreme, SubsetSums};
use crate::rng::{self, SimRng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub p_value: f64,
    pub statistic: f64,
    pub observed_effect: f64,
    pub effect_sign: i8,
    pub test_name: &'static str,
    /// Set when the test had nothing to work with (e.g. no discordant pairs).
    pub degenerate: bool,
}

impl TestResult {
    pub fn new(p_value: f64, statistic: f64, observed_effect: f64, test_name: &'static str) -> Self {
        Self {
            p_value: p_value.clamp(0.0, 1.0),
            statistic,
            observed_effect,
            effect_sign: sign(observed_effect),
            test_name,
            degenerate: false,
        }
    }

    fn degenerate(mut self) -> Self {
        self.degenerate = true;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum McNemarVariant {
    ChiSquare,
    #[default]
    ExactConditional,
}

impl McNemarVariant {
    pub fn name(self) -> &'static str {
        match self {
            McNemarVariant::ChiSquare => "chi_square",
            McNemarVariant::ExactConditional => "exact_conditional",
        }
    }
}

impl core::str::FromStr for McNemarVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chi_square" | "chi-square" | "chi2" => Ok(Self::ChiSquare),
            "exact_conditional" | "exact-conditional" | "exact" => Ok(Self::ExactConditional),
            _ => Err(Error::param("variant", "expected chi_square or exact_conditional")),
        }
    }
}

/// McNemar's test on the discordant counts of two paired classifiers.
///
/// The observed effect is `(n_only_m2 - n_only_m1) / n_total` when the total
/// is supplied (an accuracy difference), otherwise the raw count difference.
pub fn mcnemar_test(
    n_only_m1: u64,
    n_only_m2: u64,
    variant: McNemarVariant,
    n_total: Option<u64>,
) -> Result<TestResult> {
    let diff = n_only_m2 as f64 - n_only_m1 as f64;
    let effect = match n_total {
        Some(0) => return Err(Error::param("n_total", "must be positive")),
        Some(t) if t < n_only_m1 + n_only_m2 => {
            return Err(Error::param("n_total", "smaller than the discordant count"))
        }
        Some(t) => diff / t as f64,
        None => diff,
    };
    let m = n_only_m1 + n_only_m2;
    if m == 0 {
        return Ok(TestResult::new(1.0, 0.0, effect, variant.name()).degenerate());
    }
    let r = match variant {
        McNemarVariant::ChiSquare => {
            let stat = diff * diff / m as f64;
            TestResult::new(chi_square_sf(stat, 1.0), stat, effect, "mcnemar_chi_square")
        }
        McNemarVariant::ExactConditional => {
            let p = two_sided_binomial_p(n_only_m2, m, 0.5);
            TestResult::new(p, n_only_m2 as f64, effect, "mcnemar_exact_conditional")
        }
    };
    Ok(r)
}

/// Two-sided exact binomial p-value: the smaller tail doubled, capped at 1.
fn two_sided_binomial_p(k: u64, n: u64, p0: f64) -> f64 {
    let (lower, upper) = if p0 == 0.5 {
        // Symmetric null: P(X >= k) = P(X <= n - k).
        (binom_half_cdf(k, n), binom_half_cdf(n - k, n))
    } else {
        (binom_cdf(k, n, p0), binom_sf(k, n, p0))
    };
    (2.0 * lower.min(upper)).min(1.0)
}

/// Exact two-sided binomial test of `successes` out of `n` against `p0`.
pub fn binom_test(successes: u64, n: u64, p0: f64) -> Result<TestResult> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    if successes > n {
        return Err(Error::param("successes", "exceeds n"));
    }
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::param("p0", "must lie strictly between 0 and 1"));
    }
    let p = two_sided_binomial_p(successes, n, p0);
    Ok(TestResult::new(
        p,
        successes as f64,
        successes as f64 / n as f64 - p0,
        "binomial_exact",
    ))
}

/// Normal-approximation power of the two-sided two-sample proportion z-test
/// (pooled variance under the null, unpooled under the alternative), with
/// both rejection tails included.
pub fn two_prop_power(p1: f64, p2: f64, n_per_group: u64, alpha: f64) -> Result<f64> {
    for (name, p) in [("p1", p1), ("p2", p2)] {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::param(name, "must lie strictly between 0 and 1"));
        }
    }
    check_alpha(alpha)?;
    if n_per_group < 2 {
        return Err(Error::param("n_per_group", "must be at least 2"));
    }
    let n = n_per_group as f64;
    let z = norm_ppf(1.0 - alpha / 2.0);
    let pbar = 0.5 * (p1 + p2);
    let sd_null = libm::sqrt(2.0 * pbar * (1.0 - pbar));
    let sd_alt = libm::sqrt(p1 * (1.0 - p1) + p2 * (1.0 - p2));
    let d = (p1 - p2).abs() * libm::sqrt(n);
    Ok(norm_cdf((d - z * sd_null) / sd_alt) + norm_cdf((-d - z * sd_null) / sd_alt))
}

/// Closed-form (upper-tail normal approximation) power of McNemar's test
/// given the discordance `psi = p10 + p01` and `delta = p01 - p10`.
pub fn mcnemar_power_normal(psi: f64, delta: f64, n: u64, alpha: f64) -> f64 {
    let z = norm_ppf(1.0 - alpha / 2.0);
    let num = libm::sqrt(n as f64) * delta.abs() - z * libm::sqrt(psi);
    let var = psi - delta * delta;
    if var <= 0.0 {
        return if num > 0.0 { 1.0 } else { 0.0 };
    }
    norm_cdf(num / libm::sqrt(var))
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::param("alpha", "must lie strictly between 0 and 1"))
    }
}

/// Paired randomization test on per-item values. The statistic is the mean
/// difference `mean(a - b)`; each randomization swaps every pair
/// independently with probability 1/2. Two-sided, with the add-one
/// correction `(1 + count) / (R + 1)`.
pub fn paired_randomization_test(a: &[f64], b: &[f64], r: u64, seed: u64) -> Result<TestResult> {
    let mut rng = rng::stream(seed, 0);
    paired_randomization_test_with(a, b, r, &mut rng)
}

pub fn paired_randomization_test_with(a: &[f64], b: &[f64], r: u64, rng: &mut SimRng) -> Result<TestResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            what: "paired values",
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Empty("paired values"));
    }
    if r < 100 {
        return Err(Error::param("R", "at least 100 randomizations are required"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let total: f64 = d.iter().sum();
    let observed = total / n;
    let sums = SubsetSums::new(&d);
    // Swapping pair i flips the sign of d_i: randomized mean = (total - 2 s) / n.
    let count = count_extreme(&sums, r, rng, observed, sums.abs_total() / n, |s| (total - 2.0 * s) / n);
    let p = (1 + count) as f64 / (r + 1) as f64;
    Ok(TestResult::new(p, observed, observed, "paired_randomization"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::ln_choose;
    use approx::assert_relative_eq;

    #[test]
    fn chi_square_mcnemar_matches_survival_oracle() {
        let r = mcnemar_test(40, 60, McNemarVariant::ChiSquare, None).unwrap();
        assert_relative_eq!(r.statistic, 4.0);
        // P(chi2_1 > 4) = erfc(sqrt 2)
        assert_relative_eq!(r.p_value, libm::erfc(libm::sqrt(2.0)), max_relative = 1e-10);
        assert!((r.p_value - 0.0455).abs() < 5e-5);
        assert_eq!(r.effect_sign, 1);
    }

    #[test]
    fn symmetric_counts_give_unit_p() {
        for v in [McNemarVariant::ChiSquare, McNemarVariant::ExactConditional] {
            let r = mcnemar_test(25, 25, v, Some(100)).unwrap();
            assert_eq!(r.p_value, 1.0);
            assert_eq!(r.effect_sign, 0);
        }
    }

    #[test]
    fn exact_extreme_tail() {
        let r = mcnemar_test(0, 8, McNemarVariant::ExactConditional, None).unwrap();
        assert_eq!(r.p_value, 0.0078125);
    }

    #[test]
    fn no_discordant_pairs_is_degenerate() {
        let r = mcnemar_test(0, 0, McNemarVariant::ChiSquare, Some(10)).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert!(r.degenerate);
    }

    #[test]
    fn binom_test_matches_enumeration() {
        // Oracle: sum exact pmf terms in log space.
        let pmf = |k: u64| libm::exp(ln_choose(100, k) - 100.0 * core::f64::consts::LN_2);
        let upper: f64 = (65..=100).map(pmf).sum();
        let r = binom_test(65, 100, 0.5).unwrap();
        assert_relative_eq!(r.p_value, 2.0 * upper, max_relative = 1e-10);
        assert!((r.p_value - 0.0035).abs() < 5e-5);
        assert_relative_eq!(r.observed_effect, 0.15, max_relative = 1e-12);
    }

    #[test]
    fn binom_test_trivial_cases() {
        assert_eq!(binom_test(50, 100, 0.5).unwrap().p_value, 1.0);
        assert_eq!(binom_test(5, 5, 0.5).unwrap().p_value, 0.0625);
        assert!(binom_test(0, 0, 0.5).is_err());
    }

    #[test]
    fn binom_test_asymmetric_null() {
        let pmf = |k: u64| libm::exp(crate::math::binom_ln_pmf(k, 30, 0.2));
        let lower: f64 = (0..=2).map(pmf).sum();
        let upper: f64 = (2..=30).map(pmf).sum();
        let r = binom_test(2, 30, 0.2).unwrap();
        assert_relative_eq!(r.p_value, (2.0 * lower.min(upper)).min(1.0), max_relative = 1e-10);
    }

    #[test]
    fn two_prop_power_null_is_alpha() {
        for n in [10, 1000, 50_000] {
            assert_relative_eq!(two_prop_power(0.9, 0.9, n, 0.05).unwrap(), 0.05, max_relative = 1e-12);
        }
    }

    #[test]
    fn randomization_all_zero_differences() {
        let a = [0.3, 0.1, 0.9];
        let r = paired_randomization_test(&a, &a, 500, 4).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn randomization_rejects_bad_input() {
        assert!(paired_randomization_test(&[1.0], &[1.0, 2.0], 500, 1).is_err());
        assert!(paired_randomization_test(&[1.0], &[2.0], 99, 1).is_err());
    }

    #[test]
    fn connett_normal_formula() {
        // Zero effect gives at most alpha/2 in the upper tail.
        assert!(mcnemar_power_normal(0.1, 0.0, 500, 0.05) < 0.03);
        assert!(mcnemar_power_normal(0.1, 0.02, 100_000, 0.05) > 0.999);
    }
}
