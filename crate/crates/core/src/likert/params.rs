use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The seven parameters of the rating model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikertParams {
    pub beta0: f64,
    pub beta1: f64,
    pub sigma_w0: f64,
    pub sigma_w1: f64,
    pub sigma_i0: f64,
    pub sigma_i1: f64,
    pub sigma_e: f64,
}

impl LikertParams {
    pub fn validate(&self) -> Result<()> {
        if !self.beta0.is_finite() || !self.beta1.is_finite() {
            return Err(Error::param("beta", "fixed effects must be finite"));
        }
        for (name, s) in [
            ("sigma_w0", self.sigma_w0),
            ("sigma_w1", self.sigma_w1),
            ("sigma_i0", self.sigma_i0),
            ("sigma_i1", self.sigma_i1),
            ("sigma_e", self.sigma_e),
        ] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::param(name, "standard deviations must be finite and non-negative"));
            }
        }
        Ok(())
    }

    pub fn with_effect(mut self, beta1: f64) -> Self {
        self.beta1 = beta1;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    HighVariance,
    LowVariance,
}

impl Preset {
    pub fn params(self, beta0: f64, beta1: f64) -> LikertParams {
        let (w0, w1, i0, i1, e) = match self {
            Preset::LowVariance => (0.01, 0.04, 0.01, 0.13, 0.16),
            Preset::HighVariance => (0.01, 0.11, 0.04, 0.14, 0.26),
        };
        LikertParams {
            beta0,
            beta1,
            sigma_w0: w0,
            sigma_w1: w1,
            sigma_i0: i0,
            sigma_i1: i1,
            sigma_e: e,
        }
    }
}

impl core::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "high" | "high_variance" => Ok(Preset::HighVariance),
            "low" | "low_variance" => Ok(Preset::LowVariance),
            _ => Err(Error::param("preset", "expected high or low")),
        }
    }
}

/// Slope under `x = ±1/2` coding from a slope estimated under `x = ±1`
/// coding (the half-coding slope is the full between-condition difference).
pub fn slope_from_unit_coding(beta1_unit: f64) -> f64 {
    2.0 * beta1_unit
}

/// Inverse of [`slope_from_unit_coding`].
pub fn slope_to_unit_coding(beta1_half: f64) -> f64 {
    0.5 * beta1_half
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let p = Preset::LowVariance.params(0.5, 0.1);
        assert_eq!((p.sigma_w0, p.sigma_w1, p.sigma_i0, p.sigma_i1, p.sigma_e), (0.01, 0.04, 0.01, 0.13, 0.16));
        let p = Preset::HighVariance.params(0.5, 0.1);
        assert_eq!((p.sigma_w0, p.sigma_w1, p.sigma_i0, p.sigma_i1, p.sigma_e), (0.01, 0.11, 0.04, 0.14, 0.26));
        assert_eq!(slope_to_unit_coding(slope_from_unit_coding(0.3)), 0.3);
    }
}
