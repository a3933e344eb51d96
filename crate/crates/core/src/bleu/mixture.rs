use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::Serialize;

use crate::math::median;
use crate::{Error, Result};

/// Effects with `|δ| <= DEFAULT_ZERO_TOL` BLEU points count as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplaceComponent {
    pub mu: f64,
    pub b: f64,
    /// `b * n`: the scale normalised for corpus size.
    pub b0: f64,
}

/// Point mass at zero with weight `p0`, mixed with a Laplace(`mu`, `b`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplaceMixtureFit {
    pub p0: f64,
    pub n: usize,
    /// Absent when every effect is zero.
    pub laplace: Option<LaplaceComponent>,
    pub warnings: Vec<String>,
}

/// Fit the mixture: `p0` is the zero fraction, `mu` the median of the
/// nonzero effects and `b` their mean absolute deviation from `mu` (the
/// Laplace maximum-likelihood estimates).
pub fn fit_mixture(deltas: &[f64], zero_tol: f64) -> Result<LaplaceMixtureFit> {
    if deltas.is_empty() {
        return Err(Error::Empty("swap effects"));
    }
    if !(zero_tol >= 0.0) {
        return Err(Error::param("zero_tol", "must be non-negative"));
    }
    let n = deltas.len();
    let nonzero: Vec<f64> = deltas.iter().copied().filter(|d| d.abs() > zero_tol).collect();
    let p0 = (n - nonzero.len()) as f64 / n as f64;
    let mut warnings = Vec::new();
    if nonzero.is_empty() {
        return Ok(LaplaceMixtureFit {
            p0: 1.0,
            n,
            laplace: None,
            warnings,
        });
    }
    if nonzero.len() < 20 {
        warnings.push(format!("only {} nonzero effects; the Laplace fit is unstable", nonzero.len()));
    }
    let mu = median(&nonzero);
    let b = nonzero.iter().map(|d| (d - mu).abs()).sum::<f64>() / nonzero.len() as f64;
    if b == 0.0 {
        warnings.push(String::from("all nonzero effects are equal; Laplace scale is 0"));
    }
    Ok(LaplaceMixtureFit {
        p0,
        n,
        laplace: Some(LaplaceComponent { mu, b, b0: b * n as f64 }),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_zero_effects() {
        let f = fit_mixture(&[0.0; 30], DEFAULT_ZERO_TOL).unwrap();
        assert_eq!(f.p0, 1.0);
        assert!(f.laplace.is_none());
    }

    #[test]
    fn small_input_warns() {
        let f = fit_mixture(&[0.0, 1.0, -1.0, 2.0], DEFAULT_ZERO_TOL).unwrap();
        assert_eq!(f.p0, 0.25);
        let l = f.laplace.unwrap();
        assert_eq!(l.mu, 1.0);
        assert_eq!(l.b0, l.b * 4.0);
        assert_eq!(f.warnings.len(), 1);
    }
}
