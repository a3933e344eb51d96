//! Regression priors for agreement and effect size, plus a small OLS fitter.
//!
//! The bundled coefficients come from leaderboard regressions on GLUE and
//! SQuAD 2.0 submissions. The GLUE effect-size regression is on the
//! percentage-point scale (inferred from the coefficient magnitudes); all
//! public functions here take and return fractions.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::linalg::pivoted_cholesky;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsModel {
    pub predictors: Vec<String>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// Standard errors of the intercept followed by each coefficient.
    pub std_errors: Vec<f64>,
    pub r_squared: f64,
    pub n_observations: usize,
    pub residual_std_error: f64,
}

impl OlsModel {
    /// A model with fixed published coefficients.
    pub fn fixed(predictors: &[&str], intercept: f64, coefficients: &[f64], std_errors: &[f64], r_squared: f64, n_observations: usize) -> Self {
        Self {
            predictors: predictors.iter().map(|s| s.to_string()).collect(),
            intercept,
            coefficients: coefficients.to_vec(),
            std_errors: std_errors.to_vec(),
            r_squared,
            n_observations,
            residual_std_error: f64::NAN,
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.coefficients.len());
        self.intercept + self.coefficients.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.predictors.iter().position(|p| p == name).map(|i| self.coefficients[i])
    }
}

/// Ordinary least squares with an intercept. `rows[i]` holds the predictor
/// values of observation `i`, in the order of `names`.
///
/// Solves the normal equations with a diagonally pivoted Cholesky
/// factorization of the column-equilibrated Gram matrix; a rank-deficient
/// design is reported with the names of the columns that could not be
/// pivoted in.
pub fn fit_ols(names: &[&str], rows: &[Vec<f64>], targets: &[f64]) -> Result<OlsModel> {
    let n = rows.len();
    let k = names.len();
    let p = k + 1;
    if n != targets.len() {
        return Err(Error::LengthMismatch {
            what: "regression rows vs targets",
            left: n,
            right: targets.len(),
        });
    }
    if let Some(i) = rows.iter().position(|r| r.len() != k) {
        return Err(Error::Misaligned {
            index: i,
            reason: format!("expected {k} predictors, found {}", rows[i].len()),
        });
    }
    if n <= p {
        return Err(Error::param("rows", format!("need more than {p} observations, got {n}")));
    }
    if rows.iter().flatten().chain(targets).any(|v| !v.is_finite()) {
        return Err(Error::param("rows", "values must be finite"));
    }

    let col = |i: usize, j: usize| if j == 0 { 1.0 } else { rows[i][j - 1] };
    let mut gram = vec![0.0; p * p];
    let mut xty = vec![0.0; p];
    for i in 0..n {
        for a in 0..p {
            let xa = col(i, a);
            xty[a] += xa * targets[i];
            for b in 0..=a {
                gram[a * p + b] += xa * col(i, b);
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[b * p + a] = gram[a * p + b];
        }
    }
    // Equilibrate so the pivot tolerance is scale free.
    let scale: Vec<f64> = (0..p).map(|a| libm::sqrt(gram[a * p + a]).max(f64::MIN_POSITIVE)).collect();
    let mut g = gram.clone();
    for a in 0..p {
        for b in 0..p {
            g[a * p + b] /= scale[a] * scale[b];
        }
    }
    let fac = pivoted_cholesky(&g, p, 1e-10);
    if fac.rank < p {
        let label = |j: usize| if j == 0 { String::from("(intercept)") } else { names[j - 1].to_string() };
        return Err(Error::RankDeficient {
            columns: fac.deficient_columns().iter().map(|&j| label(j)).collect(),
        });
    }
    let rhs: Vec<f64> = (0..p).map(|a| xty[a] / scale[a]).collect();
    let beta: Vec<f64> = fac.solve(&rhs).iter().zip(&scale).map(|(b, s)| b / s).collect();

    let ybar = targets.iter().sum::<f64>() / n as f64;
    let (mut ssr, mut sst) = (0.0, 0.0);
    for i in 0..n {
        let fit: f64 = (0..p).map(|a| beta[a] * col(i, a)).sum();
        let r = targets[i] - fit;
        ssr += r * r;
        let c = targets[i] - ybar;
        sst += c * c;
    }
    let sigma2 = ssr / (n - p) as f64;
    // diag((X'X)^-1) via unit solves on the equilibrated system.
    let std_errors = (0..p)
        .map(|a| {
            let mut e = vec![0.0; p];
            e[a] = 1.0;
            let inv_aa = fac.solve(&e)[a] / (scale[a] * scale[a]);
            libm::sqrt(sigma2 * inv_aa)
        })
        .collect();
    let r_squared = if sst > 0.0 { (1.0 - ssr / sst).clamp(0.0, 1.0) } else { 1.0 };
    Ok(OlsModel {
        predictors: names.iter().map(|s| s.to_string()).collect(),
        intercept: beta[0],
        coefficients: beta[1..].to_vec(),
        std_errors,
        r_squared,
        n_observations: n,
        residual_std_error: libm::sqrt(sigma2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Glue,
    Squad2,
    User,
}

/// Effect-size regression on baseline accuracy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum EffectSizeModel {
    /// Percentage-point regression with per-task intercept shifts; the
    /// first task listed is the reference level (shift 0).
    PerTask {
        intercept_pct: f64,
        baseline_slope: f64,
        tasks: Vec<(String, f64)>,
    },
    /// `effect = intercept + slope * baseline` on the fraction scale.
    Linear { intercept: f64, slope: f64 },
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriorBundle {
    pub provenance: Provenance,
    /// Overlap on predictors `min_acc`, `acc_diff`.
    pub overlap: OlsModel,
    pub effect: EffectSizeModel,
}

pub const GLUE_TASKS: [(&str, f64); 8] = [
    ("MNLI-m", 0.0),
    ("MNLI-mm", 0.150),
    ("MRPC", 0.023),
    ("QNLI", 2.139),
    ("QQP", -0.195),
    ("RTE", 1.018),
    ("SST-2", 1.536),
    ("WNLI", -0.520),
];

impl PriorBundle {
    pub fn glue() -> Self {
        Self {
            provenance: Provenance::Glue,
            overlap: OlsModel::fixed(&["min_acc", "acc_diff"], 0.4142, &[0.5819, -0.4662], &[0.019, 0.021, 0.028], 0.966, 270),
            effect: EffectSizeModel::PerTask {
                intercept_pct: 24.342,
                baseline_slope: -0.264,
                tasks: GLUE_TASKS.iter().map(|(t, v)| (t.to_string(), *v)).collect(),
            },
        }
    }

    pub fn squad2() -> Self {
        Self {
            provenance: Provenance::Squad2,
            overlap: OlsModel::fixed(&["min_acc", "acc_diff"], 0.4339, &[0.5932, -1.2849], &[0.091, 0.101, 0.588], 0.944, 14),
            effect: EffectSizeModel::Linear {
                intercept: 0.1331,
                slope: -0.1408,
            },
        }
    }

    /// A user-fitted overlap model, which must use predictors `min_acc` and
    /// `acc_diff` in that order.
    pub fn user(overlap: OlsModel, effect: EffectSizeModel) -> Result<Self> {
        if overlap.predictors != ["min_acc", "acc_diff"] {
            return Err(Error::param("overlap", "predictors must be min_acc, acc_diff"));
        }
        Ok(Self {
            provenance: Provenance::User,
            overlap,
            effect,
        })
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "glue" => Ok(Self::glue()),
            "squad2" | "squad" => Ok(Self::squad2()),
            _ => Err(Error::param("prior", "expected glue or squad2")),
        }
    }
}

/// A prediction with any warnings raised while making it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub value: f64,
    pub warnings: Vec<String>,
}

/// Expected agreement rate for models with smaller accuracy `min_acc` and
/// accuracy gap `acc_diff`, clamped into `[0, 1 - acc_diff]`.
pub fn predict_overlap(min_acc: f64, acc_diff: f64, bundle: &PriorBundle) -> Prediction {
    let mut warnings = Vec::new();
    if !(0.5..=1.0).contains(&min_acc) || !(0.0..=0.2).contains(&acc_diff) {
        warnings.push(format!(
            "inputs (min_acc {min_acc}, acc_diff {acc_diff}) outside the range the prior was fitted on"
        ));
    }
    let raw = bundle.overlap.predict(&[min_acc, acc_diff]);
    let cap = (1.0 - acc_diff.abs()).max(0.0);
    let value = raw.clamp(0.0, cap);
    if value != raw {
        warnings.push(format!("predicted overlap {raw:.4} clamped to {value:.4}"));
    }
    Prediction { value, warnings }
}

/// Expected improvement over a baseline accuracy, as a fraction.
pub fn predict_effect_size(baseline_acc: f64, task: Option<&str>, bundle: &PriorBundle) -> Result<Prediction> {
    let raw = match &bundle.effect {
        EffectSizeModel::PerTask {
            intercept_pct,
            baseline_slope,
            tasks,
        } => {
            let known = || tasks.iter().map(|(t, _)| t.clone()).collect::<Vec<_>>();
            let Some(task) = task else {
                return Err(Error::UnknownTask {
                    task: String::from("(none)"),
                    known: known(),
                });
            };
            let shift = tasks
                .iter()
                .find(|(t, _)| t.eq_ignore_ascii_case(task))
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::UnknownTask {
                    task: task.to_string(),
                    known: known(),
                })?;
            (intercept_pct + baseline_slope * 100.0 * baseline_acc + shift) / 100.0
        }
        EffectSizeModel::Linear { intercept, slope } => intercept + slope * baseline_acc,
        EffectSizeModel::None => {
            return Err(Error::param("prior", "bundle has no effect-size model"));
        }
    };
    let mut warnings = Vec::new();
    let value = if raw < 0.0 {
        warnings.push(format!("predicted effect {raw:.5} floored at 0"));
        0.0
    } else {
        raw
    };
    Ok(Prediction { value, warnings })
}

/// Odds ratio `p10 / p01 = (1 - o + d) / (1 - o - d)`.
pub fn odds_ratio(exp_overlap: f64, acc_diff: f64) -> Result<f64> {
    let den = 1.0 - exp_overlap - acc_diff;
    if !(den > 1e-12) {
        return Err(Error::Infeasible(format!(
            "overlap {exp_overlap} plus difference {acc_diff} leaves no room for discordant pairs"
        )));
    }
    Ok((1.0 - exp_overlap + acc_diff) / den)
}
