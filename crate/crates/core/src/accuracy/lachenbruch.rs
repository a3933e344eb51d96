//! MDE bounds when nothing is known about the agreement between models.
//!
//! For a baseline accuracy `p1` and a candidate `p2 = p1 + Δ`, the
//! discordance `ψ = p10 + p01` can lie anywhere in
//! `[|p1 - p2|, min(p1 + p2, 2 - p1 - p2)]`. The lower end is the most
//! favourable (smallest MDE), the upper end the least; the midpoint takes
//! the middle of that range.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::Serialize;

use super::{contingency_from, McNemarProcess};
use crate::sim::{find_mde, MdeOptions, ProcessFamily, SimulationConfig};
use crate::significance::{check_alpha, mcnemar_power_normal, McNemarVariant};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Discordance {
    /// `ψ = |p1 - p2|`: every disagreement favours the better model.
    Lower,
    /// Middle of the feasible discordance range.
    Mid,
    /// `ψ = min(p1 + p2, 2 - p1 - p2)`: maximal disagreement.
    Upper,
    /// Errors independent across models: `ψ = p1 (1 - p2) + (1 - p1) p2`.
    Independence,
}

impl Discordance {
    pub fn name(self) -> &'static str {
        match self {
            Discordance::Lower => "lower",
            Discordance::Mid => "mid",
            Discordance::Upper => "upper",
            Discordance::Independence => "independence",
        }
    }

    /// Discordance for accuracies `p1` and `p2`.
    pub fn psi(self, p1: f64, p2: f64) -> f64 {
        let lo = (p1 - p2).abs();
        let hi = (p1 + p2).min(2.0 - p1 - p2);
        match self {
            Discordance::Lower => lo,
            Discordance::Upper => hi,
            Discordance::Mid => 0.5 * (lo + hi),
            Discordance::Independence => p1 * (1.0 - p2) + (1.0 - p1) * p2,
        }
    }
}

/// McNemar processes for a baseline accuracy under a discordance assumption,
/// indexed by the improvement `Δ = p2 - p1`.
#[derive(Debug, Clone, Copy)]
pub struct DiscordanceFamily {
    pub baseline: f64,
    pub assumption: Discordance,
    pub variant: McNemarVariant,
}

impl ProcessFamily for DiscordanceFamily {
    type Process = McNemarProcess;

    fn at(&self, n: u64, effect: f64) -> Result<McNemarProcess> {
        let psi = self.assumption.psi(self.baseline, self.baseline + effect);
        let spec = contingency_from(1.0 - psi, effect, Some(self.baseline))?;
        McNemarProcess::new(spec, n, self.variant)
    }

    fn max_effect(&self, _n: u64) -> f64 {
        1.0 - self.baseline
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PowerMethod {
    /// Simulated McNemar power via the engine.
    Simulation {
        reps: u64,
        seed: u64,
        variant: McNemarVariant,
    },
    /// Closed-form normal approximation to McNemar power.
    NormalApprox,
}

impl Default for PowerMethod {
    fn default() -> Self {
        PowerMethod::Simulation {
            reps: 10_000,
            seed: 1,
            variant: McNemarVariant::ExactConditional,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LachenbruchBounds {
    pub mde_lower: f64,
    pub mde_mid: f64,
    pub mde_upper: f64,
    pub diagnostics: Vec<String>,
}

/// MDE under the lower, mid and upper discordance assumptions.
pub fn lachenbruch_mde(
    baseline_acc: f64,
    n: u64,
    target_power: f64,
    alpha: f64,
    method: PowerMethod,
) -> Result<LachenbruchBounds> {
    if !(baseline_acc > 0.0 && baseline_acc < 1.0) {
        return Err(Error::param("baseline", "must lie strictly between 0 and 1"));
    }
    if n < 10 {
        return Err(Error::param("n", "must be at least 10"));
    }
    check_alpha(alpha)?;
    if !(target_power > alpha && target_power < 1.0) {
        return Err(Error::param("target_power", "must lie in (alpha, 1)"));
    }
    let mut out = [0.0; 3];
    let mut diagnostics = Vec::new();
    for (slot, assumption) in [Discordance::Lower, Discordance::Mid, Discordance::Upper].into_iter().enumerate() {
        let mde = match method {
            PowerMethod::NormalApprox => normal_mde(baseline_acc, n, target_power, alpha, assumption),
            PowerMethod::Simulation { reps, seed, variant } => {
                let family = DiscordanceFamily {
                    baseline: baseline_acc,
                    assumption,
                    variant,
                };
                let opts = MdeOptions::new(target_power, SimulationConfig::new(alpha, reps, seed)?);
                find_mde(&family, n, &opts).map(|r| {
                    diagnostics.extend(r.diagnostics.into_iter().map(|d| format!("{}: {d}", assumption.name())));
                    r.effect
                })
            }
        };
        out[slot] = mde.map_err(|e| match e {
            Error::InfeasibleMde { power, .. } => Error::Infeasible(format!(
                "{} bound: power {power:.4} at the largest possible improvement is below {target_power} at n = {n}",
                assumption.name()
            )),
            other => other,
        })?;
    }
    if !(out[0] <= out[1] && out[1] <= out[2]) {
        diagnostics.push(format!(
            "bounds out of order within Monte Carlo noise: {:.5}, {:.5}, {:.5}",
            out[0], out[1], out[2]
        ));
    }
    Ok(LachenbruchBounds {
        mde_lower: out[0],
        mde_mid: out[1],
        mde_upper: out[2],
        diagnostics,
    })
}

fn normal_mde(p1: f64, n: u64, target: f64, alpha: f64, assumption: Discordance) -> Result<f64> {
    let power = |d: f64| mcnemar_power_normal(assumption.psi(p1, p1 + d), d, n, alpha);
    let mut lo = 0.0;
    let mut hi = 1.0 - p1;
    let p_hi = power(hi);
    if p_hi < target {
        return Err(Error::InfeasibleMde {
            max_effect: hi,
            power: p_hi,
            target,
        });
    }
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if power(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
