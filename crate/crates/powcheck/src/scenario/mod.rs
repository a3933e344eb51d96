//! One handler per scenario. Handlers validate and resolve their flags,
//! call into the core crate and package the result as an [`Outcome`].

pub mod accuracy;
pub mod binomial;
pub mod bleu;
pub mod likert;

use powcheck_core::{
    estimate_power, find_mde, power_curve, MdeOptions, PowerCurve, PowerReport, ProcessFamily, SimulationConfig,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::cli::Common;
use crate::error::{CliError, CliResult};
use crate::report::{Outcome, Row};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Power,
    Mde,
    Fit,
    Simulate,
}

pub struct Ctx<'a> {
    pub action: Action,
    pub common: &'a Common,
    pub config: SimulationConfig,
}

impl Ctx<'_> {
    pub fn mde_options(&self) -> CliResult<MdeOptions> {
        let target = self.common.target_power()?;
        if target <= self.config.alpha || target >= 1.0 {
            return Err(CliError::param("--target-power must lie strictly between alpha and 1"));
        }
        Ok(MdeOptions::new(target, self.config))
    }

    pub fn config_echo(&self) -> Value {
        json!({ "alpha": self.config.alpha, "reps": self.config.reps, "seed": self.config.seed })
    }
}

pub fn to_value<T: Serialize>(v: &T) -> CliResult<Value> {
    serde_json::to_value(v).map_err(|e| CliError::runtime(e.to_string()))
}

/// Merges `extra` into the config echo; both must be JSON objects.
pub fn parameters(ctx: &Ctx, extra: Value) -> Value {
    let mut base = ctx.config_echo();
    if let (Some(b), Value::Object(e)) = (base.as_object_mut(), extra) {
        b.extend(e);
    }
    base
}

pub fn power_outcome(scenario: &str, report: PowerReport, parameters: Value) -> CliResult<Outcome> {
    Ok(Outcome {
        parameters,
        rows: vec![Row::from_report(scenario, &report)],
        warnings: report.diagnostics.clone(),
        result: to_value(&report)?,
        table: None,
    })
}

pub fn estimate<P: powcheck_core::GenerativeProcess>(
    scenario: &str,
    process: &P,
    ctx: &Ctx,
    parameters: Value,
) -> CliResult<Outcome> {
    power_outcome(scenario, estimate_power(process, &ctx.config)?, parameters)
}

pub fn mde<F: ProcessFamily>(scenario: &str, family: &F, n: u64, ctx: &Ctx, parameters: Value) -> CliResult<Outcome> {
    let r = find_mde(family, n, &ctx.mde_options()?)?;
    // Power columns come from the verification run; the seed shown is the
    // one to pass back on the command line.
    let mut row = Row::from_report(scenario, &r.verification);
    row.seed = ctx.config.seed;
    Ok(Outcome {
        parameters,
        rows: vec![row],
        warnings: r.diagnostics.clone(),
        result: to_value(&r)?,
        table: None,
    })
}

/// Grid axes: each defaults to the single value given by the scenario's own
/// flag. `scale_effects` applies `--percent` to probability-valued effects.
pub fn axes(common: &Common, n: Option<u64>, effect: Option<f64>, scale_effects: bool) -> CliResult<(Vec<u64>, Vec<f64>)> {
    let ns = match (&common.n_grid, n) {
        (Some(g), _) => g.clone(),
        (None, Some(n)) => vec![n],
        (None, None) => return Err(CliError::param("a power curve needs --n-grid or a single size")),
    };
    let effects = match (&common.effect_grid, effect) {
        (Some(g), _) if scale_effects && common.percent => g.iter().map(|e| e / 100.0).collect(),
        (Some(g), _) => g.clone(),
        (None, Some(e)) => vec![e],
        (None, None) => return Err(CliError::param("a power curve needs --effect-grid or a single effect")),
    };
    Ok((ns, effects))
}

pub fn curve<F: ProcessFamily>(
    scenario: &str,
    family: &F,
    (ns, effects): (Vec<u64>, Vec<f64>),
    ctx: &Ctx,
    mut parameters: Value,
) -> CliResult<Outcome> {
    let c: PowerCurve = power_curve(family, &ns, &effects, &ctx.config)?;
    let mut rows = Vec::with_capacity(c.cells.len());
    let mut warnings = Vec::new();
    for cell in &c.cells {
        match (&cell.report, &cell.error) {
            (Some(r), _) => {
                warnings.extend(r.diagnostics.iter().map(|d| format!("n={} effect={}: {d}", cell.n, cell.effect)));
                rows.push(Row::from_report(scenario, r));
            }
            (None, e) => {
                warnings.push(format!("n={} effect={}: {}", cell.n, cell.effect, e.as_deref().unwrap_or("failed")));
                rows.push(Row {
                    scenario: scenario.to_string(),
                    n: cell.n,
                    effect: cell.effect,
                    alpha: ctx.config.alpha,
                    reps: ctx.config.reps,
                    seed: ctx.config.seed,
                    power: None,
                    mc_stderr: None,
                    type_m: None,
                    type_s: None,
                });
            }
        }
    }
    if let Some(p) = parameters.as_object_mut() {
        p.insert("n_grid".into(), json!(c.n_grid));
        p.insert("effect_grid".into(), json!(c.effect_grid));
    }
    Ok(Outcome {
        parameters,
        result: to_value(&c)?,
        rows,
        table: None,
        warnings,
    })
}

pub fn unsupported(action: &str, scenario: &str, hint: &str) -> CliError {
    CliError::param(format!("`{action} {scenario}` is not available; {hint}"))
}
