use powcheck_core::likert::{fit_lmm, simulate_ratings, LikertFamily, LikertParams, LmmFit, Preset};
use powcheck_core::rng::stream;
use powcheck_core::ProcessFamily;
use serde_json::json;

use super::{axes, curve, estimate, mde, parameters, to_value, Action, Ctx};
use crate::cli::{require, LikertArgs, PresetName};
use crate::error::{CliError, CliResult};
use crate::io::{read_json, read_ratings, ratings_csv, RatingsInfo};
use crate::report::Outcome;

const NAME: &str = "likert";

fn params_of(fit: &LmmFit) -> LikertParams {
    let c = fit.components;
    LikertParams {
        beta0: fit.beta0,
        beta1: fit.beta1,
        sigma_w0: c.sigma_w0,
        sigma_w1: c.sigma_w1,
        sigma_i0: c.sigma_i0,
        sigma_i1: c.sigma_i1,
        sigma_e: c.sigma_e,
    }
}

struct Fitted {
    fit: LmmFit,
    info: RatingsInfo,
}

fn fit_ratings(a: &LikertArgs) -> CliResult<Option<Fitted>> {
    let Some(path) = &a.ratings else {
        return Ok(None);
    };
    let (table, info) = read_ratings(path, a.treatment.as_deref())?;
    Ok(Some(Fitted {
        fit: fit_lmm(&table)?,
        info,
    }))
}

pub fn run(a: &LikertArgs, ctx: &Ctx) -> CliResult<Outcome> {
    if a.treatment.is_some() && a.ratings.is_none() {
        return Err(CliError::param("--treatment only applies to --ratings"));
    }
    if ctx.action == Action::Fit {
        let Some(f) = fit_ratings(a)? else {
            return Err(CliError::param("`fit likert` needs --ratings"));
        };
        return Ok(Outcome {
            parameters: json!({ "ratings": f.info }),
            result: json!({ "fit": f.fit, "params": params_of(&f.fit) }),
            warnings: f.fit.warnings.clone(),
            ..Default::default()
        });
    }
    let fitted = fit_ratings(a)?;
    let mut params = match (&a.preset, &a.params, &fitted) {
        (Some(p), _, _) => {
            let preset = match p {
                PresetName::High => Preset::HighVariance,
                PresetName::Low => Preset::LowVariance,
            };
            preset.params(a.beta0, a.effect.unwrap_or(0.0))
        }
        (None, Some(path), _) => read_json::<LikertParams>(path)?,
        (None, None, Some(f)) => params_of(&f.fit),
        (None, None, None) => {
            return Err(CliError::param("give one of --preset, --params or --ratings"));
        }
    };
    if let Some(e) = a.effect {
        params = params.with_effect(e);
    }
    params.validate()?;
    let what = "(or give --ratings)";
    let workers = require(a.workers.or(fitted.as_ref().map(|f| f.info.workers)), "workers", what)?;
    let items = a.items.or(fitted.as_ref().map(|f| f.info.items));
    let mut warnings = fitted.as_ref().map(|f| f.fit.warnings.clone()).unwrap_or_default();
    let fam = LikertFamily { params, n_workers: workers };
    let mut p = parameters(ctx, json!({ "params": params, "workers": workers }));
    if let Some(f) = &fitted {
        p["ratings"] = to_value(&f.info)?;
    }
    let mut out = match ctx.action {
        Action::Power if ctx.common.has_grid() => {
            curve(NAME, &fam, axes(ctx.common, items.map(|i| i as u64), Some(params.beta1), false)?, ctx, p)?
        }
        Action::Power => {
            let items = require(items, "items", what)?;
            p["items"] = json!(items);
            estimate(NAME, &fam.at(items as u64, params.beta1)?, ctx, p)?
        }
        Action::Mde => {
            if a.effect.is_some() {
                return Err(CliError::param("--effect is what `mde` searches for; drop it"));
            }
            let items = require(items, "items", what)?;
            p["items"] = json!(items);
            mde(NAME, &fam, items as u64, ctx, p)?
        }
        Action::Simulate => {
            let items = require(items, "items", what)?;
            let table = simulate_ratings(&params, workers, items, &mut stream(ctx.config.seed, 0))?;
            p["items"] = json!(items);
            Outcome {
                parameters: p,
                result: json!({ "ratings": table.rows() }),
                table: Some(ratings_csv(&table)?),
                ..Default::default()
            }
        }
        Action::Fit => unreachable!(),
    };
    warnings.append(&mut out.warnings);
    out.warnings = warnings;
    Ok(out)
}
