use powcheck_core::bleu::{corpus_bleu, fit_mixture, simulate_mt_dataset, swap_effects, MtFamily, MtGenSpec};
use powcheck_core::rng::{derive_seed, stream};
use powcheck_core::ProcessFamily;
use serde_json::json;

use super::{axes, curve, estimate, mde, parameters, to_value, Action, Ctx};
use crate::cli::{require, BleuArgs};
use crate::error::{CliError, CliResult};
use crate::io::read_lines;
use crate::report::Outcome;

const NAME: &str = "bleu";

/// Generative parameters, from flags or from a fitted corpus pair.
struct Resolved {
    n: Option<u64>,
    delta: Option<f64>,
    p0: Option<f64>,
    b0: Option<f64>,
    fitted: Option<serde_json::Value>,
    warnings: Vec<String>,
}

fn corpus(a: &BleuArgs) -> CliResult<Option<[Vec<String>; 3]>> {
    match (&a.reference, &a.hyp_a, &a.hyp_b) {
        (Some(r), Some(x), Some(y)) => Ok(Some([read_lines(r)?, read_lines(x)?, read_lines(y)?])),
        _ => Ok(None),
    }
}

fn fit(a: &BleuArgs, seed: u64, [r, x, y]: &[Vec<String>; 3]) -> CliResult<(serde_json::Value, Resolved)> {
    let swaps = swap_effects(r, x, y, a.probe_subsets, derive_seed(seed, "additivity"))?;
    let mixture = fit_mixture(&swaps.deltas, a.zero_tol)?;
    let value = json!({
        "bleu_a": corpus_bleu(r, x)?,
        "bleu_b": corpus_bleu(r, y)?,
        "swap": swaps,
        "mixture": mixture,
    });
    let resolved = Resolved {
        n: Some(swaps.deltas.len() as u64),
        delta: Some(swaps.delta_b),
        p0: Some(mixture.p0),
        b0: mixture.laplace.map(|l| l.b0),
        fitted: None,
        warnings: mixture.warnings.clone(),
    };
    Ok((value, resolved))
}

fn resolve(a: &BleuArgs, seed: u64) -> CliResult<Resolved> {
    let c = &a.common;
    if !(a.zero_tol >= 0.0) {
        return Err(CliError::param("--zero-tol must be non-negative"));
    }
    let p0 = a.p0.map(|v| c.prob("p0", v, 0.0, 1.0)).transpose()?;
    let mut r = match corpus(a)? {
        Some(text) => {
            let (value, mut r) = fit(a, seed, &text)?;
            if r.b0.is_none() && a.b0.is_none() {
                return Err(CliError::param("every swap effect is zero; pass --b0 to simulate anyway"));
            }
            r.fitted = Some(value);
            r
        }
        None => Resolved {
            n: None,
            delta: None,
            p0: None,
            b0: None,
            fitted: None,
            warnings: Vec::new(),
        },
    };
    // Explicit flags override fitted values.
    r.n = a.n.or(r.n);
    r.delta = a.delta_bleu.or(r.delta);
    r.p0 = p0.or(r.p0);
    r.b0 = a.b0.or(r.b0);
    Ok(r)
}

pub fn run(a: &BleuArgs, ctx: &Ctx) -> CliResult<Outcome> {
    if ctx.action == Action::Fit {
        let Some(text) = corpus(a)? else {
            return Err(CliError::param("`fit bleu` needs --ref, --hyp-a and --hyp-b"));
        };
        let (value, r) = fit(a, ctx.config.seed, &text)?;
        return Ok(Outcome {
            parameters: json!({ "seed": ctx.config.seed, "zero_tol": a.zero_tol, "probe_subsets": a.probe_subsets }),
            result: value,
            warnings: r.warnings,
            ..Default::default()
        });
    }
    if a.randomizations < 100 {
        return Err(CliError::param("--randomizations must be at least 100"));
    }
    let r = resolve(a, ctx.config.seed)?;
    let what = "(or give --ref, --hyp-a and --hyp-b)";
    let p0 = require(r.p0, "p0", what)?;
    let b0 = require(r.b0, "b0", what)?;
    let fam = MtFamily::new(p0, b0, a.randomizations);
    let mut p = parameters(ctx, json!({ "p0": p0, "b0": b0, "randomizations": a.randomizations }));
    if let Some(f) = &r.fitted {
        p["fitted"] = f["mixture"].clone();
    }
    let mut out = match ctx.action {
        Action::Power if ctx.common.has_grid() => curve(NAME, &fam, axes(ctx.common, r.n, r.delta, false)?, ctx, p)?,
        Action::Power => {
            let n = require(r.n, "n", what)?;
            let delta = require(r.delta, "delta-bleu", what)?;
            p["n"] = json!(n);
            p["delta_bleu"] = json!(delta);
            estimate(NAME, &fam.at(n, delta)?, ctx, p)?
        }
        Action::Mde => {
            if a.delta_bleu.is_some() {
                return Err(CliError::param("--delta-bleu is what `mde` searches for; drop it"));
            }
            let n = require(r.n, "n", what)?;
            p["n"] = json!(n);
            mde(NAME, &fam, n, ctx, p)?
        }
        Action::Simulate => {
            let n = require(r.n, "n", what)?;
            let delta = require(r.delta, "delta-bleu", what)?;
            let spec = MtGenSpec::new(n, delta, p0, b0)?;
            let deltas = simulate_mt_dataset(&spec, &mut stream(ctx.config.seed, 0))?;
            let mut table = String::from("delta\n");
            for d in &deltas {
                table.push_str(&format!("{d}\n"));
            }
            p["n"] = json!(n);
            p["delta_bleu"] = json!(delta);
            Outcome {
                parameters: p,
                result: json!({ "spec": to_value(&spec)?, "deltas": deltas }),
                table: Some(table),
                ..Default::default()
            }
        }
        Action::Fit => unreachable!(),
    };
    let mut w = r.warnings;
    w.append(&mut out.warnings);
    out.warnings = w;
    Ok(out)
}
