use powcheck_core::accuracy::{
    contingency_from, estimate_params, f1_power_sim, lachenbruch_mde, simulate_pairs, AgreementFamily, McNemarProcess,
    PairedPredictions, ParamEstimate, PerClassContingency, PowerMethod, PriorFamily,
};
use powcheck_core::priors::{fit_ols, predict_effect_size, EffectSizeModel, OlsModel, PriorBundle};
use powcheck_core::rng::stream;
use powcheck_core::significance::McNemarVariant;
use powcheck_core::ProcessFamily;
use serde_json::{json, Value};

use super::{axes, curve, estimate, mde, parameters, to_value, unsupported, Action, Ctx};
use crate::cli::{require, AccuracyArgs, Method, Metric, PriorName, Variant};
use crate::error::{CliError, CliResult};
use crate::io::{index_labels, read_correctness, read_json, read_regression, read_values};
use crate::report::{Outcome, Row};

const NAME: &str = "accuracy";

struct Files {
    estimate: ParamEstimate,
    /// Per-class cells and class names, when gold labels were given.
    per_class: Option<(PerClassContingency, Vec<String>)>,
}

enum Source {
    Direct { agreement: Option<f64>, delta: Option<f64> },
    Files(Box<Files>),
    Prior(Box<PriorBundle>),
}

struct Resolved {
    source: Source,
    n: Option<u64>,
    delta: Option<f64>,
    sota: Option<f64>,
    variant: McNemarVariant,
}

fn variant(v: Variant) -> McNemarVariant {
    match v {
        Variant::Exact => McNemarVariant::ExactConditional,
        Variant::ChiSquare => McNemarVariant::ChiSquare,
    }
}

fn read_files(a: &AccuracyArgs) -> CliResult<Option<Files>> {
    let (Some(pa), Some(pb)) = (&a.pred_a, &a.pred_b) else {
        return Ok(None);
    };
    let Some(gold) = &a.gold else {
        if a.metric == Metric::F1 {
            return Err(CliError::param("--metric f1 needs --gold with label files"));
        }
        let preds = PairedPredictions::from_correctness(&read_correctness(pa)?, &read_correctness(pb)?)?;
        return Ok(Some(Files {
            estimate: estimate_params(&preds)?,
            per_class: None,
        }));
    };
    let (g, m1, m2) = (read_values(gold)?, read_values(pa)?, read_values(pb)?);
    let preds = PairedPredictions::from_labels(&m1, &m2, &g)?;
    let (names, [gi, ai, bi]) = index_labels([&g, &m1, &m2]);
    let per_class = if a.metric == Metric::F1 {
        if names.len() < 2 {
            return Err(CliError::param("F1 needs at least two distinct labels"));
        }
        Some((PerClassContingency::estimate(&gi, &ai, &bi, names.len())?, names))
    } else {
        None
    };
    Ok(Some(Files {
        estimate: estimate_params(&preds)?,
        per_class,
    }))
}

fn resolve(a: &AccuracyArgs) -> CliResult<Resolved> {
    let c = &a.common;
    let agreement = a.agreement.map(|v| c.prob("agreement", v, 0.0, 1.0)).transpose()?;
    let delta = a.delta.map(|v| c.prob("delta", v, -1.0, 1.0)).transpose()?;
    let sota = a.sota.map(|v| c.prob("sota", v, 0.0, 1.0)).transpose()?;
    if a.randomizations < 100 && a.metric == Metric::F1 {
        return Err(CliError::param("--randomizations must be at least 100"));
    }
    let sources = [a.pred_a.is_some(), a.prior.is_some() || a.overlap_model.is_some(), agreement.is_some()];
    if sources.iter().filter(|s| **s).count() > 1 {
        return Err(CliError::param(
            "choose one of --agreement, --pred-a/--pred-b, or --prior/--overlap-model",
        ));
    }
    let source = if let Some(files) = read_files(a)? {
        Source::Files(Box::new(files))
    } else if let Some(p) = a.prior {
        Source::Prior(Box::new(match p {
            PriorName::Glue => PriorBundle::glue(),
            PriorName::Squad2 => PriorBundle::squad2(),
        }))
    } else if let Some(path) = &a.overlap_model {
        let model: OlsModel = read_json(path)?;
        Source::Prior(Box::new(PriorBundle::user(model, EffectSizeModel::None)?))
    } else {
        Source::Direct { agreement, delta }
    };
    if matches!(source, Source::Prior(_)) && sota.is_none() {
        return Err(CliError::param("--sota is required with a prior"));
    }
    Ok(Resolved {
        source,
        n: a.n,
        delta,
        sota,
        variant: variant(a.variant),
    })
}

pub fn run(a: &AccuracyArgs, ctx: &Ctx) -> CliResult<Outcome> {
    if ctx.action == Action::Fit && a.regression.is_some() {
        return fit_regression(a);
    }
    if a.no_prior {
        return match ctx.action {
            Action::Mde => no_prior_mde(a, ctx),
            _ => Err(CliError::param("--no-prior only applies to `mde accuracy`")),
        };
    }
    let r = resolve(a)?;
    match ctx.action {
        Action::Power => power(a, r, ctx),
        Action::Mde => mde_search(a, r, ctx),
        Action::Fit => fit_files(r),
        Action::Simulate => simulate(r, ctx),
    }
}

fn base_params(r: &Resolved, ctx: &Ctx, extra: Value) -> Value {
    let mut v = parameters(ctx, json!({ "variant": r.variant.name() }));
    if let (Some(o), Value::Object(e)) = (v.as_object_mut(), extra) {
        o.extend(e);
    }
    v
}

fn files_n(r: &Resolved, f: &Files) -> u64 {
    r.n.unwrap_or(f.estimate.n)
}

fn power(a: &AccuracyArgs, r: Resolved, ctx: &Ctx) -> CliResult<Outcome> {
    if a.metric == Metric::F1 {
        return f1_power(a, &r, ctx);
    }
    let grid = ctx.common.has_grid();
    match &r.source {
        Source::Direct { agreement, delta } => {
            let pa = require(*agreement, "agreement", "(or give prediction files or a prior)")?;
            let fam = AgreementFamily { agreement: pa, variant: r.variant };
            let p = base_params(&r, ctx, json!({ "agreement": pa }));
            if grid {
                return curve(NAME, &fam, axes(ctx.common, r.n, *delta, true)?, ctx, p);
            }
            let n = require(r.n, "n", "for `power accuracy`")?;
            let delta = require(*delta, "delta", "for `power accuracy`")?;
            let p = base_params(&r, ctx, json!({ "agreement": pa, "n": n, "delta": delta }));
            estimate(NAME, &fam.at(n, delta)?, ctx, p)
        }
        Source::Files(f) => {
            let est = &f.estimate;
            let fam = AgreementFamily { agreement: est.agreement, variant: r.variant };
            let extra = json!({ "estimate": est });
            if grid {
                let n = Some(files_n(&r, f));
                let effect = Some(r.delta.unwrap_or(est.delta_acc));
                return curve(NAME, &fam, axes(ctx.common, n, effect, true)?, ctx, base_params(&r, ctx, extra));
            }
            let n = files_n(&r, f);
            // Without an override the observed table is used as is.
            let spec = match r.delta {
                Some(d) => contingency_from(est.agreement, d, None)?,
                None => est.spec,
            };
            let mut p = base_params(&r, ctx, extra);
            p["n"] = json!(n);
            p["delta"] = json!(spec.delta_acc());
            estimate(NAME, &McNemarProcess::new(spec, n, r.variant)?, ctx, p)
        }
        Source::Prior(bundle) => {
            let sota = r.sota.unwrap();
            let fam = PriorFamily { bundle: (**bundle).clone(), baseline: sota, variant: r.variant };
            let mut warnings = Vec::new();
            let delta = match r.delta {
                Some(d) => d,
                None => {
                    let pred = predict_effect_size(sota, a.task.as_deref(), bundle)?;
                    warnings.extend(pred.warnings);
                    pred.value
                }
            };
            let mut p = base_params(&r, ctx, json!({ "sota": sota, "prior": bundle.provenance, "task": a.task }));
            let mut out = if grid {
                curve(NAME, &fam, axes(ctx.common, r.n, Some(delta), true)?, ctx, p)?
            } else {
                let n = require(r.n, "n", "for `power accuracy`")?;
                let overlap = powcheck_core::priors::predict_overlap(sota, delta, bundle);
                warnings.extend(overlap.warnings);
                p["n"] = json!(n);
                p["delta"] = json!(delta);
                p["agreement"] = json!(overlap.value);
                estimate(NAME, &fam.at(n, delta)?, ctx, p)?
            };
            warnings.append(&mut out.warnings);
            out.warnings = warnings;
            Ok(out)
        }
    }
}

fn f1_power(a: &AccuracyArgs, r: &Resolved, ctx: &Ctx) -> CliResult<Outcome> {
    let Source::Files(f) = &r.source else {
        return Err(CliError::param("--metric f1 needs --pred-a, --pred-b and --gold"));
    };
    if ctx.common.has_grid() {
        return Err(CliError::param("power curves are not available for --metric f1"));
    }
    let (spec, names) = f.per_class.as_ref().expect("per-class cells are read for f1");
    let n = files_n(r, f);
    let report = f1_power_sim(spec, n, a.randomizations, None, &ctx.config)?;
    let p = parameters(
        ctx,
        json!({ "metric": "f1", "n": n, "randomizations": a.randomizations, "classes": names, "per_class": spec }),
    );
    super::power_outcome(NAME, report, p)
}

fn mde_search(a: &AccuracyArgs, r: Resolved, ctx: &Ctx) -> CliResult<Outcome> {
    if a.metric == Metric::F1 {
        return Err(unsupported("mde", NAME, "F1 MDE search is not supported; use `power accuracy --metric f1`"));
    }
    if r.delta.is_some() {
        return Err(CliError::param("--delta is what `mde` searches for; drop it"));
    }
    match &r.source {
        Source::Direct { agreement, .. } => {
            let pa = require(*agreement, "agreement", "(or give prediction files, a prior or --no-prior)")?;
            let n = require(r.n, "n", "for `mde accuracy`")?;
            let fam = AgreementFamily { agreement: pa, variant: r.variant };
            mde(NAME, &fam, n, ctx, base_params(&r, ctx, json!({ "agreement": pa, "n": n })))
        }
        Source::Files(f) => {
            let n = files_n(&r, f);
            let fam = AgreementFamily { agreement: f.estimate.agreement, variant: r.variant };
            let p = base_params(&r, ctx, json!({ "n": n, "estimate": f.estimate }));
            mde(NAME, &fam, n, ctx, p)
        }
        Source::Prior(bundle) => {
            let n = require(r.n, "n", "for `mde accuracy`")?;
            let sota = r.sota.unwrap();
            let fam = PriorFamily { bundle: (**bundle).clone(), baseline: sota, variant: r.variant };
            let p = base_params(&r, ctx, json!({ "n": n, "sota": sota, "prior": bundle.provenance }));
            let mut out = mde(NAME, &fam, n, ctx, p)?;
            let effect = out.result["effect"].as_f64().unwrap_or(0.0);
            out.result["agreement"] = json!(fam.agreement_at(effect));
            Ok(out)
        }
    }
}

fn no_prior_mde(a: &AccuracyArgs, ctx: &Ctx) -> CliResult<Outcome> {
    let c = ctx.common;
    let sota = c.prob("sota", require(a.sota, "sota", "with --no-prior")?, 0.0, 1.0)?;
    let n = require(a.n, "n", "with --no-prior")?;
    let target = ctx.mde_options()?.target_power;
    let method = match a.method {
        Method::Simulation => PowerMethod::Simulation {
            reps: ctx.config.reps,
            seed: ctx.config.seed,
            variant: variant(a.variant),
        },
        Method::Normal => PowerMethod::NormalApprox,
    };
    let b = lachenbruch_mde(sota, n, target, ctx.config.alpha, method)?;
    let row = |bound: &str, effect: f64| Row {
        scenario: format!("{NAME}:{bound}"),
        n,
        effect,
        alpha: ctx.config.alpha,
        reps: ctx.config.reps,
        seed: ctx.config.seed,
        power: None,
        mc_stderr: None,
        type_m: None,
        type_s: None,
    };
    let method_name = match a.method {
        Method::Simulation => "simulation",
        Method::Normal => "normal",
    };
    Ok(Outcome {
        parameters: parameters(
            ctx,
            json!({ "sota": sota, "n": n, "target_power": target, "method": method_name, "variant": variant(a.variant).name() }),
        ),
        rows: vec![row("lower", b.mde_lower), row("mid", b.mde_mid), row("upper", b.mde_upper)],
        warnings: b.diagnostics.clone(),
        result: to_value(&b)?,
        table: None,
    })
}

fn fit_files(r: Resolved) -> CliResult<Outcome> {
    let Source::Files(f) = r.source else {
        return Err(CliError::param("`fit accuracy` needs --pred-a/--pred-b (and optionally --gold) or --regression"));
    };
    let mut result = json!({ "estimate": f.estimate });
    if let Some((spec, names)) = &f.per_class {
        result["classes"] = json!(names);
        result["per_class"] = to_value(spec)?;
    }
    Ok(Outcome {
        parameters: json!({ "n": f.estimate.n }),
        result,
        warnings: f.per_class.map(|(s, _)| s.warnings()).unwrap_or_default(),
        ..Default::default()
    })
}

fn fit_regression(a: &AccuracyArgs) -> CliResult<Outcome> {
    let path = a.regression.as_ref().unwrap();
    let data = read_regression(path, &a.target)?;
    let names: Vec<&str> = data.predictors.iter().map(String::as_str).collect();
    let model = fit_ols(&names, &data.rows, &data.targets)?;
    let mut warnings = Vec::new();
    if names != ["min_acc", "acc_diff"] {
        warnings.push(String::from(
            "only a model on predictors min_acc, acc_diff (in that order) can be passed to --overlap-model",
        ));
    }
    Ok(Outcome {
        parameters: json!({ "target": a.target, "rows": data.rows.len() }),
        result: to_value(&model)?,
        warnings,
        ..Default::default()
    })
}

fn simulate(r: Resolved, ctx: &Ctx) -> CliResult<Outcome> {
    let Source::Direct { agreement, delta } = r.source else {
        return Err(CliError::param("`simulate accuracy` takes --n, --delta and --agreement"));
    };
    let pa = require(agreement, "agreement", "for `simulate accuracy`")?;
    let delta = require(delta, "delta", "for `simulate accuracy`")?;
    let n = require(r.n, "n", "for `simulate accuracy`")?;
    let spec = contingency_from(pa, delta, None)?;
    let preds = simulate_pairs(&spec, n as usize, &mut stream(ctx.config.seed, 0))?;
    let mut table = String::from("m1_correct,m2_correct\n");
    for (x, y) in preds.pairs() {
        table.push_str(&format!("{},{}\n", *x as u8, *y as u8));
    }
    let pairs: Vec<[u8; 2]> = preds.pairs().iter().map(|(x, y)| [*x as u8, *y as u8]).collect();
    Ok(Outcome {
        parameters: json!({ "seed": ctx.config.seed, "n": n, "agreement": pa, "delta": delta }),
        result: json!({ "estimate": estimate_params(&preds)?, "pairs": pairs }),
        table: Some(table),
        ..Default::default()
    })
}
