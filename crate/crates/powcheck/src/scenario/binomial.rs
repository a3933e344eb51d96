use powcheck_core::binomial::{exact_binomial_power, BinomialFamily, BinomialProcess};
use powcheck_core::rng::stream;
use powcheck_core::GenerativeProcess;
use serde_json::json;

use super::{axes, curve, estimate, mde, parameters, to_value, unsupported, Action, Ctx};
use crate::cli::{require, BinomialArgs};
use crate::error::CliResult;
use crate::report::Outcome;

const NAME: &str = "binomial";

pub fn run(a: &BinomialArgs, ctx: &Ctx) -> CliResult<Outcome> {
    let c = &a.common;
    let prob = a.prob.map(|v| c.prob("prob", v, 0.0, 1.0)).transpose()?;
    match ctx.action {
        Action::Power if c.has_grid() => {
            // Grid effects are offsets from 0.5, like the family's index.
            let p = parameters(ctx, json!({}));
            curve(NAME, &BinomialFamily, axes(c, a.n, prob.map(|p| p - 0.5), true)?, ctx, p)
        }
        Action::Power => {
            let n = require(a.n, "n", "for `power binomial`")?;
            let prob = require(prob, "prob", "for `power binomial`")?;
            let process = BinomialProcess::from_prob(n, prob)?;
            let mut out = estimate(NAME, &process, ctx, parameters(ctx, json!({ "n": n, "prob": prob })))?;
            out.result["exact"] = to_value(&exact_binomial_power(n, prob, ctx.config.alpha)?)?;
            Ok(out)
        }
        Action::Mde => {
            let n = require(a.n, "n", "for `mde binomial`")?;
            let mut out = mde(NAME, &BinomialFamily, n, ctx, parameters(ctx, json!({ "n": n })))?;
            let effect = out.result["effect"].as_f64().unwrap_or(0.0);
            out.result["prob"] = json!(0.5 + effect);
            Ok(out)
        }
        Action::Fit => Err(unsupported("fit", NAME, "there is nothing to estimate beyond the success rate")),
        Action::Simulate => {
            let n = require(a.n, "n", "for `simulate binomial`")?;
            let prob = require(prob, "prob", "for `simulate binomial`")?;
            let process = BinomialProcess::from_prob(n, prob)?;
            let k = process.sample(&mut stream(ctx.config.seed, 0))?;
            Ok(Outcome {
                parameters: json!({ "seed": ctx.config.seed, "n": n, "prob": prob }),
                result: json!({ "successes": k }),
                table: Some(format!("successes\n{k}\n")),
                ..Default::default()
            })
        }
    }
}
