use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "powcheck", version, about = "Power analysis by simulation for NLP model comparisons")]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
}

#[derive(Subcommand, Debug)]
pub enum Verb {
    /// Estimate power (and Type-M/Type-S error) for one design or a grid.
    Power {
        #[command(subcommand)]
        scenario: Scenario,
    },
    /// Smallest effect reaching the target power at a given size.
    Mde {
        #[command(subcommand)]
        scenario: Scenario,
    },
    /// Estimate generative parameters from existing data.
    Fit {
        #[command(subcommand)]
        scenario: Scenario,
    },
    /// Draw one synthetic dataset.
    Simulate {
        #[command(subcommand)]
        scenario: Scenario,
    },
    /// Rerun the command recorded in a JSON report.
    Report(ReportArgs),
}

impl Verb {
    pub fn name(&self) -> &'static str {
        match self {
            Verb::Power { .. } => "power",
            Verb::Mde { .. } => "mde",
            Verb::Fit { .. } => "fit",
            Verb::Simulate { .. } => "simulate",
            Verb::Report(_) => "report",
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Scenario {
    /// Paired classifiers compared with McNemar's test (or F1 randomization).
    Accuracy(AccuracyArgs),
    /// Two MT systems compared on corpus BLEU with a randomization test.
    Bleu(BleuArgs),
    /// Crossed worker/item Likert ratings under two conditions.
    Likert(LikertArgs),
    /// One-sample binomial test against 0.5.
    Binomial(BinomialArgs),
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Accuracy(_) => "accuracy",
            Scenario::Bleu(_) => "bleu",
            Scenario::Likert(_) => "likert",
            Scenario::Binomial(_) => "binomial",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Scenario::Accuracy(a) => &a.common,
            Scenario::Bleu(a) => &a.common,
            Scenario::Likert(a) => &a.common,
            Scenario::Binomial(a) => &a.common,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Significance level [default: 0.05]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Monte Carlo repetitions.
    #[arg(long, default_value_t = 10_000)]
    pub reps: u64,
    /// Base seed; every repetition draws from its own stream.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads (falls back to POWCHECK_THREADS). Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Read probability flags as percentages (92 rather than 0.92).
    #[arg(long)]
    pub percent: bool,
    /// Target power for `mde` [default: 0.8]
    #[arg(long)]
    pub target_power: Option<f64>,
    /// Comma-separated sizes for a power curve.
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<u64>>,
    /// Comma-separated effects for a power curve.
    #[arg(long, value_delimiter = ',')]
    pub effect_grid: Option<Vec<f64>>,
}

impl Common {
    /// A probability-valued flag, rescaled under `--percent` and checked
    /// against `[lo, hi]`.
    pub fn prob(&self, name: &str, v: f64, lo: f64, hi: f64) -> CliResult<f64> {
        let x = if self.percent { v / 100.0 } else { v };
        if !x.is_finite() || x < lo || x > hi {
            let shown = if self.percent { format!("{v}%") } else { format!("{v}") };
            return Err(CliError::param(format!("--{name} {shown} is outside [{lo}, {hi}]")));
        }
        Ok(x)
    }

    pub fn alpha(&self) -> CliResult<f64> {
        match self.alpha {
            Some(a) => {
                let a = self.prob("alpha", a, 0.0, 1.0)?;
                if a == 0.0 || a == 1.0 {
                    return Err(CliError::param("--alpha must lie strictly between 0 and 1"));
                }
                Ok(a)
            }
            None => Ok(0.05),
        }
    }

    pub fn target_power(&self) -> CliResult<f64> {
        match self.target_power {
            Some(t) => self.prob("target-power", t, 0.0, 1.0),
            None => Ok(0.8),
        }
    }

    pub fn has_grid(&self) -> bool {
        self.n_grid.is_some() || self.effect_grid.is_some()
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    /// Exact conditional binomial test on the discordant pairs.
    Exact,
    /// Chi-square statistic without continuity correction.
    ChiSquare,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Accuracy,
    F1,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PriorName {
    Glue,
    Squad2,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Simulation,
    Normal,
}

#[derive(Args, Debug)]
pub struct AccuracyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of paired test instances.
    #[arg(long)]
    pub n: Option<u64>,
    /// Accuracy difference, model 2 minus model 1.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Probability that both models are right or both wrong.
    #[arg(long)]
    pub agreement: Option<f64>,
    /// Predictions of model 1: labels when --gold is given, else 0/1 correctness.
    #[arg(long, requires = "pred_b")]
    pub pred_a: Option<PathBuf>,
    #[arg(long, requires = "pred_a")]
    pub pred_b: Option<PathBuf>,
    /// Gold labels, one per line.
    #[arg(long, requires = "pred_a")]
    pub gold: Option<PathBuf>,
    /// Regression prior for agreement (and effect size).
    #[arg(long, value_enum, conflicts_with = "overlap_model")]
    pub prior: Option<PriorName>,
    /// JSON overlap model on predictors min_acc, acc_diff (see `fit accuracy --regression`).
    #[arg(long)]
    pub overlap_model: Option<PathBuf>,
    /// Accuracy of the current best model.
    #[arg(long)]
    pub sota: Option<f64>,
    /// Task used by the effect-size prior when --delta is absent.
    #[arg(long)]
    pub task: Option<String>,
    /// MDE bounds without any agreement prior.
    #[arg(long, conflicts_with_all = ["prior", "overlap_model", "agreement"])]
    pub no_prior: bool,
    /// How --no-prior evaluates power.
    #[arg(long, value_enum, default_value_t = Method::Simulation)]
    pub method: Method,
    #[arg(long, value_enum, default_value_t = Variant::Exact)]
    pub variant: Variant,
    #[arg(long, value_enum, default_value_t = Metric::Accuracy)]
    pub metric: Metric,
    /// Randomizations per repetition for F1.
    #[arg(long, default_value_t = 1000)]
    pub randomizations: u64,
    /// Regression data (CSV with a header) for `fit accuracy`.
    #[arg(long)]
    pub regression: Option<PathBuf>,
    /// Target column of --regression; every other column is a predictor.
    #[arg(long, default_value = "overlap")]
    pub target: String,
}

#[derive(Args, Debug)]
pub struct BleuArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of test sentences.
    #[arg(long)]
    pub n: Option<u64>,
    /// BLEU(A) - BLEU(B) in BLEU points.
    #[arg(long, allow_hyphen_values = true)]
    pub delta_bleu: Option<f64>,
    /// Fraction of sentences whose swap has no effect.
    #[arg(long)]
    pub p0: Option<f64>,
    /// Laplace scale normalised for corpus size.
    #[arg(long)]
    pub b0: Option<f64>,
    /// References, one sentence per line.
    #[arg(long = "ref", requires_all = ["hyp_a", "hyp_b"])]
    pub reference: Option<PathBuf>,
    #[arg(long, requires = "reference")]
    pub hyp_a: Option<PathBuf>,
    #[arg(long, requires = "reference")]
    pub hyp_b: Option<PathBuf>,
    /// Randomizations per test.
    #[arg(long, default_value_t = 1000)]
    pub randomizations: u64,
    /// Swap effects at or below this magnitude count as zero.
    #[arg(long, default_value_t = 1e-8)]
    pub zero_tol: f64,
    /// Random subsets used to probe additivity of swap effects.
    #[arg(long, default_value_t = 1000)]
    pub probe_subsets: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PresetName {
    High,
    Low,
}

#[derive(Args, Debug)]
pub struct LikertArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub items: Option<usize>,
    /// Condition effect on the rating scale (overrides the fitted or file value).
    #[arg(long, allow_hyphen_values = true)]
    pub effect: Option<f64>,
    /// Baseline intercept used with --preset.
    #[arg(long, default_value_t = 0.5)]
    pub beta0: f64,
    #[arg(long, value_enum, conflicts_with_all = ["params", "ratings"])]
    pub preset: Option<PresetName>,
    /// JSON with beta0, beta1, sigma_w0, sigma_w1, sigma_i0, sigma_i1, sigma_e.
    #[arg(long, conflicts_with = "ratings")]
    pub params: Option<PathBuf>,
    /// CSV with columns worker,item,condition,rating.
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    /// Condition label treated as the treatment in --ratings.
    #[arg(long)]
    pub treatment: Option<String>,
}

#[derive(Args, Debug)]
pub struct BinomialArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub n: Option<u64>,
    /// Success probability under the alternative.
    #[arg(long)]
    pub prob: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// A JSON report written by powcheck.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Compare the rerun against the input and fail if they differ.
    #[arg(long)]
    pub check: bool,
}

pub fn require<T: Copy>(v: Option<T>, flag: &str, what: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::param(format!("--{flag} is required {what}")))
}
