//! Report documents. CSV carries the fixed columns of [`Row`]; JSON carries
//! the same rows plus the full result, parameters and the command line that
//! reproduces it.

use powcheck_core::PowerReport;
use serde::Serialize;
use serde_json::Value;

use crate::cli::Format;
use crate::error::{CliError, CliResult};
use crate::io::finish_csv;

pub const CSV_COLUMNS: [&str; 10] =
    ["scenario", "n", "effect", "alpha", "reps", "seed", "power", "mc_stderr", "type_m", "type_s"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub scenario: String,
    pub n: u64,
    pub effect: f64,
    pub alpha: f64,
    pub reps: u64,
    pub seed: u64,
    pub power: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub type_m: Option<f64>,
    pub type_s: Option<f64>,
}

impl Row {
    pub fn from_report(scenario: &str, r: &PowerReport) -> Self {
        Self {
            scenario: scenario.to_string(),
            n: r.n,
            effect: r.effect,
            alpha: r.alpha,
            reps: r.reps,
            seed: r.seed,
            power: Some(r.power),
            mc_stderr: Some(r.mc_stderr),
            type_m: r.type_m,
            type_s: r.type_s,
        }
    }
}

/// What a scenario handler hands back for rendering.
#[derive(Debug, Default)]
pub struct Outcome {
    pub parameters: Value,
    pub result: Value,
    pub rows: Vec<Row>,
    /// Data emitted as-is for `--format csv` (simulated datasets).
    pub table: Option<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    /// Arguments after the program name. Rerunning them reproduces the
    /// report byte for byte.
    pub command: Vec<String>,
}

#[derive(Serialize)]
struct Document<'a> {
    provenance: &'a Provenance,
    verb: &'a str,
    scenario: &'a str,
    parameters: &'a Value,
    rows: &'a [Row],
    result: &'a Value,
    warnings: &'a [String],
}

/// The recorded command: `--threads` and `--output` are dropped since they
/// cannot change the report, and the seed is made explicit.
pub fn normalized_command(args: &[String], seed: Option<u64>) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len() + 2);
    let mut it = args.iter();
    let mut has_seed = false;
    while let Some(a) = it.next() {
        match a.as_str() {
            "--threads" | "--output" | "-o" => {
                it.next();
            }
            s if s.starts_with("--threads=") || s.starts_with("--output=") => {}
            s if s.starts_with("-o") && s.len() > 2 && !s.starts_with("--") => {}
            s => {
                if s == "--seed" || s.starts_with("--seed=") {
                    has_seed = true;
                }
                out.push(a.clone());
            }
        }
    }
    if let (false, Some(seed)) = (has_seed, seed) {
        out.push("--seed".into());
        out.push(seed.to_string());
    }
    out
}

pub fn provenance(command: Vec<String>) -> Provenance {
    Provenance {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command,
    }
}

pub fn render(verb: &str, scenario: &str, prov: &Provenance, out: &Outcome, format: Format) -> CliResult<String> {
    match format {
        Format::Json => {
            let doc = Document {
                provenance: prov,
                verb,
                scenario,
                parameters: &out.parameters,
                rows: &out.rows,
                result: &out.result,
                warnings: &out.warnings,
            };
            let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::runtime(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            if let Some(t) = &out.table {
                return Ok(t.clone());
            }
            rows_csv(&out.rows)
        }
    }
}

pub fn rows_csv(rows: &[Row]) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).map_err(|e| CliError::runtime(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::runtime(e.to_string()))?;
    }
    finish_csv(w)
}
