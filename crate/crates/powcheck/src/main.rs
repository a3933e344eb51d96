mod cli;
mod error;
mod io;
mod report;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use powcheck_core::SimulationConfig;

use cli::{Cli, Format, ReportArgs, Scenario, Verb};
use error::{CliError, CliResult};
use scenario::{Action, Ctx};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args_os().map(|a| a.to_string_lossy().into_owned()).collect();
    ExitCode::from(run(&argv))
}

/// Runs one command line and returns the process exit code: 0 on success,
/// 2 for parameter and input errors, 1 for IO and runtime failures.
pub fn run(argv: &[String]) -> u8 {
    match dispatch(argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.line());
            e.exit_code()
        }
    }
}

fn parse(argv: &[String]) -> CliResult<Option<Cli>> {
    match Cli::try_parse_from(argv) {
        Ok(c) => Ok(Some(c)),
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            Ok(None)
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            Err(CliError::param(first.trim_start_matches("error: ")))
        }
    }
}

fn dispatch(argv: &[String]) -> CliResult<()> {
    let Some(cli) = parse(argv)? else {
        return Ok(());
    };
    let args = argv.get(1..).unwrap_or_default();
    match cli.verb {
        Verb::Report(r) => rerun(&r),
        verb => {
            let (text, out) = execute(verb, args)?;
            io::write_output(out.as_deref(), &text)
        }
    }
}

fn configure_threads(flag: Option<usize>) -> CliResult<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("POWCHECK_THREADS") {
            Ok(v) if !v.trim().is_empty() => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::param(format!("POWCHECK_THREADS=`{v}` is not a thread count")))?,
            ),
            _ => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::param("--threads must be at least 1"));
        }
        // A second call (a report rerun) keeps the pool already built.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Computes and renders a scenario verb; returns the report text and the
/// requested output path.
fn execute(verb: Verb, args: &[String]) -> CliResult<(String, Option<PathBuf>)> {
    let verb_name = verb.name();
    let (action, scenario) = match verb {
        Verb::Power { scenario } => (Action::Power, scenario),
        Verb::Mde { scenario } => (Action::Mde, scenario),
        Verb::Fit { scenario } => (Action::Fit, scenario),
        Verb::Simulate { scenario } => (Action::Simulate, scenario),
        Verb::Report(_) => return Err(CliError::param("a report cannot rerun another `report` command")),
    };
    let common = scenario.common();
    configure_threads(common.threads)?;
    if action == Action::Fit && common.format == Format::Csv {
        return Err(CliError::param("`fit` reports are JSON only; drop --format csv"));
    }
    if action != Action::Power && common.has_grid() {
        return Err(CliError::param("--n-grid and --effect-grid only apply to `power`"));
    }
    let config = SimulationConfig::new(common.alpha()?, common.reps, common.seed)?;
    eprintln!("seed: {}", common.seed);
    let ctx = Ctx { action, common, config };
    let outcome = match &scenario {
        Scenario::Accuracy(a) => scenario::accuracy::run(a, &ctx)?,
        Scenario::Bleu(a) => scenario::bleu::run(a, &ctx)?,
        Scenario::Likert(a) => scenario::likert::run(a, &ctx)?,
        Scenario::Binomial(a) => scenario::binomial::run(a, &ctx)?,
    };
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    let prov = report::provenance(report::normalized_command(args, Some(common.seed)));
    let text = report::render(verb_name, scenario.name(), &prov, &outcome, common.format)?;
    Ok((text, common.output.clone()))
}

fn rerun(r: &ReportArgs) -> CliResult<()> {
    configure_threads(r.threads)?;
    let original = io::read_text(&r.input)?;
    let doc: serde_json::Value = serde_json::from_str(&original)
        .map_err(|e| CliError::param(format!("{}: not a JSON report: {e}", r.input.display())))?;
    let prov: report::Provenance = serde_json::from_value(doc["provenance"].clone())
        .map_err(|e| CliError::param(format!("{}: missing provenance: {e}", r.input.display())))?;
    let mut argv = vec![prov.tool.clone()];
    argv.extend(prov.command.iter().cloned());
    let Some(cli) = parse(&argv)? else {
        return Err(CliError::param("recorded command does not run a computation"));
    };
    let (text, _) = execute(cli.verb, &prov.command)?;
    if r.check && text != original {
        return Err(CliError::runtime(format!("rerun does not reproduce {}", r.input.display())));
    }
    if r.check && r.output.is_none() {
        eprintln!("reproduced {}", r.input.display());
        return Ok(());
    }
    io::write_output(r.output.as_deref(), &text)
}
