use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use powcheck_core::likert::{Condition, Rating, RatingsTable};
use serde::de::DeserializeOwned;

use crate::error::{CliError, CliResult};

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Lines without their terminators; a trailing newline does not add an
/// empty line.
pub fn read_lines(path: &Path) -> CliResult<Vec<String>> {
    Ok(read_text(path)?.lines().map(String::from).collect())
}

/// Trimmed, non-blank lines (label and correctness files).
pub fn read_values(path: &Path) -> CliResult<Vec<String>> {
    let lines = read_lines(path)?;
    let mut out = Vec::with_capacity(lines.len());
    for (i, l) in lines.iter().enumerate() {
        let t = l.trim();
        if t.is_empty() {
            if lines[i..].iter().all(|r| r.trim().is_empty()) {
                break;
            }
            return Err(CliError::param(format!("{}:{}: blank line", path.display(), i + 1)));
        }
        out.push(t.to_string());
    }
    Ok(out)
}

pub fn read_correctness(path: &Path) -> CliResult<Vec<bool>> {
    read_values(path)?
        .iter()
        .enumerate()
        .map(|(i, v)| match v.as_str() {
            "1" | "true" => Ok(true),
            "0" | "false" => Ok(false),
            _ => Err(CliError::param(format!(
                "{}:{}: expected 0 or 1, found `{v}` (pass --gold to compare labels)",
                path.display(),
                i + 1
            ))),
        })
        .collect()
}

/// Maps string labels to dense class indices in sorted label order.
pub fn index_labels(columns: [&[String]; 3]) -> (Vec<String>, [Vec<u16>; 3]) {
    let mut names: Vec<String> = columns.iter().flat_map(|c| c.iter().cloned()).collect();
    names.sort();
    names.dedup();
    let idx = |c: &[String]| c.iter().map(|l| names.binary_search(l).unwrap() as u16).collect();
    let out = [idx(columns[0]), idx(columns[1]), idx(columns[2])];
    (names, out)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::param(format!("{}: {e}", path.display())))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.kind() {
        csv::ErrorKind::Io(_) => CliError::runtime(format!("{}: {e}", path.display())),
        _ => CliError::param(format!("{}: {e}", path.display())),
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct RatingsInfo {
    pub baseline: String,
    pub treatment: String,
    pub workers: usize,
    pub items: usize,
    pub rows: usize,
}

#[derive(serde::Deserialize)]
struct RatingRow {
    worker: String,
    item: String,
    condition: String,
    rating: f64,
}

/// Reads `worker,item,condition,rating`. Workers and items may be any
/// strings; exactly two condition labels are allowed. Without `treatment`
/// the labels `treatment`/`baseline`, `1`/`0` and `0.5`/`-0.5` are
/// recognised; otherwise the label sorting last is the treatment.
pub fn read_ratings(path: &Path, treatment: Option<&str>) -> CliResult<(RatingsTable, RatingsInfo)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| csv_err(path, e))?;
    let mut raw = Vec::new();
    for row in rdr.deserialize::<RatingRow>() {
        raw.push(row.map_err(|e| csv_err(path, e))?);
    }
    if raw.is_empty() {
        return Err(CliError::param(format!("{}: no ratings", path.display())));
    }
    let mut labels: Vec<&str> = raw.iter().map(|r| r.condition.as_str()).collect();
    labels.sort_unstable();
    labels.dedup();
    if labels.len() != 2 {
        return Err(CliError::param(format!(
            "{}: expected exactly two condition labels, found {}",
            path.display(),
            labels.len()
        )));
    }
    let treat = match treatment {
        Some(t) if labels.contains(&t) => t,
        Some(t) => {
            return Err(CliError::param(format!("--treatment `{t}` is not one of {labels:?}")));
        }
        None => {
            let known = [("baseline", "treatment"), ("0", "1"), ("-0.5", "0.5")];
            known
                .iter()
                .find(|(b, t)| labels.contains(b) && labels.contains(t))
                .map(|(_, t)| *t)
                .unwrap_or(labels[1])
        }
    };
    let base = if labels[0] == treat { labels[1] } else { labels[0] };
    let ids = |f: fn(&RatingRow) -> &str| -> BTreeMap<&str, u32> {
        let mut keys: Vec<&str> = raw.iter().map(f).collect();
        keys.sort_unstable();
        keys.dedup();
        keys.into_iter().enumerate().map(|(i, k)| (k, i as u32)).collect()
    };
    let workers = ids(|r| r.worker.as_str());
    let items = ids(|r| r.item.as_str());
    let rows: Vec<Rating> = raw
        .iter()
        .map(|r| Rating {
            worker: workers[r.worker.as_str()],
            item: items[r.item.as_str()],
            condition: if r.condition == treat { Condition::Treatment } else { Condition::Baseline },
            rating: r.rating,
        })
        .collect();
    let info = RatingsInfo {
        baseline: base.to_string(),
        treatment: treat.to_string(),
        workers: workers.len(),
        items: items.len(),
        rows: rows.len(),
    };
    Ok((RatingsTable::new(rows)?, info))
}

pub fn ratings_csv(table: &RatingsTable) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["worker", "item", "condition", "rating"]).map_err(|e| CliError::runtime(e.to_string()))?;
    for r in table.rows() {
        let cond = match r.condition {
            Condition::Baseline => "baseline",
            Condition::Treatment => "treatment",
        };
        w.write_record([format!("w{}", r.worker), format!("i{}", r.item), cond.to_string(), r.rating.to_string()])
            .map_err(|e| CliError::runtime(e.to_string()))?;
    }
    finish_csv(w)
}

pub fn finish_csv(w: csv::Writer<Vec<u8>>) -> CliResult<String> {
    let bytes = w.into_inner().map_err(|e| CliError::runtime(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::runtime(e.to_string()))
}

pub struct Regression {
    pub predictors: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

/// Numeric CSV with a header; `target` names the response column.
pub fn read_regression(path: &Path, target: &str) -> CliResult<Regression> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| csv_err(path, e))?;
    let header: Vec<String> = rdr.headers().map_err(|e| csv_err(path, e))?.iter().map(String::from).collect();
    let t = header
        .iter()
        .position(|h| h == target)
        .ok_or_else(|| CliError::param(format!("{}: no column `{target}` (columns: {})", path.display(), header.join(", "))))?;
    let mut out = Regression {
        predictors: header.iter().enumerate().filter(|(i, _)| *i != t).map(|(_, h)| h.clone()).collect(),
        rows: Vec::new(),
        targets: Vec::new(),
    };
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let mut row = Vec::with_capacity(header.len() - 1);
        for (i, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::param(format!("{}:{}: `{field}` is not a number", path.display(), line + 2))
            })?;
            if i == t {
                out.targets.push(v);
            } else {
                row.push(v);
            }
        }
        out.rows.push(row);
    }
    Ok(out)
}

pub fn write_output(path: Option<&Path>, contents: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, contents).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::runtime(format!("stdout: {e}")))
        }
    }
}
