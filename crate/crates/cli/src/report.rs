//! Merging metrics and summary files into one table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::commands::row_from_run;
use crate::error::{CliError, Result};
use crate::output::{to_json, write_atomic, Row, RunFile, TableFile, SCHEMA_VERSION};

fn check_schema(path: &Path, value: &Value) -> Result<()> {
    let version = value
        .get("schema_version")
        .ok_or_else(|| CliError::Config(format!("{}: missing field `schema_version`", path.display())))?
        .as_str()
        .ok_or_else(|| CliError::Config(format!("{}: `schema_version` is not a string", path.display())))?;
    let major = version.split('.').next().unwrap_or_default();
    let expected = SCHEMA_VERSION.split('.').next().unwrap_or_default();
    if major != expected {
        return Err(CliError::Config(format!(
            "{}: unsupported schema_version {version} (expected {expected}.x)",
            path.display()
        )));
    }
    Ok(())
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path, value: Value) -> Result<T> {
    // serde_json names the missing or malformed field in its message
    serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Rows from one file: a single-run metrics file gives one row, a bench or
/// report file gives its rows.
pub fn read_rows(path: &Path) -> Result<(Vec<Row>, Vec<crate::output::Failure>)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    check_schema(path, &value)?;
    let kind = value
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| CliError::Config(format!("{}: missing field `kind`", path.display())))?
        .to_owned();
    match kind.as_str() {
        "run" => {
            let f: RunFile = parse(path, value)?;
            Ok((vec![row_from_run(&f)], Vec::new()))
        }
        "bench" | "report" => {
            let f: TableFile = parse(path, value)?;
            Ok((f.rows, f.failures))
        }
        other => Err(CliError::Config(format!("{}: unknown kind `{other}`", path.display()))),
    }
}

/// Expands directories into their `*.json` files, sorted.
fn expand(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| CliError::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

/// Reads every input and merges rows. Identical rows seen twice (a file and
/// a report that already contains it) are kept once, so re-running on its own
/// output changes nothing.
pub fn merge(inputs: &[PathBuf]) -> Result<TableFile> {
    let files = expand(inputs)?;
    if files.is_empty() {
        return Err(CliError::Config("no input files".into()));
    }
    let mut rows: Vec<Row> = Vec::new();
    let mut failures = Vec::new();
    for f in &files {
        let (r, fl) = read_rows(f)?;
        for row in r {
            if !rows.contains(&row) {
                rows.push(row);
            }
        }
        for x in fl {
            if !failures.contains(&x) {
                failures.push(x);
            }
        }
    }
    rows.sort_by(|a, b| (&a.target, &a.algo).cmp(&(&b.target, &b.algo)));
    Ok(TableFile {
        schema_version: SCHEMA_VERSION.into(),
        kind: "report".into(),
        rows,
        failures,
    })
}

pub fn render_table(rows: &[Row]) -> String {
    let header = [
        "target", "algo", "n", "AR", "ESS", "ESS min", "ESJD", "Eval%", "SD", "time (s)",
    ];
    let body: Vec<[String; 10]> = rows
        .iter()
        .map(|r| {
            [
                r.target.clone(),
                r.algo.clone(),
                r.replicates.to_string(),
                format!("{:.3}", r.acceptance_rate.mean),
                format!("{:.1}", r.ess.mean),
                format!("{:.1}", r.ess_min.mean),
                format!("{:.3e}", r.esjd.mean),
                format!("{:.1}", r.eval_pct.mean),
                format!("{:.3e}", r.sd.mean),
                format!("{:.2}", r.wall_clock_seconds),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for cells in &body {
        for (w, c) in widths.iter_mut().zip(cells) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[&str]| {
        for (i, (c, w)) in cells.iter().zip(widths).enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            // text columns left-aligned, numbers right-aligned
            if i < 2 {
                write!(out, "{c:<w$}").unwrap();
            } else {
                write!(out, "{c:>w$}").unwrap();
            }
        }
        out.push('\n');
    };
    line(&mut out, &header);
    for cells in &body {
        line(&mut out, &cells.each_ref().map(String::as_str));
    }
    out
}

pub fn cmd_report(inputs: &[PathBuf], json: Option<&Path>) -> Result<TableFile> {
    let table = merge(inputs)?;
    print!("{}", render_table(&table.rows));
    if let Some(path) = json {
        write_atomic(path, &to_json(&table))?;
    }
    Ok(table)
}
