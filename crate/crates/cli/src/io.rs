//! File plumbing for the CLI: problem files in either format, cost CSVs,
//! warm-start vectors, and the JSON result document.

use std::fs;
use std::path::{Path, PathBuf};

use folp_core::problem::{json, mps};
use folp_core::{LpProblem, SolveResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Mps,
    Json,
}

/// Picks the format from the flag or the file extension.
pub fn resolve_format(flag: Option<FileFormat>, path: &Path) -> Result<FileFormat, String> {
    if let Some(f) = flag {
        return Ok(f);
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("mps") | Some("MPS") => Ok(FileFormat::Mps),
        Some("json") | Some("JSON") => Ok(FileFormat::Json),
        other => Err(format!(
            "cannot infer problem format from extension {other:?}; pass --format mps|json"
        )),
    }
}

pub fn read_problem(path: &Path, format: FileFormat) -> Result<LpProblem, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let parsed = match format {
        FileFormat::Mps => mps::parse_mps_str(&text),
        FileFormat::Json => json::parse_problem_json(&text),
    };
    parsed.map_err(|e| format!("{}: {e}", path.display()))
}

pub fn render_problem(problem: &LpProblem, format: FileFormat) -> Result<String, String> {
    match format {
        FileFormat::Mps => Ok(mps::write_mps(problem)),
        FileFormat::Json => json::write_problem_json(problem).map_err(|e| e.to_string()),
    }
}

pub fn write_output(path: Option<&PathBuf>, content: &str) -> Result<(), String> {
    match path {
        Some(p) => fs::write(p, content).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

/// Reads a CSV of cost vectors, one vector per row; a header row is
/// detected (any non-numeric field in the first record) and skipped. All
/// rows must have the same width.
pub fn read_cost_csv(path: &Path) -> Result<Vec<Vec<f64>>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format!("{}: {e}", path.display()))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = record.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(row) => {
                if let Some(first) = rows.first() {
                    if row.len() != first.len() {
                        return Err(format!(
                            "{}: row {} has {} fields, expected {}",
                            path.display(),
                            idx + 1,
                            row.len(),
                            first.len()
                        ));
                    }
                }
                rows.push(row);
            }
            Err(e) => {
                if idx == 0 {
                    continue; // header row
                }
                return Err(format!("{}: row {}: {e}", path.display(), idx + 1));
            }
        }
    }
    if rows.is_empty() {
        return Err(format!("{}: no cost vectors found", path.display()));
    }
    Ok(rows)
}

/// Reads a whitespace-separated list of numbers (warm-start vectors).
pub fn read_vector_file(path: &Path) -> Result<Vec<f64>, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|e| format!("{}: '{tok}': {e}", path.display()))
        })
        .collect()
}

fn number(value: f64) -> serde_json::Value {
    if value.is_finite() {
        serde_json::Number::from_f64(value)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null)
    } else if value == f64::INFINITY {
        serde_json::Value::String("inf".into())
    } else if value == f64::NEG_INFINITY {
        serde_json::Value::String("-inf".into())
    } else {
        serde_json::Value::String("nan".into())
    }
}

/// The machine-readable result document.
pub fn result_document(result: &SolveResult) -> serde_json::Value {
    serde_json::json!({
        "status": result.status.as_str(),
        "objective": number(result.objective),
        "iterations": result.iterations,
        "restarts": result.restarts,
        "kkt": {
            "primal_residual": number(result.kkt.primal_residual),
            "dual_residual": number(result.kkt.dual_residual),
            "abs_gap": number(result.kkt.abs_gap),
            "rel_gap": number(result.kkt.rel_gap),
        },
        "x": result.primal_solution.iter().map(|&v| number(v)).collect::<Vec<_>>(),
        "y": result.dual_solution.iter().map(|&v| number(v)).collect::<Vec<_>>(),
    })
}
