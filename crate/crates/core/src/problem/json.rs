//! JSON problem format, mainly for test fixtures and script interop.
//!
//! Schema:
//!
//! ```json
//! {
//!   "c": [1.0, 2.0],
//!   "A": {"rows": 1, "cols": 2, "data": [[0, 0, 1.0], [0, 1, 1.0]]},
//!   "b": [1.0],
//!   "G": {"rows": 0, "cols": 2, "data": []},
//!   "h": [],
//!   "l": [0.0, "-inf"],
//!   "u": ["inf", 5.0],
//!   "storage": "sparse",
//!   "objective_offset": 0.0
//! }
//! ```
//!
//! Matrices are triplet lists; infinite bounds use the string sentinels
//! `"inf"` / `"-inf"`. `storage` ("dense" | "sparse", default sparse) and
//! `objective_offset` (default 0) are optional.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ConstraintMatrix, Storage};
use crate::problem::LpProblem;

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    data: Vec<(usize, usize, f64)>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BoundJson {
    Num(f64),
    Sym(String),
}

#[derive(Serialize, Deserialize)]
struct ProblemJson {
    c: Vec<f64>,
    #[serde(rename = "A")]
    a: MatrixJson,
    b: Vec<f64>,
    #[serde(rename = "G")]
    g: MatrixJson,
    h: Vec<f64>,
    l: Vec<BoundJson>,
    u: Vec<BoundJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    storage: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    objective_offset: Option<f64>,
}

fn bound_to_f64(b: &BoundJson) -> Result<f64> {
    match b {
        BoundJson::Num(v) => Ok(*v),
        BoundJson::Sym(s) => match s.as_str() {
            "inf" | "+inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            other => Err(Error::InvalidParameter(format!(
                "unknown bound sentinel '{other}' (expected \"inf\" or \"-inf\")"
            ))),
        },
    }
}

fn f64_to_bound(v: f64) -> BoundJson {
    if v == f64::INFINITY {
        BoundJson::Sym("inf".into())
    } else if v == f64::NEG_INFINITY {
        BoundJson::Sym("-inf".into())
    } else {
        BoundJson::Num(v)
    }
}

fn matrix_from_json(m: &MatrixJson, storage: Storage) -> Result<ConstraintMatrix> {
    match storage {
        Storage::SparseCsr => ConstraintMatrix::sparse_from_triplets(m.rows, m.cols, &m.data),
        Storage::Dense => {
            let mut rows = vec![vec![0.0; m.cols]; m.rows];
            for &(i, j, v) in &m.data {
                if i >= m.rows || j >= m.cols {
                    return Err(Error::DimensionMismatch {
                        context: "JSON matrix triplet",
                        expected: m.rows.max(m.cols),
                        actual: i.max(j),
                    });
                }
                rows[i][j] += v;
            }
            if m.rows == 0 {
                return Ok(ConstraintMatrix::empty(Storage::Dense, m.cols));
            }
            ConstraintMatrix::dense_from_rows(&rows)
        }
    }
}

fn matrix_to_json(m: &ConstraintMatrix) -> MatrixJson {
    let mut data = Vec::with_capacity(m.nnz());
    m.for_each_entry(|i, j, v| {
        if v != 0.0 {
            data.push((i, j, v));
        }
    });
    MatrixJson {
        rows: m.nrows(),
        cols: m.ncols(),
        data,
    }
}

/// Reads a problem from its JSON representation.
pub fn parse_problem_json(text: &str) -> Result<LpProblem> {
    let doc: ProblemJson = serde_json::from_str(text)?;
    let storage = match doc.storage.as_deref() {
        None | Some("sparse") => Storage::SparseCsr,
        Some("dense") => Storage::Dense,
        Some(other) => {
            return Err(Error::InvalidParameter(format!(
                "unknown storage '{other}' (expected \"dense\" or \"sparse\")"
            )))
        }
    };
    let lower = doc.l.iter().map(bound_to_f64).collect::<Result<Vec<_>>>()?;
    let upper = doc.u.iter().map(bound_to_f64).collect::<Result<Vec<_>>>()?;
    let mut p = LpProblem::new(
        doc.c,
        matrix_from_json(&doc.a, storage)?,
        doc.b,
        matrix_from_json(&doc.g, storage)?,
        doc.h,
        lower,
        upper,
    );
    p.objective_offset = doc.objective_offset.unwrap_or(0.0);
    Ok(p)
}

/// Serializes a problem to the JSON format.
pub fn write_problem_json(p: &LpProblem) -> Result<String> {
    let doc = ProblemJson {
        c: p.objective.clone(),
        a: matrix_to_json(&p.eq_matrix),
        b: p.eq_rhs.clone(),
        g: matrix_to_json(&p.ineq_matrix),
        h: p.ineq_rhs.clone(),
        l: p.lower.iter().map(|&v| f64_to_bound(v)).collect(),
        u: p.upper.iter().map(|&v| f64_to_bound(v)).collect(),
        storage: Some(match p.storage() {
            Storage::Dense => "dense".into(),
            Storage::SparseCsr => "sparse".into(),
        }),
        objective_offset: Some(p.objective_offset),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::generators::gen_knapsack_seeded;
    use crate::problem::validate_problem;

    #[test]
    fn roundtrip_preserves_problem() {
        let p = gen_knapsack_seeded(5, 2, 9).unwrap();
        let text = write_problem_json(&p).unwrap();
        let q = parse_problem_json(&text).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn parses_infinity_sentinels() {
        let text = r#"{
            "c": [1.0],
            "A": {"rows": 0, "cols": 1, "data": []},
            "b": [],
            "G": {"rows": 1, "cols": 1, "data": [[0, 0, 2.0]]},
            "h": [2.0],
            "l": ["-inf"],
            "u": ["inf"]
        }"#;
        let p = parse_problem_json(text).unwrap();
        assert_eq!(p.lower, vec![f64::NEG_INFINITY]);
        assert_eq!(p.upper, vec![f64::INFINITY]);
        assert_eq!(p.storage(), Storage::SparseCsr);
        assert!(validate_problem(&p).is_empty());
    }

    #[test]
    fn rejects_unknown_sentinel() {
        let text = r#"{
            "c": [1.0],
            "A": {"rows": 0, "cols": 1, "data": []},
            "b": [],
            "G": {"rows": 0, "cols": 1, "data": []},
            "h": [],
            "l": ["minus-infinity"],
            "u": [1.0]
        }"#;
        assert!(parse_problem_json(text).is_err());
    }

    #[test]
    fn rejects_malformed_document() {
        assert!(parse_problem_json("{\"c\": [1.0]}").is_err());
    }
}
