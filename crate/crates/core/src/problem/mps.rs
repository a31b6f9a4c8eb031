//! Free-format MPS reader and writer.
//!
//! Supported sections: NAME, ROWS (N/E/G/L), COLUMNS, RHS, RANGES, BOUNDS,
//! ENDATA. Section markers start in the first column; data lines are
//! indented; `*` starts a comment line.
//!
//! Conventions on the way in:
//! - the first N row is the objective; later N rows are free rows whose
//!   entries are ignored,
//! - L rows are negated into ≥ rows so every stored inequality reads ≥,
//! - a RANGES entry turns its row into a two-sided constraint, stored as a
//!   pair of ≥ rows,
//! - default bounds are `0 ≤ x ≤ +∞`; bound keys LO, UP, FX, FR, MI, PL
//!   and BV (binary relaxed to `[0, 1]`) are recognized,
//! - an RHS entry on the objective row becomes an objective offset with the
//!   usual sign flip (`offset = −value`).
//!
//! Integer markers are rejected: this solver handles continuous LPs only.

use std::collections::HashMap;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::linalg::ConstraintMatrix;
use crate::problem::LpProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowSense {
    Objective,
    FreeRow,
    Equal,
    GreaterEq,
    LessEq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Name,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_value(token: &str, line: usize) -> Result<f64> {
    token
        .parse::<f64>()
        .map_err(|_| err(line, format!("expected a number, got '{token}'")))
}

struct MpsBuilder {
    row_order: Vec<String>,
    row_sense: Vec<RowSense>,
    row_index: HashMap<String, usize>,
    objective_row: Option<usize>,
    col_order: Vec<String>,
    col_index: HashMap<String, usize>,
    /// (row, col, value) for constraint rows; objective entries are kept
    /// separately.
    entries: Vec<(usize, usize, f64)>,
    objective_entries: Vec<(usize, f64)>,
    rhs: HashMap<usize, f64>,
    ranges: HashMap<usize, f64>,
    objective_offset: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl MpsBuilder {
    fn new() -> Self {
        Self {
            row_order: Vec::new(),
            row_sense: Vec::new(),
            row_index: HashMap::new(),
            objective_row: None,
            col_order: Vec::new(),
            col_index: HashMap::new(),
            entries: Vec::new(),
            objective_entries: Vec::new(),
            rhs: HashMap::new(),
            ranges: HashMap::new(),
            objective_offset: 0.0,
            lower: Vec::new(),
            upper: Vec::new(),
        }
    }

    fn add_row(&mut self, sense_token: &str, name: &str, line: usize) -> Result<()> {
        if self.row_index.contains_key(name) {
            return Err(err(line, format!("duplicate row name '{name}'")));
        }
        let sense = match sense_token.to_ascii_uppercase().as_str() {
            "N" => {
                if self.objective_row.is_none() {
                    self.objective_row = Some(self.row_order.len());
                    RowSense::Objective
                } else {
                    RowSense::FreeRow
                }
            }
            "E" => RowSense::Equal,
            "G" => RowSense::GreaterEq,
            "L" => RowSense::LessEq,
            other => return Err(err(line, format!("unknown row sense '{other}'"))),
        };
        self.row_index
            .insert(name.to_string(), self.row_order.len());
        self.row_order.push(name.to_string());
        self.row_sense.push(sense);
        Ok(())
    }

    fn column(&mut self, name: &str) -> usize {
        if let Some(&j) = self.col_index.get(name) {
            return j;
        }
        let j = self.col_order.len();
        self.col_index.insert(name.to_string(), j);
        self.col_order.push(name.to_string());
        self.lower.push(0.0);
        self.upper.push(f64::INFINITY);
        j
    }

    fn row(&self, name: &str, line: usize) -> Result<usize> {
        self.row_index
            .get(name)
            .copied()
            .ok_or_else(|| err(line, format!("unknown row name '{name}'")))
    }

    fn add_entry(&mut self, col: usize, row_name: &str, value: f64, line: usize) -> Result<()> {
        let r = self.row(row_name, line)?;
        match self.row_sense[r] {
            RowSense::Objective => self.objective_entries.push((col, value)),
            RowSense::FreeRow => {}
            _ => self.entries.push((r, col, value)),
        }
        Ok(())
    }

    fn add_rhs(&mut self, row_name: &str, value: f64, line: usize) -> Result<()> {
        let r = self.row(row_name, line)?;
        match self.row_sense[r] {
            // RHS on the objective row is the negated objective constant.
            RowSense::Objective => self.objective_offset = -value,
            RowSense::FreeRow => {}
            _ => {
                *self.rhs.entry(r).or_insert(0.0) = value;
            }
        }
        Ok(())
    }

    fn add_range(&mut self, row_name: &str, value: f64, line: usize) -> Result<()> {
        let r = self.row(row_name, line)?;
        if matches!(self.row_sense[r], RowSense::Objective | RowSense::FreeRow) {
            return Err(err(line, "RANGES entry on a free row"));
        }
        self.ranges.insert(r, value);
        Ok(())
    }

    fn apply_bound(
        &mut self,
        key: &str,
        col_name: &str,
        value: Option<f64>,
        line: usize,
    ) -> Result<()> {
        let j = *self
            .col_index
            .get(col_name)
            .ok_or_else(|| err(line, format!("bound on unknown column '{col_name}'")))?;
        let need = |v: Option<f64>| {
            v.ok_or_else(|| err(line, format!("bound key {key} requires a value")))
        };
        match key {
            "LO" => self.lower[j] = need(value)?,
            "UP" => self.upper[j] = need(value)?,
            "FX" => {
                let v = need(value)?;
                self.lower[j] = v;
                self.upper[j] = v;
            }
            "FR" => {
                self.lower[j] = f64::NEG_INFINITY;
                self.upper[j] = f64::INFINITY;
            }
            "MI" => self.lower[j] = f64::NEG_INFINITY,
            "PL" => self.upper[j] = f64::INFINITY,
            "BV" => {
                self.lower[j] = 0.0;
                self.upper[j] = 1.0;
            }
            other => return Err(err(line, format!("unknown bound key '{other}'"))),
        }
        Ok(())
    }

    fn finish(self) -> Result<LpProblem> {
        if self.objective_row.is_none() {
            return Err(err(0, "no objective (N) row"));
        }
        let n = self.col_order.len();

        // Constraint layout: every constraint row maps to one or two ≥ rows
        // or to one equality row, in file order.
        let mut ineq_triplets: Vec<(usize, usize, f64)> = Vec::new();
        let mut ineq_rhs: Vec<f64> = Vec::new();
        let mut eq_triplets: Vec<(usize, usize, f64)> = Vec::new();
        let mut eq_rhs: Vec<f64> = Vec::new();

        // Entries grouped by original row.
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.row_order.len()];
        for &(r, c, v) in &self.entries {
            per_row[r].push((c, v));
        }

        for r in 0..self.row_order.len() {
            let sense = self.row_sense[r];
            if matches!(sense, RowSense::Objective | RowSense::FreeRow) {
                continue;
            }
            let rhs = self.rhs.get(&r).copied().unwrap_or(0.0);
            let range = self.ranges.get(&r).copied();

            // Express the row as lo ≤ aᵀx ≤ hi with infinities where a side
            // is absent.
            let (lo, hi) = match (sense, range) {
                (RowSense::GreaterEq, None) => (rhs, f64::INFINITY),
                (RowSense::LessEq, None) => (f64::NEG_INFINITY, rhs),
                (RowSense::Equal, None) => (rhs, rhs),
                (RowSense::GreaterEq, Some(rg)) => (rhs, rhs + rg.abs()),
                (RowSense::LessEq, Some(rg)) => (rhs - rg.abs(), rhs),
                (RowSense::Equal, Some(rg)) => {
                    if rg >= 0.0 {
                        (rhs, rhs + rg)
                    } else {
                        (rhs + rg, rhs)
                    }
                }
                _ => unreachable!(),
            };

            if lo == hi {
                let row_id = eq_rhs.len();
                for &(c, v) in &per_row[r] {
                    eq_triplets.push((row_id, c, v));
                }
                eq_rhs.push(lo);
                continue;
            }
            if lo.is_finite() {
                let row_id = ineq_rhs.len();
                for &(c, v) in &per_row[r] {
                    ineq_triplets.push((row_id, c, v));
                }
                ineq_rhs.push(lo);
            }
            if hi.is_finite() {
                // aᵀx ≤ hi stored as (−a)ᵀx ≥ −hi.
                let row_id = ineq_rhs.len();
                for &(c, v) in &per_row[r] {
                    ineq_triplets.push((row_id, c, -v));
                }
                ineq_rhs.push(-hi);
            }
        }

        let mut objective = vec![0.0; n];
        for &(c, v) in &self.objective_entries {
            objective[c] += v;
        }

        let ineq_matrix =
            ConstraintMatrix::sparse_from_triplets(ineq_rhs.len(), n, &ineq_triplets)?;
        let eq_matrix = ConstraintMatrix::sparse_from_triplets(eq_rhs.len(), n, &eq_triplets)?;
        let mut problem = LpProblem::new(
            objective,
            eq_matrix,
            eq_rhs,
            ineq_matrix,
            ineq_rhs,
            self.lower,
            self.upper,
        );
        problem.objective_offset = self.objective_offset;
        Ok(problem)
    }
}

/// Parses a free-format MPS document from a reader.
pub fn parse_mps<R: BufRead>(reader: R) -> Result<LpProblem> {
    let mut builder = MpsBuilder::new();
    let mut section: Option<Section> = None;
    let mut ended = false;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if ended {
            break;
        }
        if line.trim().is_empty() || line.starts_with('*') {
            continue;
        }

        let indented = line.starts_with(|c: char| c.is_whitespace());
        let tokens: Vec<&str> = line.split_whitespace().collect();

        if !indented {
            let header = tokens[0].to_ascii_uppercase();
            section = Some(match header.as_str() {
                "NAME" => Section::Name,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => {
                    ended = true;
                    continue;
                }
                other => return Err(err(line_no, format!("unknown section '{other}'"))),
            });
            continue;
        }

        let Some(section) = section else {
            return Err(err(line_no, "data line before any section header"));
        };
        match section {
            Section::Name => {} // nothing to record
            Section::Rows => {
                if tokens.len() != 2 {
                    return Err(err(line_no, "ROWS line must be '<sense> <name>'"));
                }
                builder.add_row(tokens[0], tokens[1], line_no)?;
            }
            Section::Columns => {
                if tokens.len() >= 3 && tokens[1] == "'MARKER'" {
                    return Err(err(line_no, "integer markers are not supported"));
                }
                if tokens.len() != 3 && tokens.len() != 5 {
                    return Err(err(
                        line_no,
                        "COLUMNS line must be '<col> <row> <value> [<row> <value>]'",
                    ));
                }
                let col = builder.column(tokens[0]);
                let mut k = 1;
                while k + 2 <= tokens.len() {
                    let value = parse_value(tokens[k + 1], line_no)?;
                    builder.add_entry(col, tokens[k], value, line_no)?;
                    k += 2;
                }
            }
            Section::Rhs | Section::Ranges => {
                // An odd token count means the first token is a set name.
                let data = if tokens.len() % 2 == 1 {
                    &tokens[1..]
                } else {
                    &tokens[..]
                };
                if data.is_empty() || data.len() % 2 != 0 {
                    return Err(err(line_no, "expected '<row> <value>' pairs"));
                }
                for pair in data.chunks(2) {
                    let value = parse_value(pair[1], line_no)?;
                    if section == Section::Rhs {
                        builder.add_rhs(pair[0], value, line_no)?;
                    } else {
                        builder.add_range(pair[0], value, line_no)?;
                    }
                }
            }
            Section::Bounds => {
                let key = tokens[0].to_ascii_uppercase();
                let takes_value = matches!(key.as_str(), "LO" | "UP" | "FX");
                match (takes_value, tokens.len()) {
                    (true, 4) => {
                        let v = parse_value(tokens[3], line_no)?;
                        builder.apply_bound(&key, tokens[2], Some(v), line_no)?;
                    }
                    (true, 3) => {
                        let v = parse_value(tokens[2], line_no)?;
                        builder.apply_bound(&key, tokens[1], Some(v), line_no)?;
                    }
                    (false, 3) => builder.apply_bound(&key, tokens[2], None, line_no)?,
                    (false, 2) => builder.apply_bound(&key, tokens[1], None, line_no)?,
                    _ => return Err(err(line_no, format!("malformed BOUNDS line for key {key}"))),
                }
            }
        }
    }
    builder.finish()
}

/// Parses a free-format MPS document from a string.
pub fn parse_mps_str(text: &str) -> Result<LpProblem> {
    parse_mps(text.as_bytes())
}

/// Writes a problem as free-format MPS. Every column appears in COLUMNS
/// (objective coefficients are written even when zero) so parsing the
/// output reproduces the full variable set.
pub fn write_mps(p: &LpProblem) -> String {
    use std::fmt::Write;

    let m1 = p.num_inequalities();
    let m2 = p.num_equalities();
    let n = p.num_vars();
    let row_name = |i: usize| {
        if i < m1 {
            format!("G{}", i + 1)
        } else {
            format!("E{}", i - m1 + 1)
        }
    };
    let col_name = |j: usize| format!("X{}", j + 1);

    let mut out = String::new();
    out.push_str("NAME FOLP\nROWS\n N OBJ\n");
    for i in 0..m1 {
        let _ = writeln!(out, " G {}", row_name(i));
    }
    for i in 0..m2 {
        let _ = writeln!(out, " E {}", row_name(m1 + i));
    }

    // Group constraint entries by column.
    let mut per_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    p.ineq_matrix
        .for_each_entry(|i, j, v| per_col[j].push((i, v)));
    p.eq_matrix
        .for_each_entry(|i, j, v| per_col[j].push((m1 + i, v)));

    out.push_str("COLUMNS\n");
    for j in 0..n {
        let _ = writeln!(out, "    {} OBJ {}", col_name(j), p.objective[j]);
        for &(i, v) in &per_col[j] {
            let _ = writeln!(out, "    {} {} {}", col_name(j), row_name(i), v);
        }
    }

    out.push_str("RHS\n");
    if p.objective_offset != 0.0 {
        let _ = writeln!(out, "    RHS OBJ {}", -p.objective_offset);
    }
    for (i, &v) in p.ineq_rhs.iter().enumerate() {
        if v != 0.0 {
            let _ = writeln!(out, "    RHS {} {}", row_name(i), v);
        }
    }
    for (i, &v) in p.eq_rhs.iter().enumerate() {
        if v != 0.0 {
            let _ = writeln!(out, "    RHS {} {}", row_name(m1 + i), v);
        }
    }

    out.push_str("BOUNDS\n");
    for j in 0..n {
        let (l, u) = (p.lower[j], p.upper[j]);
        let name = col_name(j);
        if l == 0.0 && u == f64::INFINITY {
            continue;
        }
        if l == f64::NEG_INFINITY && u == f64::INFINITY {
            let _ = writeln!(out, "    FR BND {name}");
        } else if l == u {
            let _ = writeln!(out, "    FX BND {name} {l}");
        } else {
            if l == f64::NEG_INFINITY {
                let _ = writeln!(out, "    MI BND {name}");
            } else if l != 0.0 {
                let _ = writeln!(out, "    LO BND {name} {l}");
            }
            if u != f64::INFINITY {
                let _ = writeln!(out, "    UP BND {name} {u}");
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::validate_problem;
    use proptest::prelude::*;

    const TWO_VAR: &str = "\
NAME tiny
ROWS
 N COST
 G LIM
COLUMNS
    X COST 1 LIM 1
    Y COST 2 LIM 1
RHS
    RHS LIM 1
ENDATA
";

    #[test]
    fn parses_two_variable_example() {
        let p = parse_mps_str(TWO_VAR).unwrap();
        assert_eq!(p.objective, vec![1.0, 2.0]);
        assert_eq!(p.ineq_matrix.to_dense_rows(), vec![vec![1.0, 1.0]]);
        assert_eq!(p.ineq_rhs, vec![1.0]);
        assert_eq!(p.lower, vec![0.0, 0.0]);
        assert_eq!(p.upper, vec![f64::INFINITY, f64::INFINITY]);
        assert_eq!(p.num_equalities(), 0);
        assert!(validate_problem(&p).is_empty());
    }

    #[test]
    fn l_rows_are_negated() {
        let text = "\
ROWS
 N OBJ
 L CAP
COLUMNS
    X OBJ 1 CAP 2
RHS
    RHS CAP 10
ENDATA
";
        let p = parse_mps_str(text).unwrap();
        assert_eq!(p.ineq_matrix.to_dense_rows(), vec![vec![-2.0]]);
        assert_eq!(p.ineq_rhs, vec![-10.0]);
    }

    #[test]
    fn bound_keys() {
        let text = "\
ROWS
 N OBJ
COLUMNS
    A OBJ 1
    B OBJ 1
    C OBJ 1
    D OBJ 1
BOUNDS
    FR BND A
    BV BND B
    MI BND C
    UP BND C 5
    FX BND D 2.5
ENDATA
";
        let p = parse_mps_str(text).unwrap();
        assert_eq!(
            p.lower,
            vec![f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY, 2.5]
        );
        assert_eq!(p.upper, vec![f64::INFINITY, 1.0, 5.0, 2.5]);
    }

    #[test]
    fn objective_offset_from_rhs() {
        let text = "\
ROWS
 N OBJ
 E FIX
COLUMNS
    X OBJ 3 FIX 1
RHS
    RHS OBJ 7 FIX 2
ENDATA
";
        let p = parse_mps_str(text).unwrap();
        assert_eq!(p.objective_offset, -7.0);
        assert_eq!(p.eq_rhs, vec![2.0]);
    }

    #[test]
    fn ranges_split_rows() {
        // G row with range r: h ≤ ax ≤ h + |r| becomes two ≥ rows.
        let text = "\
ROWS
 N OBJ
 G R1
COLUMNS
    X OBJ 1 R1 1
RHS
    RHS R1 2
RANGES
    RNG R1 3
ENDATA
";
        let p = parse_mps_str(text).unwrap();
        assert_eq!(p.ineq_matrix.to_dense_rows(), vec![vec![1.0], vec![-1.0]]);
        assert_eq!(p.ineq_rhs, vec![2.0, -5.0]);
    }

    #[test]
    fn range_on_equality_row() {
        let text = "\
ROWS
 N OBJ
 E R1
COLUMNS
    X OBJ 1 R1 1
RHS
    RHS R1 2
RANGES
    RNG R1 -1
ENDATA
";
        let p = parse_mps_str(text).unwrap();
        // [1, 2]: x ≥ 1 and −x ≥ −2.
        assert_eq!(p.num_equalities(), 0);
        assert_eq!(p.ineq_rhs, vec![1.0, -2.0]);
    }

    #[test]
    fn error_unknown_section() {
        let e = parse_mps_str("GARBAGE\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }), "{e}");
    }

    #[test]
    fn error_duplicate_row() {
        let text = "\
ROWS
 N OBJ
 G R1
 G R1
ENDATA
";
        let e = parse_mps_str(text).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 4, .. }), "{e}");
    }

    #[test]
    fn error_bound_on_unknown_column() {
        let text = "\
ROWS
 N OBJ
COLUMNS
    X OBJ 1
BOUNDS
    UP BND Y 3
ENDATA
";
        let e = parse_mps_str(text).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 6, .. }), "{e}");
    }

    #[test]
    fn error_integer_marker() {
        let text = "\
ROWS
 N OBJ
COLUMNS
    M1 'MARKER' 'INTORG'
ENDATA
";
        assert!(parse_mps_str(text).is_err());
    }

    #[test]
    fn writer_roundtrip_on_fixed_problem() {
        let p = parse_mps_str(TWO_VAR).unwrap();
        let q = parse_mps_str(&write_mps(&p)).unwrap();
        assert_eq!(p, q);
    }

    prop_compose! {
        fn bound_pair()(kind in 0usize..5, a in -4.0f64..4.0, b in 0.0f64..4.0) -> (f64, f64) {
            match kind {
                0 => (0.0, f64::INFINITY),
                1 => (f64::NEG_INFINITY, f64::INFINITY),
                2 => (a, a + b),
                3 => (f64::NEG_INFINITY, a),
                _ => (a, f64::INFINITY),
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        // write → parse → write → parse is the identity on the parsed
        // structure (and exact: the writer prints shortest round-trip
        // float representations).
        #[test]
        fn writer_parser_idempotent(
            n in 1usize..5,
            m1 in 0usize..3,
            m2 in 0usize..3,
            seed in 0u64..1000,
            bounds in proptest::collection::vec(bound_pair(), 5),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut mat = |m: usize| {
                let mut t = Vec::new();
                for i in 0..m {
                    for j in 0..n {
                        if rng.random::<f64>() < 0.6 {
                            t.push((i, j, rng.random_range(-3.0..3.0)));
                        }
                    }
                }
                ConstraintMatrix::sparse_from_triplets(m, n, &t).unwrap()
            };
            let g = mat(m1);
            let a = mat(m2);
            let mut p = LpProblem::new(
                (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
                a,
                (0..m2).map(|_| rng.random_range(-2.0..2.0)).collect(),
                g,
                (0..m1).map(|_| rng.random_range(-2.0..2.0)).collect(),
                (0..n).map(|j| bounds[j].0).collect(),
                (0..n).map(|j| bounds[j].1).collect(),
            );
            p.objective_offset = rng.random_range(-1.0..1.0);
            let q = parse_mps_str(&write_mps(&p)).unwrap();
            prop_assert!(validate_problem(&q).is_empty());
            let r = parse_mps_str(&write_mps(&q)).unwrap();
            prop_assert_eq!(&q, &r);
            // Entry data survives exactly even though storage normalizes to CSR.
            prop_assert_eq!(q.objective, p.objective);
            prop_assert_eq!(q.ineq_matrix.to_dense_rows(), p.ineq_matrix.to_dense_rows());
            prop_assert_eq!(q.eq_matrix.to_dense_rows(), p.eq_matrix.to_dense_rows());
            prop_assert_eq!(q.ineq_rhs, p.ineq_rhs);
            prop_assert_eq!(q.eq_rhs, p.eq_rhs);
            prop_assert_eq!(q.lower, p.lower);
            prop_assert_eq!(q.upper, p.upper);
            prop_assert_eq!(q.objective_offset, p.objective_offset);
        }
    }
}
