//! Problem representation and saddle-form construction.
//!
//! An [`LpProblem`] is the standard form
//!
//! ```text
//! min cᵀx   s.t.  Ax = b,  Gx ≥ h,  l ≤ x ≤ u
//! ```
//!
//! with `G` of size m₁×n and `A` of size m₂×n, in either dense or CSR
//! storage. The iterations never touch this form directly; they work on the
//! stacked [`SaddleForm`]
//!
//! ```text
//! min_{x ∈ X} max_{y ∈ Y}  cᵀx − yᵀKx + qᵀy
//! ```
//!
//! where `K = [G; A]`, `q = (h; b)`, `X` is the bound box, and
//! `Y = {y : y_{1:m₁} ≥ 0}` (equality duals are free).

pub mod generators;
pub mod json;
pub mod mps;

use crate::error::{Error, Result, Violation};
use crate::linalg::ConstraintMatrix;
pub use crate::linalg::Storage;
use crate::scalar::Real;

/// Linear program in standard form. Immutable after construction; cheap to
/// share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    /// Objective vector `c` (length n).
    pub objective: Vec<f64>,
    /// Equality matrix `A` (m₂×n).
    pub eq_matrix: ConstraintMatrix,
    /// Equality right-hand side `b` (length m₂).
    pub eq_rhs: Vec<f64>,
    /// Inequality matrix `G` (m₁×n); every row reads `gᵀx ≥ h`.
    pub ineq_matrix: ConstraintMatrix,
    /// Inequality right-hand side `h` (length m₁).
    pub ineq_rhs: Vec<f64>,
    /// Lower bounds `l` (length n, entries may be −∞).
    pub lower: Vec<f64>,
    /// Upper bounds `u` (length n, entries may be +∞).
    pub upper: Vec<f64>,
    /// Constant added to reported objective values (e.g. from an MPS RHS
    /// entry on the objective row).
    pub objective_offset: f64,
}

impl LpProblem {
    /// Assembles a problem from its parts, in the usual `(c, A, b, G, h, l, u)`
    /// order. No validation happens here; call [`validate_problem`].
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        objective: Vec<f64>,
        eq_matrix: ConstraintMatrix,
        eq_rhs: Vec<f64>,
        ineq_matrix: ConstraintMatrix,
        ineq_rhs: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Self {
        Self {
            objective,
            eq_matrix,
            eq_rhs,
            ineq_matrix,
            ineq_rhs,
            lower,
            upper,
            objective_offset: 0.0,
        }
    }

    /// Number of variables.
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Number of inequality rows (m₁).
    pub fn num_inequalities(&self) -> usize {
        self.ineq_matrix.nrows()
    }

    /// Number of equality rows (m₂).
    pub fn num_equalities(&self) -> usize {
        self.eq_matrix.nrows()
    }

    /// Storage format shared by both constraint matrices.
    pub fn storage(&self) -> Storage {
        self.ineq_matrix.storage()
    }

    /// Shape key used by the batch solver: (n, m₁, m₂).
    pub fn shape(&self) -> (usize, usize, usize) {
        (
            self.num_vars(),
            self.num_inequalities(),
            self.num_equalities(),
        )
    }
}

/// The stacked min-max form the iterations operate on.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleForm<T = f64> {
    /// `K = [G; A]`, (m₁+m₂)×n.
    pub constraint_matrix: ConstraintMatrix<T>,
    /// `q = (h; b)`, length m₁+m₂.
    pub rhs: Vec<T>,
    /// m₁: how many leading rows are inequalities, i.e. how many leading
    /// duals are sign-constrained.
    pub num_inequalities: usize,
    /// Objective vector `c`.
    pub objective: Vec<T>,
    /// Lower bounds.
    pub lower: Vec<T>,
    /// Upper bounds.
    pub upper: Vec<T>,
    /// Constant carried into reported objective values.
    pub objective_offset: T,
}

impl<T: Real> SaddleForm<T> {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraint_matrix.nrows()
    }

    /// Splits `K` back into `(G, A)` at row m₁; the round trip through
    /// [`build_saddle_form`] reproduces the original blocks exactly.
    pub fn split_constraints(&self) -> (ConstraintMatrix<T>, ConstraintMatrix<T>) {
        self.constraint_matrix.split_rows(self.num_inequalities)
    }

    /// Casts all numeric data to another scalar type.
    pub fn cast<S: Real>(&self) -> SaddleForm<S> {
        let conv = |v: &[T]| v.iter().map(|&x| S::of(x.to_f64())).collect::<Vec<S>>();
        SaddleForm {
            constraint_matrix: self.constraint_matrix.cast(),
            rhs: conv(&self.rhs),
            num_inequalities: self.num_inequalities,
            objective: conv(&self.objective),
            lower: conv(&self.lower),
            upper: conv(&self.upper),
            objective_offset: S::of(self.objective_offset.to_f64()),
        }
    }
}

fn scan_vector(field: &'static str, v: &[f64], allow_infinite: bool, out: &mut Vec<Violation>) {
    for (i, &x) in v.iter().enumerate() {
        if x.is_nan() {
            out.push(Violation::NotANumber { field, index: i });
        } else if !allow_infinite && x.is_infinite() {
            out.push(Violation::NotFinite { field, index: i });
        }
    }
}

fn scan_matrix(field: &'static str, m: &ConstraintMatrix, out: &mut Vec<Violation>) {
    let mut index = 0usize;
    m.for_each_entry(|_, _, v| {
        if v.is_nan() {
            out.push(Violation::NotANumber { field, index });
        } else if v.is_infinite() {
            out.push(Violation::NotFinite { field, index });
        }
        index += 1;
    });
}

/// Checks an [`LpProblem`] and returns the complete list of violations;
/// an empty list means the problem is well formed.
pub fn validate_problem(p: &LpProblem) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = p.num_vars();

    if p.ineq_matrix.ncols() != n {
        out.push(Violation::ColumnMismatch {
            field: "inequality matrix",
            expected: n,
            actual: p.ineq_matrix.ncols(),
        });
    }
    if p.eq_matrix.ncols() != n {
        out.push(Violation::ColumnMismatch {
            field: "equality matrix",
            expected: n,
            actual: p.eq_matrix.ncols(),
        });
    }
    if p.ineq_rhs.len() != p.ineq_matrix.nrows() {
        out.push(Violation::LengthMismatch {
            field: "inequality rhs",
            expected: p.ineq_matrix.nrows(),
            actual: p.ineq_rhs.len(),
        });
    }
    if p.eq_rhs.len() != p.eq_matrix.nrows() {
        out.push(Violation::LengthMismatch {
            field: "equality rhs",
            expected: p.eq_matrix.nrows(),
            actual: p.eq_rhs.len(),
        });
    }
    for (field, v) in [("lower bounds", &p.lower), ("upper bounds", &p.upper)] {
        if v.len() != n {
            out.push(Violation::LengthMismatch {
                field,
                expected: n,
                actual: v.len(),
            });
        }
    }
    if p.ineq_matrix.storage() != p.eq_matrix.storage() {
        out.push(Violation::MixedStorage);
    }

    scan_vector("objective", &p.objective, false, &mut out);
    scan_vector("inequality rhs", &p.ineq_rhs, false, &mut out);
    scan_vector("equality rhs", &p.eq_rhs, false, &mut out);
    scan_vector("lower bounds", &p.lower, true, &mut out);
    scan_vector("upper bounds", &p.upper, true, &mut out);
    if p.objective_offset.is_nan() || p.objective_offset.is_infinite() {
        out.push(Violation::NotFinite {
            field: "objective offset",
            index: 0,
        });
    }
    scan_matrix("inequality matrix", &p.ineq_matrix, &mut out);
    scan_matrix("equality matrix", &p.eq_matrix, &mut out);

    for i in 0..p.lower.len().min(p.upper.len()) {
        let (l, u) = (p.lower[i], p.upper[i]);
        if l.is_nan() || u.is_nan() {
            continue; // already reported
        }
        if l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
            out.push(Violation::CrossedBounds { index: i });
        }
    }

    if let Some(v) = p.ineq_matrix.check_structure("inequality matrix") {
        out.push(v);
    }
    if let Some(v) = p.eq_matrix.check_structure("equality matrix") {
        out.push(v);
    }
    out
}

/// Stacks a validated problem into its primal-dual saddle form:
/// `K = [G; A]`, `q = (h; b)`. Storage follows the problem's storage.
pub fn build_saddle_form(p: &LpProblem) -> Result<SaddleForm> {
    let violations = validate_problem(p);
    if !violations.is_empty() {
        return Err(Error::InvalidProblem(violations));
    }
    let constraint_matrix = p.ineq_matrix.stack_rows(&p.eq_matrix)?;
    let mut rhs = p.ineq_rhs.clone();
    rhs.extend_from_slice(&p.eq_rhs);
    Ok(SaddleForm {
        constraint_matrix,
        rhs,
        num_inequalities: p.num_inequalities(),
        objective: p.objective.clone(),
        lower: p.lower.clone(),
        upper: p.upper.clone(),
        objective_offset: p.objective_offset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_var_problem() -> LpProblem {
        // min 2x₁ + x₂  s.t. x₁ + x₂ ≥ 1, 0 ≤ x ≤ 1
        LpProblem::new(
            vec![2.0, 1.0],
            ConstraintMatrix::empty(Storage::Dense, 2),
            vec![],
            ConstraintMatrix::dense_from_rows(&[vec![1.0, 1.0]]).unwrap(),
            vec![1.0],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
        )
    }

    #[test]
    fn saddle_form_stacks_g_over_a() {
        let p = LpProblem::new(
            vec![0.0],
            ConstraintMatrix::dense_from_rows(&[vec![2.0]]).unwrap(),
            vec![3.0],
            ConstraintMatrix::dense_from_rows(&[vec![1.0]]).unwrap(),
            vec![1.0],
            vec![f64::NEG_INFINITY],
            vec![f64::INFINITY],
        );
        let sf = build_saddle_form(&p).unwrap();
        assert_eq!(
            sf.constraint_matrix.to_dense_rows(),
            vec![vec![1.0], vec![2.0]]
        );
        assert_eq!(sf.rhs, vec![1.0, 3.0]);
        assert_eq!(sf.num_inequalities, 1);
    }

    #[test]
    fn saddle_form_without_inequalities() {
        let p = LpProblem::new(
            vec![1.0, 0.0],
            ConstraintMatrix::dense_from_rows(&[vec![1.0, 1.0]]).unwrap(),
            vec![2.0],
            ConstraintMatrix::empty(Storage::Dense, 2),
            vec![],
            vec![0.0, 0.0],
            vec![f64::INFINITY, f64::INFINITY],
        );
        let sf = build_saddle_form(&p).unwrap();
        assert_eq!(sf.num_inequalities, 0);
        assert_eq!(sf.rhs, vec![2.0]);
        assert_eq!(sf.constraint_matrix.nrows(), 1);
    }

    #[test]
    fn validate_clean_problem() {
        assert!(validate_problem(&two_var_problem()).is_empty());
    }

    #[test]
    fn validate_crossed_bounds() {
        let p = LpProblem::new(
            vec![1.0],
            ConstraintMatrix::empty(Storage::Dense, 1),
            vec![],
            ConstraintMatrix::empty(Storage::Dense, 1),
            vec![],
            vec![1.0],
            vec![0.0],
        );
        let v = validate_problem(&p);
        assert_eq!(v, vec![Violation::CrossedBounds { index: 0 }]);
    }

    #[test]
    fn validate_rhs_length_mismatch() {
        let mut p = two_var_problem();
        p.ineq_rhs = vec![1.0, 2.0];
        let v = validate_problem(&p);
        assert_eq!(
            v,
            vec![Violation::LengthMismatch {
                field: "inequality rhs",
                expected: 1,
                actual: 2
            }]
        );
    }

    #[test]
    fn validate_rejects_nan_and_infinite_objective() {
        let mut p = two_var_problem();
        p.objective = vec![f64::NAN, f64::INFINITY];
        let v = validate_problem(&p);
        assert!(v.contains(&Violation::NotANumber {
            field: "objective",
            index: 0
        }));
        assert!(v.contains(&Violation::NotFinite {
            field: "objective",
            index: 1
        }));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        // Splitting K back at row m₁ must reproduce G and A exactly.
        #[test]
        fn stack_split_roundtrip(m1 in 0usize..4, m2 in 0usize..4, n in 1usize..5, seed in 0u64..500) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let rows = |m: usize, rng: &mut rand_chacha::ChaCha8Rng| {
                (0..m).map(|_| (0..n).map(|_| rng.random_range(-3.0..3.0)).collect::<Vec<f64>>()).collect::<Vec<_>>()
            };
            let g_rows = rows(m1, &mut rng);
            let a_rows = rows(m2, &mut rng);
            let g = ConstraintMatrix::dense_from_rows(&g_rows).map(|m| if m.nrows() == 0 { ConstraintMatrix::empty(Storage::Dense, n) } else { m }).unwrap();
            let a = ConstraintMatrix::dense_from_rows(&a_rows).map(|m| if m.nrows() == 0 { ConstraintMatrix::empty(Storage::Dense, n) } else { m }).unwrap();
            let p = LpProblem::new(
                vec![0.0; n],
                a.clone(),
                vec![0.0; m2],
                g.clone(),
                vec![0.0; m1],
                vec![0.0; n],
                vec![1.0; n],
            );
            let sf = build_saddle_form(&p).unwrap();
            let (g2, a2) = sf.split_constraints();
            prop_assert_eq!(g2.to_dense_rows(), g.to_dense_rows());
            prop_assert_eq!(a2.to_dense_rows(), a.to_dense_rows());
        }
    }
}
