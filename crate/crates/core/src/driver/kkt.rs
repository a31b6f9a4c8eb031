//! KKT residuals and the relative termination test.
//!
//! For a pair (x, y) with reduced cost λ = c − Kᵀy split into λ⁺/λ⁻:
//!
//! - primal residual: ‖(Ax − b ; max(0, h − Gx))‖₂,
//! - dual residual: the norm of the reduced-cost parts that no finite bound
//!   can absorb (λ⁺ where l = −∞, λ⁻ where u = +∞),
//! - dual objective: qᵀy + Σ_{l>−∞} lᵢλ⁺ᵢ − Σ_{u<+∞} uᵢλ⁻ᵢ.
//!
//! Termination compares all three against eps_abs + eps_rel·scale with the
//! scales ‖q‖₂, ‖c‖₂ and |primal obj| + |dual obj|, always on original
//! (unscaled) data.

use crate::error::{Error, Result};
use crate::pdhg::Iterate;
use crate::problem::{build_saddle_form, LpProblem, SaddleForm};
use crate::scalar::Real;

/// The termination triple plus both objective values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals<T = f64> {
    pub primal_residual: T,
    pub dual_residual: T,
    pub primal_objective: T,
    pub dual_objective: T,
    /// |primal objective − dual objective|.
    pub abs_gap: T,
}

impl<T: Real> KktResiduals<T> {
    /// Euclidean norm of the (primal, dual, gap) triple; the restart metric
    /// for the averaged algorithm and the ranking key for iterate-limit
    /// fallbacks.
    pub fn triple_norm(&self) -> T {
        (self.primal_residual * self.primal_residual
            + self.dual_residual * self.dual_residual
            + self.abs_gap * self.abs_gap)
            .sqrt()
    }

    pub fn cast<S: Real>(&self) -> KktResiduals<S> {
        KktResiduals {
            primal_residual: S::of(self.primal_residual.to_f64()),
            dual_residual: S::of(self.dual_residual.to_f64()),
            primal_objective: S::of(self.primal_objective.to_f64()),
            dual_objective: S::of(self.dual_objective.to_f64()),
            abs_gap: S::of(self.abs_gap.to_f64()),
        }
    }
}

/// Residuals plus the reduced costs they were derived from.
pub(crate) struct ResidualEval<T> {
    pub residuals: KktResiduals<T>,
    pub reduced_costs: Vec<T>,
}

/// Evaluates the KKT residuals of (x, y) against a saddle form. Two matrix
/// products per call.
pub(crate) fn residuals_from_saddle<T: Real>(
    sf: &SaddleForm<T>,
    x: &[T],
    y: &[T],
) -> ResidualEval<T> {
    let m1 = sf.num_inequalities;
    let mut kx = vec![T::zero(); sf.num_constraints()];
    sf.constraint_matrix.matvec_into(x, &mut kx);

    let mut primal_sq = T::zero();
    for i in 0..sf.num_constraints() {
        let violation = if i < m1 {
            // Gx ≥ h: only shortfalls count.
            (sf.rhs[i] - kx[i]).max(T::zero())
        } else {
            kx[i] - sf.rhs[i]
        };
        primal_sq += violation * violation;
    }

    let mut reduced_costs = vec![T::zero(); sf.num_vars()];
    sf.constraint_matrix
        .matvec_transpose_into(y, &mut reduced_costs);
    for (rc, &c) in reduced_costs.iter_mut().zip(&sf.objective) {
        *rc = c - *rc;
    }

    let mut dual_sq = T::zero();
    let mut bound_terms = T::zero();
    for j in 0..sf.num_vars() {
        let lam = reduced_costs[j];
        let pos = lam.max(T::zero());
        let neg = (-lam).max(T::zero());
        if sf.lower[j] == T::neg_infinity() {
            dual_sq += pos * pos;
        } else {
            bound_terms += sf.lower[j] * pos;
        }
        if sf.upper[j] == T::infinity() {
            dual_sq += neg * neg;
        } else {
            bound_terms -= sf.upper[j] * neg;
        }
    }

    let mut primal_objective = sf.objective_offset;
    for j in 0..sf.num_vars() {
        primal_objective += sf.objective[j] * x[j];
    }
    let mut dual_objective = sf.objective_offset + bound_terms;
    for i in 0..sf.num_constraints() {
        dual_objective += sf.rhs[i] * y[i];
    }

    let residuals = KktResiduals {
        primal_residual: primal_sq.sqrt(),
        dual_residual: dual_sq.sqrt(),
        primal_objective,
        dual_objective,
        abs_gap: (primal_objective - dual_objective).abs(),
    };
    ResidualEval {
        residuals,
        reduced_costs,
    }
}

/// Evaluates the KKT residuals of an iterate against the original problem
/// data.
pub fn compute_kkt_residuals(p: &LpProblem, z: &Iterate) -> Result<KktResiduals> {
    let sf = build_saddle_form(p)?;
    if z.primal.len() != sf.num_vars() || z.dual.len() != sf.num_constraints() {
        return Err(Error::DimensionMismatch {
            context: "kkt residual iterate",
            expected: sf.num_vars(),
            actual: z.primal.len(),
        });
    }
    Ok(residuals_from_saddle(&sf, &z.primal, &z.dual).residuals)
}

/// The relative termination test (inclusive at the thresholds):
///
/// - |gap| ≤ eps_abs + eps_rel·(|primal obj| + |dual obj|)
/// - primal residual ≤ eps_abs + eps_rel·‖q‖₂
/// - dual residual ≤ eps_abs + eps_rel·‖c‖₂
pub(crate) fn termination_satisfied<T: Real>(
    res: &KktResiduals<T>,
    objective_norm: T,
    rhs_norm: T,
    eps_abs: T,
    eps_rel: T,
) -> bool {
    let gap_ok =
        res.abs_gap <= eps_abs + eps_rel * (res.primal_objective.abs() + res.dual_objective.abs());
    let primal_ok = res.primal_residual <= eps_abs + eps_rel * rhs_norm;
    let dual_ok = res.dual_residual <= eps_abs + eps_rel * objective_norm;
    gap_ok && primal_ok && dual_ok
}

/// Public form of the termination test, taking the problem norms
/// `(‖c‖₂, ‖q‖₂)` and the solver tolerances.
pub fn check_termination(
    res: &KktResiduals,
    problem_norms: (f64, f64),
    opts: &crate::driver::SolverOptions,
) -> bool {
    termination_satisfied(
        res,
        problem_norms.0,
        problem_norms.1,
        opts.eps_abs,
        opts.eps_rel,
    )
}
