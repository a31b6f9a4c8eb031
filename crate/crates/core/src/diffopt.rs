//! Decision-focused learning on top of the batch solver: the SPO+ surrogate
//! loss, its subgradient, and normalized regret.
//!
//! For a predicted cost ĉ and realized cost c with optimal decision x*(c),
//!
//! ```text
//! loss(ĉ, c) = −min_{x∈S} (2ĉ − c)ᵀx + 2ĉᵀx*(c) − cᵀx*(c)
//! ```
//!
//! and `2x*(c) − 2x*(2ĉ − c)` is a subgradient with respect to ĉ. The
//! feasible set S is a shared [`LpProblem`] whose objective vector is
//! ignored; every inner minimization is an LP solved through
//! [`batch_solve`]. Costs here are min-form costs, matching the problem's
//! objective convention.

use crate::driver::{batch_solve, SolveStatus, SolverOptions, WarmStart};
use crate::error::{Error, Result};
use crate::problem::LpProblem;
use crate::scalar::dot;

/// A batch of (prediction, truth) pairs with the true optimal solutions
/// and objective values. Construction checks that `true_objs` is
/// consistent with `true_costs · true_sols` to 1e−9 relative.
#[derive(Debug, Clone)]
pub struct SpoBatch {
    pred_costs: Vec<Vec<f64>>,
    true_costs: Vec<Vec<f64>>,
    true_sols: Vec<Vec<f64>>,
    true_objs: Vec<f64>,
}

impl SpoBatch {
    pub fn new(
        pred_costs: Vec<Vec<f64>>,
        true_costs: Vec<Vec<f64>>,
        true_sols: Vec<Vec<f64>>,
        true_objs: Vec<f64>,
    ) -> Result<Self> {
        let b = pred_costs.len();
        if b == 0 {
            return Err(Error::InvalidParameter("empty SPO+ batch".into()));
        }
        if true_costs.len() != b || true_sols.len() != b || true_objs.len() != b {
            return Err(Error::InvalidParameter(format!(
                "batch member counts differ: pred {b}, true {}, sols {}, objs {}",
                true_costs.len(),
                true_sols.len(),
                true_objs.len()
            )));
        }
        let n = pred_costs[0].len();
        for i in 0..b {
            if pred_costs[i].len() != n || true_costs[i].len() != n || true_sols[i].len() != n {
                return Err(Error::InvalidParameter(format!(
                    "batch member {i} has inconsistent vector lengths"
                )));
            }
            let recomputed = dot(&true_costs[i], &true_sols[i]);
            let tol = 1e-9 * recomputed.abs().max(1.0);
            if (recomputed - true_objs[i]).abs() > tol {
                return Err(Error::InvalidParameter(format!(
                    "batch member {i}: true objective {} does not match cᵀx* = {recomputed}",
                    true_objs[i]
                )));
            }
        }
        Ok(Self {
            pred_costs,
            true_costs,
            true_sols,
            true_objs,
        })
    }

    /// Builds a batch computing the true objectives from the solutions.
    pub fn from_solutions(
        pred_costs: Vec<Vec<f64>>,
        true_costs: Vec<Vec<f64>>,
        true_sols: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let true_objs = true_costs
            .iter()
            .zip(&true_sols)
            .map(|(c, x)| dot(c, x))
            .collect();
        Self::new(pred_costs, true_costs, true_sols, true_objs)
    }

    pub fn len(&self) -> usize {
        self.pred_costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pred_costs.is_empty()
    }

    pub fn num_items(&self) -> usize {
        self.pred_costs[0].len()
    }

    pub fn pred_costs(&self) -> &[Vec<f64>] {
        &self.pred_costs
    }

    pub fn true_costs(&self) -> &[Vec<f64>] {
        &self.true_costs
    }

    pub fn true_sols(&self) -> &[Vec<f64>] {
        &self.true_sols
    }
}

/// Solves the batch of LPs `min cᵢᵀx over S` (the shared feasible set with
/// per-member objectives) and returns the primal solutions. Feasibility
/// polishing is forced off; a non-optimal inner status is an error naming
/// the member.
fn solve_inner_batch(
    costs: &[Vec<f64>],
    feasible_set: &LpProblem,
    opts: &SolverOptions,
    warm: Option<&[Vec<f64>]>,
) -> Result<Vec<Vec<f64>>> {
    let n = feasible_set.num_vars();
    for (i, c) in costs.iter().enumerate() {
        if c.len() != n {
            return Err(Error::InvalidParameter(format!(
                "cost vector {i} has length {}, feasible set has {n} variables",
                c.len()
            )));
        }
    }
    let problems: Vec<LpProblem> = costs
        .iter()
        .map(|c| {
            let mut p = feasible_set.clone();
            p.objective = c.clone();
            p.objective_offset = 0.0;
            p
        })
        .collect();
    let mut inner_opts = opts.clone();
    inner_opts.feasibility_polishing = false;
    let warm_starts: Option<Vec<WarmStart>> = warm.map(|sols| {
        sols.iter()
            .map(|x| WarmStart {
                primal: Some(x.clone()),
                dual: None,
            })
            .collect()
    });
    if warm_starts.is_some() {
        inner_opts.warm_start = true;
    }
    let results = batch_solve(&problems, &inner_opts, warm_starts.as_deref())?;
    for (index, r) in results.iter().enumerate() {
        if r.status != SolveStatus::Optimal {
            return Err(Error::InnerSolveFailed {
                index,
                status: r.status.as_str(),
            });
        }
    }
    Ok(results.into_iter().map(|r| r.primal_solution).collect())
}

/// SPO+ loss of a batch (mean reduction), together with the inner
/// solutions x*(2ĉ − c) needed for the backward pass.
pub fn spo_plus_loss(
    batch: &SpoBatch,
    feasible_set: &LpProblem,
    opts: &SolverOptions,
) -> Result<(f64, Vec<Vec<f64>>)> {
    spo_plus_loss_warm(batch, feasible_set, opts, None)
}

/// [`spo_plus_loss`] with optional warm starts for the inner LPs, e.g. the
/// previous epoch's inner solutions.
pub fn spo_plus_loss_warm(
    batch: &SpoBatch,
    feasible_set: &LpProblem,
    opts: &SolverOptions,
    warm: Option<&[Vec<f64>]>,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let inner_costs: Vec<Vec<f64>> = batch
        .pred_costs
        .iter()
        .zip(&batch.true_costs)
        .map(|(pred, truth)| pred.iter().zip(truth).map(|(&p, &t)| 2.0 * p - t).collect())
        .collect();
    let inner_sols = solve_inner_batch(&inner_costs, feasible_set, opts, warm)?;

    let mut total = 0.0;
    for i in 0..batch.len() {
        let inner_obj = dot(&inner_costs[i], &inner_sols[i]);
        let pred_on_true = dot(&batch.pred_costs[i], &batch.true_sols[i]);
        total += -inner_obj + 2.0 * pred_on_true - batch.true_objs[i];
    }
    Ok((total / batch.len() as f64, inner_sols))
}

/// Per-member SPO+ subgradient `2x*(c) − 2x*(2ĉ − c)` with respect to ĉ.
/// When paired with the mean-reduced loss, scale each member's gradient by
/// 1/batch-size.
pub fn spo_plus_subgradient(true_sols: &[Vec<f64>], inner_sols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    assert_eq!(true_sols.len(), inner_sols.len());
    true_sols
        .iter()
        .zip(inner_sols)
        .map(|(t, w)| {
            assert_eq!(t.len(), w.len());
            t.iter().zip(w).map(|(&a, &b)| 2.0 * a - 2.0 * b).collect()
        })
        .collect()
}

/// Regret evaluation detail: the aggregate normalized regret and the raw
/// per-instance regrets cᵢᵀ(x*(ĉᵢ) − x*(cᵢ)).
#[derive(Debug, Clone)]
pub struct RegretReport {
    pub normalized: f64,
    pub per_instance: Vec<f64>,
}

/// Normalized regret of predicted costs over a test batch:
/// `Σᵢ cᵢᵀ(x*(ĉᵢ) − x*(cᵢ)) / Σᵢ |cᵢᵀx*(cᵢ)|`.
pub fn normalized_regret(
    pred_costs: &[Vec<f64>],
    true_costs: &[Vec<f64>],
    feasible_set: &LpProblem,
    opts: &SolverOptions,
) -> Result<f64> {
    Ok(regret_report(pred_costs, true_costs, feasible_set, opts)?.normalized)
}

/// [`normalized_regret`] with the per-instance breakdown.
pub fn regret_report(
    pred_costs: &[Vec<f64>],
    true_costs: &[Vec<f64>],
    feasible_set: &LpProblem,
    opts: &SolverOptions,
) -> Result<RegretReport> {
    if pred_costs.len() != true_costs.len() {
        return Err(Error::InvalidParameter(format!(
            "predicted batch has {} members, true batch has {}",
            pred_costs.len(),
            true_costs.len()
        )));
    }
    if pred_costs.is_empty() {
        return Err(Error::InvalidParameter("empty regret batch".into()));
    }
    let pred_sols = solve_inner_batch(pred_costs, feasible_set, opts, None)?;
    let true_sols = solve_inner_batch(true_costs, feasible_set, opts, None)?;

    let mut numerator = 0.0;
    let mut denominator = 0.0;
    let mut per_instance = Vec::with_capacity(pred_costs.len());
    for i in 0..pred_costs.len() {
        let suboptimality = dot(&true_costs[i], &pred_sols[i]) - dot(&true_costs[i], &true_sols[i]);
        per_instance.push(suboptimality);
        numerator += suboptimality;
        denominator += dot(&true_costs[i], &true_sols[i]).abs();
    }
    if denominator == 0.0 {
        return Err(Error::UndefinedMetric);
    }
    Ok(RegretReport {
        normalized: numerator / denominator,
        per_instance,
    })
}
