//! Farkas-style infeasibility certificates out of iterate differences.
//!
//! On an infeasible LP the PDHG iterates drift along a fixed displacement
//! direction; the normalized per-epoch average direction
//! `(z − z_anchor)/steps` approximates a certificate ray. A dual ray d_y
//! proves primal infeasibility when it is (approximately) in the dual
//! cone, its pullback −Kᵀd_y is absorbable by the finite bounds, and the
//! dual objective grows along it. A primal ray d_x proves dual
//! infeasibility (primal unboundedness) when it is a feasible recession
//! direction with negative objective rate.

use crate::error::Result;
use crate::pdhg::Iterate;
use crate::problem::{build_saddle_form, LpProblem, SaddleForm};
use crate::scalar::{norm2, Real};

/// A certificate extracted from the iterate stream.
#[derive(Debug, Clone, PartialEq)]
pub enum InfeasibilityCertificate<T = f64> {
    /// The problem has no feasible point; carries the proving dual ray.
    Primal { dual_ray: Vec<T> },
    /// The dual has no feasible point (the primal is unbounded); carries
    /// the proving primal ray.
    Dual { primal_ray: Vec<T> },
}

impl<T: Real> InfeasibilityCertificate<T> {
    pub fn cast<S: Real>(&self) -> InfeasibilityCertificate<S> {
        let conv = |v: &[T]| v.iter().map(|&x| S::of(x.to_f64())).collect::<Vec<S>>();
        match self {
            Self::Primal { dual_ray } => InfeasibilityCertificate::Primal {
                dual_ray: conv(dual_ray),
            },
            Self::Dual { primal_ray } => InfeasibilityCertificate::Dual {
                primal_ray: conv(primal_ray),
            },
        }
    }
}

fn unit_direction<T: Real>(current: &[T], anchor: &[T], steps: T) -> Option<Vec<T>> {
    let mut dir: Vec<T> = current
        .iter()
        .zip(anchor)
        .map(|(&c, &a)| (c - a) / steps)
        .collect();
    let norm = norm2(&dir);
    if !(norm.is_finite() && norm > T::zero()) {
        return None;
    }
    for d in dir.iter_mut() {
        *d /= norm;
    }
    Some(dir)
}

/// Tests a unit dual ray as a primal-infeasibility certificate.
fn primal_certificate<T: Real>(sf: &SaddleForm<T>, dual_ray: &[T], eps: T) -> bool {
    // Approximately inside the dual cone.
    if dual_ray[..sf.num_inequalities].iter().any(|&d| d < -eps) {
        return false;
    }
    // Pullback w = −Kᵀ d_y must be absorbable by finite bounds.
    let mut w = vec![T::zero(); sf.num_vars()];
    sf.constraint_matrix.matvec_transpose_into(dual_ray, &mut w);
    for v in w.iter_mut() {
        *v = -*v;
    }
    let mut ray_objective = T::zero();
    for i in 0..sf.num_constraints() {
        ray_objective += sf.rhs[i] * dual_ray[i];
    }
    for j in 0..sf.num_vars() {
        let pos = w[j].max(T::zero());
        let neg = (-w[j]).max(T::zero());
        if sf.lower[j] == T::neg_infinity() {
            if pos > eps {
                return false;
            }
        } else {
            ray_objective += sf.lower[j] * pos;
        }
        if sf.upper[j] == T::infinity() {
            if neg > eps {
                return false;
            }
        } else {
            ray_objective -= sf.upper[j] * neg;
        }
    }
    // The dual objective must strictly improve along the ray.
    ray_objective > eps
}

/// Tests a unit primal ray as a dual-infeasibility certificate.
fn dual_certificate<T: Real>(sf: &SaddleForm<T>, primal_ray: &[T], eps: T) -> bool {
    let mut objective_rate = T::zero();
    for j in 0..sf.num_vars() {
        objective_rate += sf.objective[j] * primal_ray[j];
    }
    if !(objective_rate.is_finite() && objective_rate < -eps) {
        return false;
    }
    // Finite bounds block movement in their direction.
    for j in 0..sf.num_vars() {
        if sf.upper[j] != T::infinity() && primal_ray[j] > eps {
            return false;
        }
        if sf.lower[j] != T::neg_infinity() && primal_ray[j] < -eps {
            return false;
        }
    }
    // A d_x ≈ 0 and G d_x ≳ 0.
    let mut kd = vec![T::zero(); sf.num_constraints()];
    sf.constraint_matrix.matvec_into(primal_ray, &mut kd);
    for (i, &v) in kd.iter().enumerate() {
        if i < sf.num_inequalities {
            if v < -eps {
                return false;
            }
        } else if v.abs() > eps {
            return false;
        }
    }
    true
}

/// Certificate check against a saddle form; `z_current` and `z_anchor` are
/// original-space iterates.
pub(crate) fn detect_from_saddle<T: Real>(
    sf: &SaddleForm<T>,
    z_current: &Iterate<T>,
    z_anchor: &Iterate<T>,
    steps_since_restart: u64,
    eps_primal_infeasible: T,
    eps_dual_infeasible: T,
) -> Option<InfeasibilityCertificate<T>> {
    debug_assert!(steps_since_restart >= 1);
    let steps = T::of(steps_since_restart as f64);
    if sf.num_constraints() > 0 {
        if let Some(dual_ray) = unit_direction(&z_current.dual, &z_anchor.dual, steps) {
            if primal_certificate(sf, &dual_ray, eps_primal_infeasible) {
                return Some(InfeasibilityCertificate::Primal { dual_ray });
            }
        }
    }
    if let Some(primal_ray) = unit_direction(&z_current.primal, &z_anchor.primal, steps) {
        if dual_certificate(sf, &primal_ray, eps_dual_infeasible) {
            return Some(InfeasibilityCertificate::Dual { primal_ray });
        }
    }
    None
}

/// Looks for an infeasibility certificate in the average direction of the
/// current epoch, `(z_current − z_anchor)/steps`, with each part normalized
/// to unit length. Returns `None` when neither Farkas test passes.
pub fn detect_infeasibility(
    p: &LpProblem,
    z_current: &Iterate,
    z_anchor: &Iterate,
    steps_since_restart: u64,
    opts: &crate::driver::SolverOptions,
) -> Result<Option<InfeasibilityCertificate>> {
    let sf = build_saddle_form(p)?;
    Ok(detect_from_saddle(
        &sf,
        z_current,
        z_anchor,
        steps_since_restart.max(1),
        opts.eps_primal_infeasible,
        opts.eps_dual_infeasible,
    ))
}
