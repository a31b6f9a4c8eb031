//! Solver orchestration: the restart loops for both algorithms, periodic
//! termination/restart/infeasibility checks, feasibility polishing, warm
//! starts, and batch solving.
//!
//! Pipeline per solve: validate → build saddle form → precondition →
//! initialize (zeros or projected warm start, mapped into the scaled
//! space) → iterate → every `check_frequency` accepted steps evaluate
//! termination, infeasibility and the restart rule on original-space data
//! → unscale and return. The averaged algorithm takes adaptive step sizes
//! from a heuristic line search and restarts from its running average; the
//! reflected Halpern algorithm needs a fixed operator per anchor, so it
//! runs at the constant safe scale η = 0.99/‖K̃‖₂ and restarts from the
//! last PDHG image. The primal weight ω updates at restarts only.

mod infeasibility;
mod kkt;
mod restart;

pub use infeasibility::{detect_infeasibility, InfeasibilityCertificate};
pub use kkt::{check_termination, compute_kkt_residuals, KktResiduals};
pub use restart::should_restart;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::estimate_spectral_norm;
use crate::pdhg::{
    adaptive_step_update, halpern_reflect_update, pdhg_step_with_cache, project_box,
    project_dual_cone, update_primal_weight, Iterate, StepState,
};
use crate::problem::{build_saddle_form, LpProblem, SaddleForm};
use crate::scalar::{norm2, Real};
use crate::scaling::{
    apply_scaling, default_scaling, scale_solution, unscale_solution, ScalingInfo,
};
use kkt::{residuals_from_saddle, termination_satisfied, ResidualEval};

/// Which first-order method drives the solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// PDHG with step-weighted averaging and adaptive restarts; the restart
    /// candidate is the running average.
    RaPdhg,
    /// Restarted Halpern PDHG with reflection; anchored steps, restarts
    /// from the last PDHG image.
    R2Hpdhg,
}

/// Working precision of the iteration kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    F64,
    F32,
}

/// Solver options. Defaults follow the standard option surface:
/// eps_abs/eps_rel 1e−4, infeasibility tolerances 1e−8, polish tolerance
/// 1e−6, checks every 64 iterations, display every 10 checks.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Absolute tolerance for convergence.
    pub eps_abs: f64,
    /// Relative tolerance for convergence.
    pub eps_rel: f64,
    /// Primal infeasibility tolerance.
    pub eps_primal_infeasible: f64,
    /// Dual infeasibility tolerance.
    pub eps_dual_infeasible: f64,
    /// Tolerance for feasibility polishing.
    pub eps_feas_polish: f64,
    /// Maximum number of accepted iterations to run.
    pub iteration_limit: u64,
    /// Evaluate termination/restart/infeasibility every this many accepted
    /// steps.
    pub check_frequency: u64,
    /// Whether to print solver progress to stderr.
    pub verbose: bool,
    /// Print every this many termination checks (when verbose).
    pub display_frequency: u64,
    /// Whether to start from caller-provided solutions.
    pub warm_start: bool,
    /// Whether to run feasibility polishing after the main solve.
    pub feasibility_polishing: bool,
    /// Which algorithm to run.
    pub algorithm: Algorithm,
    /// Working precision.
    pub precision: Precision,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            eps_abs: 1e-4,
            eps_rel: 1e-4,
            eps_primal_infeasible: 1e-8,
            eps_dual_infeasible: 1e-8,
            eps_feas_polish: 1e-6,
            iteration_limit: u64::MAX,
            check_frequency: 64,
            verbose: false,
            display_frequency: 10,
            warm_start: false,
            feasibility_polishing: false,
            algorithm: Algorithm::R2Hpdhg,
            precision: Precision::F64,
        }
    }
}

impl SolverOptions {
    /// Rejects non-positive tolerances and zero limits/frequencies.
    pub fn validate(&self) -> Result<()> {
        let tolerances = [
            ("eps_abs", self.eps_abs),
            ("eps_rel", self.eps_rel),
            ("eps_primal_infeasible", self.eps_primal_infeasible),
            ("eps_dual_infeasible", self.eps_dual_infeasible),
            ("eps_feas_polish", self.eps_feas_polish),
        ];
        for (name, v) in tolerances {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidOptions(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.iteration_limit < 1 {
            return Err(Error::InvalidOptions(
                "iteration_limit must be at least 1".into(),
            ));
        }
        if self.check_frequency < 1 {
            return Err(Error::InvalidOptions(
                "check_frequency must be at least 1".into(),
            ));
        }
        if self.display_frequency < 1 {
            return Err(Error::InvalidOptions(
                "display_frequency must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Final classification of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    IterationLimit,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "Optimal",
            SolveStatus::PrimalInfeasible => "PrimalInfeasible",
            SolveStatus::DualInfeasible => "DualInfeasible",
            SolveStatus::IterationLimit => "IterationLimit",
        }
    }
}

/// KKT numbers of the returned pair, evaluated on original data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktSummary {
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub abs_gap: f64,
    /// abs_gap / (|primal objective| + |dual objective|); 0 when both are
    /// exactly zero.
    pub rel_gap: f64,
}

/// Everything a solve returns. The solution pair always lies in X×Y
/// (within bounds, sign-constrained duals nonnegative) regardless of
/// status.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub primal_solution: Vec<f64>,
    pub dual_solution: Vec<f64>,
    /// Reduced costs λ = c − Kᵀy at the returned dual.
    pub reduced_costs: Vec<f64>,
    /// cᵀx plus the problem's objective offset.
    pub objective: f64,
    pub dual_objective: f64,
    pub kkt: KktSummary,
    /// Accepted PDHG steps.
    pub iterations: u64,
    pub restarts: u64,
    /// Iterations spent in feasibility polishing (0 when polishing is off).
    pub polish_iterations: u64,
}

/// Caller-provided starting point; either half may be omitted (missing
/// halves start at zero). Points are projected into X×Y before use, so
/// infeasible warm starts are fine.
#[derive(Debug, Clone, Default)]
pub struct WarmStart {
    pub primal: Option<Vec<f64>>,
    pub dual: Option<Vec<f64>>,
}

/// Outcome of feasibility polishing.
#[derive(Debug, Clone)]
pub struct PolishResult {
    /// The polished primal-dual pair.
    pub point: Iterate,
    /// Total iterations spent across the primal and dual polish solves.
    pub iterations: u64,
    /// False when either polish solve hit its iteration limit before
    /// reaching the polish tolerance.
    pub complete: bool,
}

const MAX_STEP_ATTEMPTS: usize = 60;
const POWER_METHOD_TOL: f64 = 1e-4;
const POWER_METHOD_MAX_ITER: usize = 800;
const POWER_METHOD_SEED: u64 = 0;
const PRIMAL_WEIGHT_SMOOTHING: f64 = 0.5;

/// What the periodic check is trying to drive to zero.
#[derive(Debug, Clone, Copy)]
enum TerminationMode {
    /// Full relative KKT test.
    Standard,
    /// Feasibility polishing, primal phase: primal residual below an
    /// absolute tolerance.
    PrimalFeasibility(f64),
    /// Feasibility polishing, dual phase.
    DualFeasibility(f64),
}

impl TerminationMode {
    fn satisfied<T: Real>(
        &self,
        res: &KktResiduals<T>,
        norm_c: T,
        norm_q: T,
        eps_abs: T,
        eps_rel: T,
    ) -> bool {
        match self {
            TerminationMode::Standard => {
                termination_satisfied(res, norm_c, norm_q, eps_abs, eps_rel)
            }
            TerminationMode::PrimalFeasibility(eps) => res.primal_residual <= T::of(*eps),
            TerminationMode::DualFeasibility(eps) => res.dual_residual <= T::of(*eps),
        }
    }

    /// Ranking key for the best-candidate fallback at the iteration limit.
    fn ranking_metric<T: Real>(&self, res: &KktResiduals<T>) -> T {
        match self {
            TerminationMode::Standard => res.triple_norm(),
            TerminationMode::PrimalFeasibility(_) => res.primal_residual,
            TerminationMode::DualFeasibility(_) => res.dual_residual,
        }
    }
}

/// A candidate solution evaluated in original space.
struct CandidateEval<T> {
    point: Iterate<T>,
    eval: ResidualEval<T>,
    rank: T,
}

fn evaluate_candidate<T: Real>(
    original: &SaddleForm<T>,
    scaling: &ScalingInfo<T>,
    z_scaled: &Iterate<T>,
    mode: TerminationMode,
) -> CandidateEval<T> {
    let (x, y) = unscale_solution(&z_scaled.primal, &z_scaled.dual, scaling)
        .expect("iterate dimensions match the scaling");
    let x = project_box(&x, &original.lower, &original.upper);
    let y = project_dual_cone(&y, original.num_inequalities);
    let eval = residuals_from_saddle(original, &x, &y);
    let rank = mode.ranking_metric(&eval.residuals);
    CandidateEval {
        point: Iterate { primal: x, dual: y },
        eval,
        rank,
    }
}

fn assemble_result<T: Real>(
    cand: CandidateEval<T>,
    status: SolveStatus,
    iterations: u64,
    restarts: u64,
) -> SolveResult {
    let res = &cand.eval.residuals;
    let pobj = res.primal_objective.to_f64();
    let dobj = res.dual_objective.to_f64();
    let gap = res.abs_gap.to_f64();
    let denom = pobj.abs() + dobj.abs();
    let rel_gap = if denom > 0.0 {
        gap / denom
    } else if gap == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    SolveResult {
        status,
        primal_solution: cand.point.primal.iter().map(|&v| v.to_f64()).collect(),
        dual_solution: cand.point.dual.iter().map(|&v| v.to_f64()).collect(),
        reduced_costs: cand
            .eval
            .reduced_costs
            .iter()
            .map(|&v| v.to_f64())
            .collect(),
        objective: pobj,
        dual_objective: dobj,
        kkt: KktSummary {
            primal_residual: res.primal_residual.to_f64(),
            dual_residual: res.dual_residual.to_f64(),
            abs_gap: gap,
            rel_gap,
        },
        iterations,
        restarts,
        polish_iterations: 0,
    }
}

fn format_log_line(iter: u64, res: &KktResiduals, omega: f64, eta: f64, restarts: u64) -> String {
    format!(
        "iter={iter} pobj={:.6e} dobj={:.6e} pres={:.6e} dres={:.6e} gap={:.6e} omega={omega:.6e} eta={eta:.6e} restarts={restarts}",
        res.primal_objective, res.dual_objective, res.primal_residual, res.dual_residual, res.abs_gap,
    )
}

/// Fixed-point data for the Halpern algorithm: the last PDHG image, its
/// product cache, and the step displacement norms (the ω-norm fixed-point
/// residual recombines from these under any ω).
struct FixedPointInfo<T> {
    image: Iterate<T>,
    kx_image: Vec<T>,
    dx_norm_sq: T,
    dy_norm_sq: T,
}

fn solve_typed<T: Real>(
    p: &LpProblem,
    opts: &SolverOptions,
    warm: Option<&WarmStart>,
    mode: TerminationMode,
) -> Result<SolveResult> {
    let original: SaddleForm<T> = build_saddle_form(p)?.cast();
    let n = original.num_vars();
    let m = original.num_constraints();
    let m1 = original.num_inequalities;

    let norm_c = norm2(&original.objective);
    let norm_q = norm2(&original.rhs);
    let eps_abs = T::of(opts.eps_abs);
    let eps_rel = T::of(opts.eps_rel);
    let eps_primal_inf = T::of(opts.eps_primal_infeasible);
    let eps_dual_inf = T::of(opts.eps_dual_infeasible);

    let scaling = default_scaling(&original.constraint_matrix);
    let scaled = apply_scaling(&original, &scaling)?;

    // Starting point: zeros, or the warm start scaled into the
    // preconditioned space; both projected into X×Y.
    let mut z: Iterate<T> = {
        let (x0, y0) = if opts.warm_start {
            let w = warm.cloned().unwrap_or_default();
            let x = w.primal.unwrap_or_else(|| vec![0.0; n]);
            let y = w.dual.unwrap_or_else(|| vec![0.0; m]);
            if x.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "warm start primal",
                    expected: n,
                    actual: x.len(),
                });
            }
            if y.len() != m {
                return Err(Error::DimensionMismatch {
                    context: "warm start dual",
                    expected: m,
                    actual: y.len(),
                });
            }
            (x, y)
        } else {
            (vec![0.0; n], vec![0.0; m])
        };
        let x0: Vec<T> = x0.iter().map(|&v| T::of(v)).collect();
        let y0: Vec<T> = y0.iter().map(|&v| T::of(v)).collect();
        let (xs, ys) = scale_solution(&x0, &y0, &scaling)?;
        Iterate {
            primal: project_box(&xs, &scaled.lower, &scaled.upper),
            dual: project_dual_cone(&ys, m1),
        }
    };

    // Step 0 check: warm starts at (or near) a solution terminate without
    // iterating.
    {
        let cand = evaluate_candidate(&original, &scaling, &z, mode);
        if mode.satisfied(&cand.eval.residuals, norm_c, norm_q, eps_abs, eps_rel) {
            return Ok(assemble_result(cand, SolveStatus::Optimal, 0, 0));
        }
    }

    // Initial step scale from the scaled matrix's spectral norm; a zero
    // matrix gets a unit scale and the line search takes over.
    let spectral = estimate_spectral_norm(
        &scaled.constraint_matrix,
        T::of(POWER_METHOD_TOL),
        POWER_METHOD_MAX_ITER,
        POWER_METHOD_SEED,
    );
    let eta0 = if spectral.is_zero || spectral.value <= T::zero() {
        T::one()
    } else if spectral.converged {
        T::of(0.99) / spectral.value
    } else {
        // An unconverged estimate may sit below ‖K̃‖; take extra margin so
        // η‖K̃‖ < 1 still holds.
        T::of(0.5) / spectral.value
    };
    let scaled_norm_c = norm2(&scaled.objective);
    let scaled_norm_q = norm2(&scaled.rhs);
    let omega0 = if scaled_norm_c > T::zero() && scaled_norm_q > T::zero() {
        scaled_norm_c / scaled_norm_q
    } else {
        T::one()
    };

    let mut state = StepState::new(eta0, omega0, z.clone());
    let mut kx = vec![T::zero(); m];
    scaled.constraint_matrix.matvec_into(&z.primal, &mut kx);
    let mut kx_anchor = kx.clone();

    let mut restarts: u64 = 0;
    let mut checks_done: u64 = 0;
    let mut epoch_start_metric: Option<T> = None;
    let mut last_check_metric = T::infinity();
    let mut previous_anchor = z.clone();
    let mut best: Option<(CandidateEval<T>, u64)> = None;
    let mut last_fp: Option<FixedPointInfo<T>> = None;
    let theta = T::of(PRIMAL_WEIGHT_SMOOTHING);

    loop {
        // Restart rule for the reflected Halpern algorithm: its metric, the
        // ω-norm fixed-point residual ‖PDHG(z) − z‖ of the previous step,
        // costs nothing, so the rule runs every step rather than only at
        // checks. A restart adopts the last PDHG image and resets the
        // anchor.
        if opts.algorithm == Algorithm::R2Hpdhg {
            if let Some(fp) = last_fp.as_ref() {
                let metric = state.omega_norm(fp.dx_norm_sq, fp.dy_norm_sq);
                match epoch_start_metric {
                    None => {
                        epoch_start_metric = Some(metric);
                        last_check_metric = metric;
                    }
                    Some(start) => {
                        let restart_now = should_restart(
                            metric.to_f64(),
                            start.to_f64(),
                            last_check_metric.to_f64(),
                            state.epoch_steps,
                            state.total_steps,
                        );
                        if restart_now {
                            state.omega = updated_omega(&state, &fp.image, &previous_anchor, theta);
                            previous_anchor = fp.image.clone();
                            z = fp.image.clone();
                            kx = fp.kx_image.clone();
                            state.anchor = z.clone();
                            kx_anchor = kx.clone();
                            state.epoch_steps = 0;
                            restarts += 1;
                            // Reopen the epoch at the adopted point's
                            // residual, re-expressed in the updated ω.
                            let baseline = state.omega_norm(fp.dx_norm_sq, fp.dy_norm_sq);
                            epoch_start_metric = Some(baseline);
                            last_check_metric = baseline;
                        } else {
                            last_check_metric = metric;
                        }
                    }
                }
            }
        }

        // One accepted step. The averaged algorithm runs the heuristic line
        // search (rejected candidates are discarded and retried with the
        // shrunk step size). The reflected Halpern algorithm keeps η fixed:
        // reflection is nonexpansive only for a fixed operator, and letting
        // η drift per step makes the anchored iteration diverge.
        let (outcome, eta_used) = match opts.algorithm {
            Algorithm::RaPdhg => {
                let mut attempts = 0;
                loop {
                    let out = pdhg_step_with_cache(&z, &scaled, state.tau(), state.sigma(), &kx);
                    let eta_now = state.eta;
                    // 1-based step index: at k = 0 the shrink factor
                    // 1 − (k+1)^{−0.3} would vanish and pin η at zero.
                    let upd = adaptive_step_update(
                        eta_now,
                        state.omega,
                        state.total_steps + 1,
                        out.delta_x_norm_sq,
                        out.delta_y_norm_sq,
                        out.interaction,
                    );
                    state.eta = upd.next_eta;
                    attempts += 1;
                    if upd.accept || attempts >= MAX_STEP_ATTEMPTS {
                        break (out, eta_now);
                    }
                }
            }
            Algorithm::R2Hpdhg => {
                let out = pdhg_step_with_cache(&z, &scaled, state.tau(), state.sigma(), &kx);
                (out, state.eta)
            }
        };

        match opts.algorithm {
            Algorithm::RaPdhg => {
                z = outcome.next;
                kx = outcome.kx_next;
                state.average.add(&z, eta_used);
            }
            Algorithm::R2Hpdhg => {
                let k = state.epoch_steps;
                let next = halpern_reflect_update(&z, &outcome.next, &state.anchor, k);
                // K·x for the combined point follows by linearity from the
                // three cached products.
                let reflect_w = T::of((k + 1) as f64) / T::of((k + 2) as f64);
                let anchor_w = T::one() / T::of((k + 2) as f64);
                let two = T::of(2.0);
                let mut kx_next = vec![T::zero(); m];
                for i in 0..m {
                    kx_next[i] =
                        reflect_w * (two * outcome.kx_next[i] - kx[i]) + anchor_w * kx_anchor[i];
                }
                last_fp = Some(FixedPointInfo {
                    image: outcome.next,
                    kx_image: outcome.kx_next,
                    dx_norm_sq: outcome.delta_x_norm_sq,
                    dy_norm_sq: outcome.delta_y_norm_sq,
                });
                z = next;
                kx = kx_next;
            }
        }
        state.epoch_steps += 1;
        state.total_steps += 1;

        let at_limit = state.total_steps >= opts.iteration_limit;
        if state.total_steps % opts.check_frequency != 0 && !at_limit {
            continue;
        }
        checks_done += 1;

        // Candidates, in termination-priority order: the averaged algorithm
        // checks its running average first, then the current iterate; the
        // Halpern algorithm checks the current iterate first, then the last
        // PDHG image (the step's projected point).
        let mut candidates: Vec<CandidateEval<T>> = Vec::with_capacity(2);
        match opts.algorithm {
            Algorithm::RaPdhg => {
                if let Some(avg) = state.average.mean() {
                    candidates.push(evaluate_candidate(&original, &scaling, &avg, mode));
                }
                candidates.push(evaluate_candidate(&original, &scaling, &z, mode));
            }
            Algorithm::R2Hpdhg => {
                candidates.push(evaluate_candidate(&original, &scaling, &z, mode));
                if let Some(fp) = last_fp.as_ref() {
                    candidates.push(evaluate_candidate(&original, &scaling, &fp.image, mode));
                }
            }
        }

        if opts.verbose && checks_done % opts.display_frequency == 0 {
            let line = format_log_line(
                state.total_steps,
                &candidates[0].eval.residuals.cast::<f64>(),
                state.omega.to_f64(),
                state.eta.to_f64(),
                restarts,
            );
            eprintln!("{line}");
        }

        for cand in &candidates {
            if best.as_ref().map_or(true, |(b, _)| cand.rank < b.rank) {
                best = Some((
                    CandidateEval {
                        point: cand.point.clone(),
                        eval: ResidualEval {
                            residuals: cand.eval.residuals,
                            reduced_costs: cand.eval.reduced_costs.clone(),
                        },
                        rank: cand.rank,
                    },
                    state.total_steps,
                ));
            }
        }

        if let Some(idx) = candidates
            .iter()
            .position(|c| mode.satisfied(&c.eval.residuals, norm_c, norm_q, eps_abs, eps_rel))
        {
            let cand = candidates.swap_remove(idx);
            return Ok(assemble_result(
                cand,
                SolveStatus::Optimal,
                state.total_steps,
                restarts,
            ));
        }

        // Infeasibility, from the epoch's average direction in original
        // space (before any restart resets the anchor).
        {
            let (cur_x, cur_y) = unscale_solution(&z.primal, &z.dual, &scaling)
                .expect("iterate dimensions match the scaling");
            let (anc_x, anc_y) =
                unscale_solution(&state.anchor.primal, &state.anchor.dual, &scaling)
                    .expect("iterate dimensions match the scaling");
            let certificate = infeasibility::detect_from_saddle(
                &original,
                &Iterate {
                    primal: cur_x,
                    dual: cur_y,
                },
                &Iterate {
                    primal: anc_x,
                    dual: anc_y,
                },
                state.epoch_steps.max(1),
                eps_primal_inf,
                eps_dual_inf,
            );
            if let Some(cert) = certificate {
                let status = match cert {
                    InfeasibilityCertificate::Primal { .. } => SolveStatus::PrimalInfeasible,
                    InfeasibilityCertificate::Dual { .. } => SolveStatus::DualInfeasible,
                };
                // Report the best point in hand; the status carries the
                // conclusion.
                let best_idx = (0..candidates.len())
                    .min_by(|&a, &b| {
                        candidates[a]
                            .rank
                            .partial_cmp(&candidates[b].rank)
                            .unwrap_or(std::cmp::Ordering::Equal)
                    })
                    .expect("candidates evaluated");
                let cand = candidates.swap_remove(best_idx);
                return Ok(assemble_result(cand, status, state.total_steps, restarts));
            }
        }

        // Restart rule for the averaged algorithm: the metric is the KKT
        // triple norm of the running average, available only at checks.
        if opts.algorithm == Algorithm::RaPdhg {
            let metric = candidates[0].eval.residuals.triple_norm();
            match epoch_start_metric {
                None => {
                    // First check of the run establishes the baseline.
                    epoch_start_metric = Some(metric);
                    last_check_metric = metric;
                }
                Some(start) => {
                    let restart_now = should_restart(
                        metric.to_f64(),
                        start.to_f64(),
                        last_check_metric.to_f64(),
                        state.epoch_steps,
                        state.total_steps,
                    );
                    if restart_now {
                        let avg = state.average.mean().expect("nonempty epoch");
                        let mut kavg = vec![T::zero(); m];
                        scaled.constraint_matrix.matvec_into(&avg.primal, &mut kavg);
                        state.omega = updated_omega(&state, &avg, &previous_anchor, theta);
                        previous_anchor = avg.clone();
                        z = avg;
                        kx = kavg;
                        state.anchor = z.clone();
                        kx_anchor = kx.clone();
                        state.average.reset();
                        state.epoch_steps = 0;
                        restarts += 1;
                        // The adopted candidate's metric opens the new epoch
                        // (the KKT norm does not depend on ω).
                        epoch_start_metric = Some(metric);
                        last_check_metric = metric;
                    } else {
                        last_check_metric = metric;
                    }
                }
            }
        }

        if at_limit {
            let (cand, _) = best.take().expect("candidates evaluated at this check");
            return Ok(assemble_result(
                cand,
                SolveStatus::IterationLimit,
                state.total_steps,
                restarts,
            ));
        }
    }
}

fn updated_omega<T: Real>(
    state: &StepState<T>,
    new_anchor: &Iterate<T>,
    previous_anchor: &Iterate<T>,
    theta: T,
) -> T {
    let dx = new_anchor
        .primal
        .iter()
        .zip(&previous_anchor.primal)
        .map(|(&a, &b)| a - b)
        .collect::<Vec<T>>();
    let dy = new_anchor
        .dual
        .iter()
        .zip(&previous_anchor.dual)
        .map(|(&a, &b)| a - b)
        .collect::<Vec<T>>();
    update_primal_weight(state.omega, norm2(&dx), norm2(&dy), theta)
}

fn solve_with_mode(
    p: &LpProblem,
    opts: &SolverOptions,
    warm: Option<&WarmStart>,
    mode: TerminationMode,
) -> Result<SolveResult> {
    match opts.precision {
        Precision::F64 => solve_typed::<f64>(p, opts, warm, mode),
        Precision::F32 => solve_typed::<f32>(p, opts, warm, mode),
    }
}

/// Solves a linear program.
pub fn solve(p: &LpProblem, opts: &SolverOptions, warm: Option<&WarmStart>) -> Result<SolveResult> {
    opts.validate()?;
    let mut result = solve_with_mode(p, opts, warm, TerminationMode::Standard)?;
    if opts.feasibility_polishing && result.status == SolveStatus::Optimal {
        let pre_polish_objective = result.objective;
        let point = Iterate {
            primal: result.primal_solution.clone(),
            dual: result.dual_solution.clone(),
        };
        let polish = feasibility_polish(p, &point, opts)?;
        let sf = build_saddle_form(p)?;
        let eval = residuals_from_saddle(&sf, &polish.point.primal, &polish.point.dual);
        let mut polished = assemble_result(
            CandidateEval {
                point: polish.point,
                rank: eval.residuals.triple_norm(),
                eval,
            },
            SolveStatus::Optimal,
            result.iterations,
            result.restarts,
        );
        polished.polish_iterations = polish.iterations;
        if opts.verbose {
            eprintln!(
                "polish: iterations={} complete={} objective {:.9e} -> {:.9e} (degradation {:.3e})",
                polish.iterations,
                polish.complete,
                pre_polish_objective,
                polished.objective,
                polished.objective - pre_polish_objective,
            );
        }
        result = polished;
    }
    Ok(result)
}

/// Post-solve feasibility polishing.
///
/// Runs a primal polish (objective replaced by zero, warm started at the
/// incoming primal with a zero dual, terminating once the primal residual
/// is below `eps_feas_polish`) and then a dual polish (right-hand sides
/// replaced by zero and finite bounds collapsed to zero, warm started at
/// the incoming dual with a zero primal, terminating on the dual
/// residual). Either feasibility problem has the other half of its saddle
/// point at exactly zero, so warm-starting that half at zero keeps the
/// polish close to the incoming solution. Objective degradation is the
/// caller's to inspect; it is not bounded.
pub fn feasibility_polish(
    p: &LpProblem,
    z: &Iterate,
    opts: &SolverOptions,
) -> Result<PolishResult> {
    opts.validate()?;
    let mut polish_opts = opts.clone();
    polish_opts.warm_start = true;
    polish_opts.feasibility_polishing = false;

    let mut primal_problem = p.clone();
    primal_problem.objective = vec![0.0; p.num_vars()];
    primal_problem.objective_offset = 0.0;
    let warm = WarmStart {
        primal: Some(z.primal.clone()),
        dual: None,
    };
    let primal_phase = solve_with_mode(
        &primal_problem,
        &polish_opts,
        Some(&warm),
        TerminationMode::PrimalFeasibility(opts.eps_feas_polish),
    )?;

    // Zeroing finite bounds keeps the dual absorbability pattern and makes
    // x = 0 feasible (and optimal), so the dual phase is a pure
    // dual-feasibility run.
    let mut dual_problem = p.clone();
    dual_problem.eq_rhs = vec![0.0; p.num_equalities()];
    dual_problem.ineq_rhs = vec![0.0; p.num_inequalities()];
    dual_problem.objective_offset = 0.0;
    dual_problem.lower = p
        .lower
        .iter()
        .map(|&l| if l.is_finite() { 0.0 } else { l })
        .collect();
    dual_problem.upper = p
        .upper
        .iter()
        .map(|&u| if u.is_finite() { 0.0 } else { u })
        .collect();
    let warm_dual = WarmStart {
        primal: None,
        dual: Some(z.dual.clone()),
    };
    let dual_phase = solve_with_mode(
        &dual_problem,
        &polish_opts,
        Some(&warm_dual),
        TerminationMode::DualFeasibility(opts.eps_feas_polish),
    )?;

    Ok(PolishResult {
        point: Iterate {
            primal: primal_phase.primal_solution,
            dual: dual_phase.dual_solution,
        },
        iterations: primal_phase.iterations + dual_phase.iterations,
        complete: primal_phase.status == SolveStatus::Optimal
            && dual_phase.status == SolveStatus::Optimal,
    })
}

/// Solves a batch of same-shape problems, possibly in parallel. Results
/// are bitwise identical to sequential [`solve`] calls member by member,
/// independent of worker scheduling.
pub fn batch_solve(
    problems: &[LpProblem],
    opts: &SolverOptions,
    warm: Option<&[WarmStart]>,
) -> Result<Vec<SolveResult>> {
    opts.validate()?;
    if let Some(w) = warm {
        if w.len() != problems.len() {
            return Err(Error::WarmStartLengthMismatch {
                expected: problems.len(),
                actual: w.len(),
            });
        }
    }
    if let Some(first) = problems.first() {
        let shape = first.shape();
        for (index, p) in problems.iter().enumerate() {
            if p.shape() != shape {
                return Err(Error::BatchShapeMismatch { index });
            }
        }
    }
    let results: Vec<Result<SolveResult>> = problems
        .par_iter()
        .enumerate()
        .map(|(i, p)| solve(p, opts, warm.map(|w| &w[i])))
        .collect();
    // Sequential unwrap keeps error reporting deterministic (first failing
    // index wins).
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        out.push(r?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ConstraintMatrix, Storage};

    fn two_var_problem() -> LpProblem {
        // min 2x₁ + x₂  s.t. x₁ + x₂ ≥ 1, 0 ≤ x ≤ 1; optimum (0, 1), value 1.
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

    fn tight_opts(algorithm: Algorithm) -> SolverOptions {
        SolverOptions {
            eps_abs: 1e-8,
            eps_rel: 1e-8,
            algorithm,
            iteration_limit: 200_000,
            ..SolverOptions::default()
        }
    }

    #[test]
    fn solves_two_var_lp_with_both_algorithms() {
        for algorithm in [Algorithm::RaPdhg, Algorithm::R2Hpdhg] {
            let result = solve(&two_var_problem(), &tight_opts(algorithm), None).unwrap();
            assert_eq!(result.status, SolveStatus::Optimal, "{algorithm:?}");
            assert!(
                (result.objective - 1.0).abs() < 1e-6,
                "{algorithm:?}: {}",
                result.objective
            );
            assert!((result.primal_solution[0]).abs() < 1e-4);
            assert!((result.primal_solution[1] - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn optimal_results_self_certify() {
        for algorithm in [Algorithm::RaPdhg, Algorithm::R2Hpdhg] {
            let p = two_var_problem();
            let opts = tight_opts(algorithm);
            let result = solve(&p, &opts, None).unwrap();
            let z = Iterate {
                primal: result.primal_solution.clone(),
                dual: result.dual_solution.clone(),
            };
            let res = compute_kkt_residuals(&p, &z).unwrap();
            let norms = (norm2(&p.objective), norm2(&p.ineq_rhs));
            assert!(check_termination(&res, norms, &opts));
        }
    }

    #[test]
    fn warm_start_at_optimum_terminates_immediately() {
        for algorithm in [Algorithm::RaPdhg, Algorithm::R2Hpdhg] {
            let mut opts = tight_opts(algorithm);
            opts.warm_start = true;
            let warm = WarmStart {
                primal: Some(vec![0.0, 1.0]),
                dual: Some(vec![1.0]),
            };
            let result = solve(&two_var_problem(), &opts, Some(&warm)).unwrap();
            assert_eq!(result.status, SolveStatus::Optimal);
            assert!(result.iterations <= opts.check_frequency);
        }
    }

    #[test]
    fn warm_start_with_primal_only() {
        let opts = SolverOptions {
            warm_start: true,
            ..SolverOptions::default()
        };
        let warm = WarmStart {
            primal: Some(vec![0.0, 1.0]),
            dual: None,
        };
        let result = solve(&two_var_problem(), &opts, Some(&warm)).unwrap();
        assert_eq!(result.status, SolveStatus::Optimal);
    }

    #[test]
    fn infeasible_warm_start_is_projected() {
        let mut opts = tight_opts(Algorithm::R2Hpdhg);
        opts.warm_start = true;
        let warm = WarmStart {
            primal: Some(vec![50.0, -3.0]),
            dual: Some(vec![-7.0]),
        };
        let result = solve(&two_var_problem(), &opts, Some(&warm)).unwrap();
        assert_eq!(result.status, SolveStatus::Optimal);
        assert!((result.objective - 1.0).abs() < 1e-6);
    }

    #[test]
    fn iteration_limit_returns_best_candidate() {
        // A grid flow LP at an extreme tolerance cannot finish in 100 steps.
        use crate::problem::generators::gen_grid_shortest_path;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let costs: Vec<f64> = (0..36).map(|_| rng.random_range(0.1..1.0)).collect();
        let p = gen_grid_shortest_path(6, &costs).unwrap();
        let opts = SolverOptions {
            eps_abs: 1e-13,
            eps_rel: 1e-13,
            iteration_limit: 100,
            ..SolverOptions::default()
        };
        let result = solve(&p, &opts, None).unwrap();
        assert_eq!(result.status, SolveStatus::IterationLimit);
        assert_eq!(result.iterations, 100);
        // The returned point is still in the box with nonnegative
        // sign-constrained duals (none here: all rows are equalities).
        assert!(result
            .primal_solution
            .iter()
            .all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn primal_infeasible_lp_detected() {
        // x ≥ 1 and −x ≥ 0 cannot both hold.
        let p = LpProblem::new(
            vec![0.0],
            ConstraintMatrix::empty(Storage::Dense, 1),
            vec![],
            ConstraintMatrix::dense_from_rows(&[vec![1.0], vec![-1.0]]).unwrap(),
            vec![1.0, 0.0],
            vec![f64::NEG_INFINITY],
            vec![f64::INFINITY],
        );
        let opts = SolverOptions {
            iteration_limit: 10_000,
            ..SolverOptions::default()
        };
        let result = solve(&p, &opts, None).unwrap();
        assert_eq!(result.status, SolveStatus::PrimalInfeasible);
    }

    #[test]
    fn dual_infeasible_lp_detected() {
        // min −x, x ≥ 0 unconstrained above: unbounded.
        let p = LpProblem::new(
            vec![-1.0],
            ConstraintMatrix::empty(Storage::Dense, 1),
            vec![],
            ConstraintMatrix::empty(Storage::Dense, 1),
            vec![],
            vec![0.0],
            vec![f64::INFINITY],
        );
        let opts = SolverOptions {
            iteration_limit: 10_000,
            ..SolverOptions::default()
        };
        let result = solve(&p, &opts, None).unwrap();
        assert_eq!(result.status, SolveStatus::DualInfeasible);
    }

    #[test]
    fn solve_rejects_invalid_problem() {
        let mut p = two_var_problem();
        p.lower = vec![2.0, 2.0]; // crossed against upper = 1
        assert!(matches!(
            solve(&p, &SolverOptions::default(), None),
            Err(Error::InvalidProblem(_))
        ));
    }

    #[test]
    fn solve_rejects_invalid_options() {
        let opts = SolverOptions {
            eps_abs: 0.0, // deliberately invalid
            ..SolverOptions::default()
        };
        assert!(matches!(
            solve(&two_var_problem(), &opts, None),
            Err(Error::InvalidOptions(_))
        ));
    }

    #[test]
    fn determinism_bitwise() {
        let opts = tight_opts(Algorithm::RaPdhg);
        let a = solve(&two_var_problem(), &opts, None).unwrap();
        let b = solve(&two_var_problem(), &opts, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn batch_of_one_equals_solve() {
        let opts = SolverOptions::default();
        let p = two_var_problem();
        let batch = batch_solve(std::slice::from_ref(&p), &opts, None).unwrap();
        let single = solve(&p, &opts, None).unwrap();
        assert_eq!(batch[0], single);
    }

    #[test]
    fn batch_of_copies_is_uniform() {
        let opts = SolverOptions::default();
        let problems = vec![two_var_problem(); 8];
        let results = batch_solve(&problems, &opts, None).unwrap();
        for r in &results[1..] {
            assert_eq!(r, &results[0]);
        }
    }

    #[test]
    fn batch_shape_mismatch_names_offender() {
        let mut q = two_var_problem();
        q.objective = vec![1.0, 2.0, 3.0];
        q.lower = vec![0.0; 3];
        q.upper = vec![1.0; 3];
        q.ineq_matrix = ConstraintMatrix::dense_from_rows(&[vec![1.0, 1.0, 1.0]]).unwrap();
        q.eq_matrix = ConstraintMatrix::empty(Storage::Dense, 3);
        let problems = vec![two_var_problem(), two_var_problem(), q];
        match batch_solve(&problems, &SolverOptions::default(), None) {
            Err(Error::BatchShapeMismatch { index }) => assert_eq!(index, 2),
            other => panic!("expected shape mismatch, got {other:?}"),
        }
    }

    #[test]
    fn polish_leaves_feasible_point_unchanged() {
        let p = two_var_problem();
        let z = Iterate {
            primal: vec![0.0, 1.0],
            dual: vec![1.0],
        };
        let opts = SolverOptions::default();
        let polish = feasibility_polish(&p, &z, &opts).unwrap();
        assert!(polish.complete);
        assert_eq!(
            polish.iterations, 0,
            "feasible input terminates at the step-0 check"
        );
        for (a, b) in polish.point.primal.iter().zip(&z.primal) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn polish_drives_primal_residual_down() {
        let p = two_var_problem();
        // Residual 1e−3 at this slightly infeasible point.
        let z = Iterate {
            primal: vec![0.0, 1.0 - 1e-3],
            dual: vec![1.0],
        };
        let opts = SolverOptions::default();
        let polish = feasibility_polish(&p, &z, &opts).unwrap();
        assert!(polish.complete);
        let res = compute_kkt_residuals(&p, &polish.point).unwrap();
        assert!(
            res.primal_residual <= opts.eps_feas_polish,
            "{}",
            res.primal_residual
        );
    }

    #[test]
    fn polish_of_zero_objective_problem_matches_main_solve() {
        let mut p = two_var_problem();
        p.objective = vec![0.0, 0.0];
        let opts = SolverOptions::default();
        let main = solve(&p, &opts, None).unwrap();
        let z = Iterate {
            primal: main.primal_solution.clone(),
            dual: main.dual_solution.clone(),
        };
        let polish = feasibility_polish(&p, &z, &opts).unwrap();
        let res = compute_kkt_residuals(&p, &polish.point).unwrap();
        assert!(res.primal_residual <= opts.eps_feas_polish);
    }

    #[test]
    fn solve_with_polishing_flag_reports_iterations() {
        let p = two_var_problem();
        let opts = SolverOptions {
            eps_abs: 1e-3,
            eps_rel: 1e-3,
            feasibility_polishing: true,
            ..SolverOptions::default()
        };
        let result = solve(&p, &opts, None).unwrap();
        assert_eq!(result.status, SolveStatus::Optimal);
        assert!(result.kkt.primal_residual <= opts.eps_feas_polish);
    }

    #[test]
    fn f32_precision_solves_at_loose_tolerance() {
        let opts = SolverOptions {
            precision: Precision::F32,
            eps_abs: 1e-3,
            eps_rel: 1e-3,
            ..SolverOptions::default()
        };
        let result = solve(&two_var_problem(), &opts, None).unwrap();
        assert_eq!(result.status, SolveStatus::Optimal);
        assert!((result.objective - 1.0).abs() < 1e-2);
    }

    #[test]
    fn log_line_format_is_stable() {
        let res = KktResiduals {
            primal_residual: 1e-3,
            dual_residual: 2e-3,
            primal_objective: 1.5,
            dual_objective: 1.4,
            abs_gap: 0.1,
        };
        let line = format_log_line(128, &res, 2.0, 0.5, 3);
        assert!(line.starts_with("iter=128 pobj="));
        for key in [
            "pobj=",
            "dobj=",
            "pres=",
            "dres=",
            "gap=",
            "omega=",
            "eta=",
            "restarts=3",
        ] {
            assert!(line.contains(key), "missing {key} in {line}");
        }
    }
}
