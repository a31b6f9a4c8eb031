//! The iteration kernel: projections, one PDHG step, Halpern reflection,
//! running averages, the step-size rule and the primal weight.
//!
//! One PDHG step on the saddle form is
//!
//! ```text
//! x⁺ = proj_X(x − τ(c − Kᵀy))
//! y⁺ = proj_Y(y + σ(q − K(2x⁺ − x)))
//! ```
//!
//! with τ = η/ω and σ = ηω. The reflected Halpern variant combines the
//! reflected step `2·PDHG(z) − z` with the epoch anchor z⁰ using weights
//! (k+1)/(k+2) and 1/(k+2).

use crate::problem::SaddleForm;
use crate::scalar::{norm2_sq, Real};

/// Primal-dual pair z = (x, y).
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate<T = f64> {
    pub primal: Vec<T>,
    pub dual: Vec<T>,
}

impl<T: Real> Iterate<T> {
    pub fn zeros(num_vars: usize, num_constraints: usize) -> Self {
        Self {
            primal: vec![T::zero(); num_vars],
            dual: vec![T::zero(); num_constraints],
        }
    }

    pub fn cast<S: Real>(&self) -> Iterate<S> {
        Iterate {
            primal: self.primal.iter().map(|&v| S::of(v.to_f64())).collect(),
            dual: self.dual.iter().map(|&v| S::of(v.to_f64())).collect(),
        }
    }
}

/// Componentwise projection onto the box [l, u], i.e. median(lᵢ, xᵢ, uᵢ).
pub fn project_box<T: Real>(x: &[T], lower: &[T], upper: &[T]) -> Vec<T> {
    assert_eq!(x.len(), lower.len());
    assert_eq!(x.len(), upper.len());
    x.iter()
        .zip(lower)
        .zip(upper)
        .map(|((&v, &l), &u)| v.max(l).min(u))
        .collect()
}

fn project_box_in_place<T: Real>(x: &mut [T], lower: &[T], upper: &[T]) {
    for ((v, &l), &u) in x.iter_mut().zip(lower).zip(upper) {
        *v = (*v).max(l).min(u);
    }
}

/// Projection onto the dual cone: the first `num_inequalities` entries are
/// clamped at 0 from below, the rest (equality duals) are free.
pub fn project_dual_cone<T: Real>(y: &[T], num_inequalities: usize) -> Vec<T> {
    assert!(y.len() >= num_inequalities);
    let mut out = y.to_vec();
    project_dual_cone_in_place(&mut out, num_inequalities);
    out
}

fn project_dual_cone_in_place<T: Real>(y: &mut [T], num_inequalities: usize) {
    for v in y.iter_mut().take(num_inequalities) {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}

/// One PDHG step. Costs exactly two matrix products: one with Kᵀ (at y)
/// and one with K (at the extrapolated primal).
pub fn pdhg_step<T: Real>(z: &Iterate<T>, sf: &SaddleForm<T>, tau: T, sigma: T) -> Iterate<T> {
    let k = &sf.constraint_matrix;
    let mut kty = vec![T::zero(); sf.num_vars()];
    k.matvec_transpose_into(&z.dual, &mut kty);

    let mut x_next = Vec::with_capacity(sf.num_vars());
    for j in 0..sf.num_vars() {
        x_next.push(z.primal[j] - tau * (sf.objective[j] - kty[j]));
    }
    project_box_in_place(&mut x_next, &sf.lower, &sf.upper);

    let extrapolated: Vec<T> = x_next
        .iter()
        .zip(&z.primal)
        .map(|(&xn, &x)| T::of(2.0) * xn - x)
        .collect();
    let mut k_ext = vec![T::zero(); sf.num_constraints()];
    k.matvec_into(&extrapolated, &mut k_ext);

    let mut y_next = Vec::with_capacity(sf.num_constraints());
    for i in 0..sf.num_constraints() {
        y_next.push(z.dual[i] + sigma * (sf.rhs[i] - k_ext[i]));
    }
    project_dual_cone_in_place(&mut y_next, sf.num_inequalities);

    Iterate {
        primal: x_next,
        dual: y_next,
    }
}

/// Everything the driver needs from one candidate PDHG step.
#[derive(Debug, Clone)]
pub struct StepOutcome<T> {
    /// PDHG(z), projected into X×Y.
    pub next: Iterate<T>,
    /// K·x⁺, reusable as the product cache for the next step.
    pub kx_next: Vec<T>,
    /// |Δyᵀ K Δx| for the step-size rule.
    pub interaction: T,
    /// ‖x⁺ − x‖².
    pub delta_x_norm_sq: T,
    /// ‖y⁺ − y‖².
    pub delta_y_norm_sq: T,
}

/// PDHG step that reuses a cached product `kx = K·x`, still two matrix
/// products per call, and additionally yields the interaction term
/// `|Δyᵀ K Δx| = |Δyᵀ(Kx⁺ − Kx)|` for free.
pub fn pdhg_step_with_cache<T: Real>(
    z: &Iterate<T>,
    sf: &SaddleForm<T>,
    tau: T,
    sigma: T,
    kx: &[T],
) -> StepOutcome<T> {
    let k = &sf.constraint_matrix;
    let mut kty = vec![T::zero(); sf.num_vars()];
    k.matvec_transpose_into(&z.dual, &mut kty);

    let mut x_next = Vec::with_capacity(sf.num_vars());
    for j in 0..sf.num_vars() {
        x_next.push(z.primal[j] - tau * (sf.objective[j] - kty[j]));
    }
    project_box_in_place(&mut x_next, &sf.lower, &sf.upper);

    let mut kx_next = vec![T::zero(); sf.num_constraints()];
    k.matvec_into(&x_next, &mut kx_next);

    let two = T::of(2.0);
    let mut y_next = Vec::with_capacity(sf.num_constraints());
    for i in 0..sf.num_constraints() {
        let k_ext = two * kx_next[i] - kx[i];
        y_next.push(z.dual[i] + sigma * (sf.rhs[i] - k_ext));
    }
    project_dual_cone_in_place(&mut y_next, sf.num_inequalities);

    let mut interaction = T::zero();
    let mut delta_y_norm_sq = T::zero();
    for i in 0..sf.num_constraints() {
        let dy = y_next[i] - z.dual[i];
        interaction += dy * (kx_next[i] - kx[i]);
        delta_y_norm_sq += dy * dy;
    }
    let mut delta_x_norm_sq = T::zero();
    for j in 0..sf.num_vars() {
        let dx = x_next[j] - z.primal[j];
        delta_x_norm_sq += dx * dx;
    }

    StepOutcome {
        next: Iterate {
            primal: x_next,
            dual: y_next,
        },
        kx_next,
        interaction: interaction.abs(),
        delta_x_norm_sq,
        delta_y_norm_sq,
    }
}

/// Halpern update with reflection:
/// `z_{k+1} = ((k+1)/(k+2))·(2·PDHG(z_k) − z_k) + (1/(k+2))·z⁰`.
pub fn halpern_reflect_update<T: Real>(
    z: &Iterate<T>,
    pdhg_of_z: &Iterate<T>,
    anchor: &Iterate<T>,
    k: u64,
) -> Iterate<T> {
    let reflect_weight = T::of((k + 1) as f64) / T::of((k + 2) as f64);
    let anchor_weight = T::one() / T::of((k + 2) as f64);
    let two = T::of(2.0);
    let combine = |cur: &[T], step: &[T], anc: &[T]| {
        cur.iter()
            .zip(step)
            .zip(anc)
            .map(|((&c, &w), &a)| reflect_weight * (two * w - c) + anchor_weight * a)
            .collect::<Vec<T>>()
    };
    Iterate {
        primal: combine(&z.primal, &pdhg_of_z.primal, &anchor.primal),
        dual: combine(&z.dual, &pdhg_of_z.dual, &anchor.dual),
    }
}

/// Weighted running average of iterates since the last restart.
#[derive(Debug, Clone)]
pub struct RunningAverage<T> {
    sum_primal: Vec<T>,
    sum_dual: Vec<T>,
    weight: T,
}

impl<T: Real> RunningAverage<T> {
    pub fn new(num_vars: usize, num_constraints: usize) -> Self {
        Self {
            sum_primal: vec![T::zero(); num_vars],
            sum_dual: vec![T::zero(); num_constraints],
            weight: T::zero(),
        }
    }

    /// Folds a new iterate in with the given positive step weight.
    pub fn add(&mut self, z: &Iterate<T>, step_weight: T) {
        debug_assert!(step_weight > T::zero());
        for (s, &v) in self.sum_primal.iter_mut().zip(&z.primal) {
            *s += step_weight * v;
        }
        for (s, &v) in self.sum_dual.iter_mut().zip(&z.dual) {
            *s += step_weight * v;
        }
        self.weight += step_weight;
    }

    /// Accumulated weight since the last reset.
    pub fn weight(&self) -> T {
        self.weight
    }

    /// Current weighted mean, or `None` before any iterate was added.
    pub fn mean(&self) -> Option<Iterate<T>> {
        if self.weight <= T::zero() {
            return None;
        }
        Some(Iterate {
            primal: self.sum_primal.iter().map(|&s| s / self.weight).collect(),
            dual: self.sum_dual.iter().map(|&s| s / self.weight).collect(),
        })
    }

    /// Clears the accumulator (used at restarts).
    pub fn reset(&mut self) {
        for s in self.sum_primal.iter_mut() {
            *s = T::zero();
        }
        for s in self.sum_dual.iter_mut() {
            *s = T::zero();
        }
        self.weight = T::zero();
    }
}

/// Outcome of the step-size rule.
#[derive(Debug, Clone, Copy)]
pub struct StepSizeUpdate<T> {
    /// Whether the candidate step is admissible (η ≤ η̄).
    pub accept: bool,
    /// Step-size scale for the next attempt or iteration.
    pub next_eta: T,
}

/// Step-size rule: with Δ the candidate step's movement, the largest
/// admissible scale is
///
/// ```text
/// η̄ = (ω‖Δx‖² + ‖Δy‖²/ω) / (2·|Δyᵀ K Δx|)
/// ```
///
/// (∞ when the interaction vanishes). The candidate is accepted iff
/// η ≤ η̄, and either way the scale moves to
/// `min((1 − (k+1)^{−0.3})·η̄, (1 + (k+1)^{−0.6})·η)` where k counts
/// iterations so far. Accepted steps therefore satisfy the local
/// nonexpansiveness condition τσ‖K‖² ≤ 1 along the step direction.
pub fn adaptive_step_update<T: Real>(
    eta: T,
    omega: T,
    iteration_count: u64,
    delta_x_norm_sq: T,
    delta_y_norm_sq: T,
    interaction: T,
) -> StepSizeUpdate<T> {
    let limit = if interaction > T::zero() {
        (omega * delta_x_norm_sq + delta_y_norm_sq / omega) / (T::of(2.0) * interaction)
    } else {
        T::infinity()
    };
    let k1 = T::of((iteration_count + 1) as f64);
    let shrink = (T::one() - k1.powf(T::of(-0.3))) * limit;
    let grow = (T::one() + k1.powf(T::of(-0.6))) * eta;
    StepSizeUpdate {
        accept: eta <= limit,
        next_eta: shrink.min(grow),
    }
}

/// Primal-weight update applied at restarts: geometric smoothing of the
/// dual-to-primal movement ratio,
/// `log ω⁺ = θ·log(‖Δy‖/‖Δx‖) + (1−θ)·log ω`. Left unchanged when either
/// movement vanishes (or the ratio is not finite).
pub fn update_primal_weight<T: Real>(omega: T, delta_x_norm: T, delta_y_norm: T, theta: T) -> T {
    if !(delta_x_norm > T::zero() && delta_y_norm > T::zero()) {
        return omega;
    }
    let new_log = theta * (delta_y_norm / delta_x_norm).ln() + (T::one() - theta) * omega.ln();
    let candidate = new_log.exp();
    if candidate.is_finite() && candidate > T::zero() {
        candidate
    } else {
        omega
    }
}

/// Per-solve iteration state: step scale, primal weight, counters, the
/// epoch anchor and the running average. τ and σ are derived (`τ = η/ω`,
/// `σ = ηω`) so the invariants τσ = η² and τ/σ = 1/ω² hold by construction.
#[derive(Debug, Clone)]
pub struct StepState<T> {
    pub eta: T,
    pub omega: T,
    /// Accepted steps since the last restart (the Halpern k).
    pub epoch_steps: u64,
    /// Accepted steps overall; drives the step-size rule's schedule.
    pub total_steps: u64,
    /// Epoch anchor z⁰ (Halpern anchor / restart start point).
    pub anchor: Iterate<T>,
    /// Running average of the epoch's iterates (restart candidate).
    pub average: RunningAverage<T>,
}

impl<T: Real> StepState<T> {
    pub fn new(eta: T, omega: T, anchor: Iterate<T>) -> Self {
        let average = RunningAverage::new(anchor.primal.len(), anchor.dual.len());
        Self {
            eta,
            omega,
            epoch_steps: 0,
            total_steps: 0,
            anchor,
            average,
        }
    }

    pub fn tau(&self) -> T {
        self.eta / self.omega
    }

    pub fn sigma(&self) -> T {
        self.eta * self.omega
    }

    /// ω-norm of a primal/dual displacement: √(ω‖dx‖² + ‖dy‖²/ω).
    pub fn omega_norm(&self, dx_norm_sq: T, dy_norm_sq: T) -> T {
        (self.omega * dx_norm_sq + dy_norm_sq / self.omega).sqrt()
    }
}

/// ω-norm distance between two iterates.
pub fn omega_distance<T: Real>(a: &Iterate<T>, b: &Iterate<T>, omega: T) -> T {
    let dx: Vec<T> = a
        .primal
        .iter()
        .zip(&b.primal)
        .map(|(&p, &q)| p - q)
        .collect();
    let dy: Vec<T> = a.dual.iter().zip(&b.dual).map(|(&p, &q)| p - q).collect();
    (omega * norm2_sq(&dx) + norm2_sq(&dy) / omega).sqrt()
}
