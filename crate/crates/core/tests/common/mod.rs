//! Shared oracles and instance builders for the integration suites.
//!
//! The oracles are written against the raw instance data (costs, weights,
//! capacities) with plain std code, independent of the solver's matrix and
//! iteration machinery, so they can certify it.

// Each integration target compiles its own copy; not every target uses
// every helper, and the numeric routines index several arrays at once.
#![allow(dead_code)]
#![allow(clippy::needless_range_loop)]

use folp_core::problem::generators::{
    gen_grid_shortest_path, gen_knapsack, seeded_knapsack_weights,
};
use folp_core::LpProblem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Shortest-path cost from the top-left to the bottom-right vertex of an
/// 8-connected k×k grid where stepping onto a vertex costs that vertex's
/// value (the source is free). Plain Dijkstra.
pub fn dijkstra_grid_cost(k: usize, vertex_costs: &[f64]) -> f64 {
    assert_eq!(vertex_costs.len(), k * k);
    const MOVES: [(isize, isize); 8] = [
        (-1, -1),
        (-1, 0),
        (-1, 1),
        (0, -1),
        (0, 1),
        (1, -1),
        (1, 0),
        (1, 1),
    ];

    #[derive(PartialEq)]
    struct Entry(f64, usize);
    impl Eq for Entry {}
    impl PartialOrd for Entry {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Entry {
        fn cmp(&self, other: &Self) -> Ordering {
            // Reversed: BinaryHeap is a max-heap.
            other.0.partial_cmp(&self.0).unwrap_or(Ordering::Equal)
        }
    }

    let n = k * k;
    let mut dist = vec![f64::INFINITY; n];
    dist[0] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Entry(0.0, 0));
    while let Some(Entry(d, node)) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        if node == n - 1 {
            return d;
        }
        let (r, c) = ((node / k) as isize, (node % k) as isize);
        for (dr, dc) in MOVES {
            let (nr, nc) = (r + dr, c + dc);
            if nr < 0 || nc < 0 || nr >= k as isize || nc >= k as isize {
                continue;
            }
            let next = nr as usize * k + nc as usize;
            let nd = d + vertex_costs[next];
            if nd < dist[next] {
                dist[next] = nd;
                heap.push(Entry(nd, next));
            }
        }
    }
    dist[n - 1]
}

/// Solves a small dense linear system by Gaussian elimination with partial
/// pivoting; `None` when (numerically) singular.
fn solve_linear_system(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(Ordering::Equal)
        })?;
        if a[pivot][col].abs() < 1e-11 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col] / a[col][col];
            for j in col..n {
                a[row][j] -= factor * a[col][j];
            }
            b[row] -= factor * b[col];
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(total: usize, pick: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(pick);
    fn rec(
        start: usize,
        total: usize,
        pick: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if current.len() == pick {
            out.push(current.clone());
            return;
        }
        for i in start..total {
            current.push(i);
            rec(i + 1, total, pick, current, out);
            current.pop();
        }
    }
    rec(0, total, pick, &mut current, &mut out);
    out
}

/// Optimal value of the max-form knapsack LP
/// `max vᵀx s.t. Wx ≤ caps, 0 ≤ x ≤ 1` by enumerating the active sets of
/// its d-dimensional dual
/// `min capsᵀy + Σᵢ max(0, vᵢ − wᵢᵀy)  over y ≥ 0`.
///
/// Every dual vertex is the intersection of d hyperplanes taken from
/// {y_j = 0} ∪ {vᵢ = wᵢᵀy}; the dual is coercive (caps > 0), so scanning
/// all C(n+d, d) intersections finds the optimum. Strong duality makes it
/// the primal value. `weights` is d×n row-major.
pub fn knapsack_max_value_dual(values: &[f64], weights: &[f64], caps: &[f64]) -> f64 {
    let n = values.len();
    let d = caps.len();
    assert_eq!(weights.len(), d * n);
    let w_col = |i: usize| (0..d).map(|j| weights[j * n + i]).collect::<Vec<f64>>();

    let objective = |y: &[f64]| -> f64 {
        let mut f: f64 = y.iter().zip(caps).map(|(yi, c)| yi * c).sum();
        for i in 0..n {
            let slack: f64 = values[i] - w_col(i).iter().zip(y).map(|(w, yi)| w * yi).sum::<f64>();
            if slack > 0.0 {
                f += slack;
            }
        }
        f
    };

    let mut best = f64::INFINITY;
    for combo in combinations(n + d, d) {
        let mut a = Vec::with_capacity(d);
        let mut b = Vec::with_capacity(d);
        for &h in &combo {
            if h < d {
                // y_h = 0
                let mut row = vec![0.0; d];
                row[h] = 1.0;
                a.push(row);
                b.push(0.0);
            } else {
                let i = h - d;
                a.push(w_col(i));
                b.push(values[i]);
            }
        }
        let Some(y) = solve_linear_system(a, b) else {
            continue;
        };
        if y.iter().any(|&v| v < -1e-9 || !v.is_finite()) {
            continue;
        }
        let y: Vec<f64> = y.into_iter().map(|v| v.max(0.0)).collect();
        let f = objective(&y);
        if f < best {
            best = f;
        }
    }
    best
}

/// Exact optimal vertex of the max-form knapsack LP by direct enumeration:
/// at a vertex at most d variables are fractional (with as many binding
/// constraints) and the rest sit at 0 or 1. Practical for small n only.
/// Returns `(x, max-form value)`. `weights` is d×n row-major.
pub fn knapsack_best_vertex(values: &[f64], weights: &[f64], caps: &[f64]) -> (Vec<f64>, f64) {
    let n = values.len();
    let d = caps.len();
    assert!(n <= 16, "vertex enumeration is exponential in n");
    let w = |j: usize, i: usize| weights[j * n + i];

    let feasible = |x: &[f64]| -> bool {
        (0..d).all(|j| (0..n).map(|i| w(j, i) * x[i]).sum::<f64>() <= caps[j] + 1e-9)
    };
    let value = |x: &[f64]| -> f64 { x.iter().zip(values).map(|(xi, v)| xi * v).sum() };

    let mut best_x = vec![0.0; n];
    let mut best_v = f64::NEG_INFINITY;
    let mut consider = |x: Vec<f64>| {
        if feasible(&x) {
            let v = value(&x);
            if v > best_v + 1e-12 {
                best_v = v;
                best_x = x;
            }
        }
    };

    for frac_count in 0..=d.min(n) {
        for frac_set in combinations(n, frac_count) {
            let fixed: Vec<usize> = (0..n).filter(|i| !frac_set.contains(i)).collect();
            for binding in combinations(d, frac_count) {
                for mask in 0u32..(1 << fixed.len()) {
                    let mut x = vec![0.0; n];
                    for (bit, &i) in fixed.iter().enumerate() {
                        x[i] = if mask >> bit & 1 == 1 { 1.0 } else { 0.0 };
                    }
                    if frac_count == 0 {
                        consider(x);
                        continue;
                    }
                    let a: Vec<Vec<f64>> = binding
                        .iter()
                        .map(|&j| frac_set.iter().map(|&i| w(j, i)).collect())
                        .collect();
                    let b: Vec<f64> = binding
                        .iter()
                        .map(|&j| caps[j] - fixed.iter().map(|&i| w(j, i) * x[i]).sum::<f64>())
                        .collect();
                    let Some(xf) = solve_linear_system(a, b) else {
                        continue;
                    };
                    if xf.iter().any(|&v| !(-1e-9..=1.0 + 1e-9).contains(&v)) {
                        continue;
                    }
                    for (&i, &v) in frac_set.iter().zip(&xf) {
                        x[i] = v.clamp(0.0, 1.0);
                    }
                    consider(x);
                }
            }
        }
    }
    (best_x, best_v)
}

/// A knapsack LP instance together with its raw data (what the oracles
/// consume).
pub struct KnapsackInstance {
    pub problem: LpProblem,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub caps: Vec<f64>,
}

/// Seeded knapsack instance: weights uniform over {3..8}, a binding
/// capacity, and positive values.
pub fn knapsack_instance(n: usize, d: usize, seed: u64) -> KnapsackInstance {
    let weights = seeded_knapsack_weights(n, d, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_cafe);
    // Roughly a third of the average total weight, so constraints bind.
    let capacity = (n as f64) * 5.5 / 3.0 * rng.random_range(0.8..1.2);
    let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let problem = gen_knapsack(n, d, capacity, &weights, &values).unwrap();
    KnapsackInstance {
        problem,
        values,
        weights,
        caps: vec![capacity; d],
    }
}

/// Seeded grid instance with uniform random vertex costs in (0.1, 1).
pub fn grid_instance(k: usize, seed: u64) -> (LpProblem, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6e1d);
    let costs: Vec<f64> = (0..k * k).map(|_| rng.random_range(0.1..1.0)).collect();
    (gen_grid_shortest_path(k, &costs).unwrap(), costs)
}

/// Standard-normal sample via Box-Muller (deterministic given the rng).
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    assert!(!v.is_empty());
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}
