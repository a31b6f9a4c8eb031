//! Benchmark instance generators: 2D grid shortest path flows and the LP
//! relaxation of the multi-dimensional knapsack.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{ConstraintMatrix, Storage};
use crate::problem::LpProblem;

/// The eight grid moves, row-major order. Kept fixed so edge numbering is
/// deterministic.
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

/// Directed edges of the 8-connected k×k grid in generation order.
///
/// Nodes are numbered row-major (`r*k + c`); for each node its outgoing
/// edges appear in the fixed move order above. The returned pairs are
/// `(source node, destination node)` and double as the column order of
/// [`gen_grid_shortest_path`].
pub fn grid_edges(k: usize) -> Vec<(usize, usize)> {
    let k = k as isize;
    let mut edges = Vec::new();
    for r in 0..k {
        for c in 0..k {
            for (dr, dc) in MOVES {
                let (nr, nc) = (r + dr, c + dc);
                if nr >= 0 && nr < k && nc >= 0 && nc < k {
                    edges.push(((r * k + c) as usize, (nr * k + nc) as usize));
                }
            }
        }
    }
    edges
}

/// Builds the flow-conservation LP for a shortest path across an
/// 8-connected k×k grid, from the top-left to the bottom-right vertex.
///
/// One variable per directed edge with bounds [0, 1]; one equality row per
/// node with net outflow +1 at the source, −1 at the sink and 0 elsewhere.
/// Each edge is charged the vertex cost of its destination, so a path's
/// cost is the sum of visited vertex costs excluding the source. Emitted in
/// sparse storage; `vertex_costs` is row-major of length k².
pub fn gen_grid_shortest_path(k: usize, vertex_costs: &[f64]) -> Result<LpProblem> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid side must be at least 2, got {k}"
        )));
    }
    if vertex_costs.len() != k * k {
        return Err(Error::InvalidParameter(format!(
            "expected {} vertex costs, got {}",
            k * k,
            vertex_costs.len()
        )));
    }
    if let Some(&bad) = vertex_costs.iter().find(|c| !c.is_finite() || **c < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "vertex costs must be finite and nonnegative, got {bad}"
        )));
    }

    let edges = grid_edges(k);
    let num_nodes = k * k;
    let num_edges = edges.len();

    let mut objective = Vec::with_capacity(num_edges);
    let mut triplets = Vec::with_capacity(2 * num_edges);
    for (col, &(src, dst)) in edges.iter().enumerate() {
        objective.push(vertex_costs[dst]);
        triplets.push((src, col, 1.0)); // outgoing
        triplets.push((dst, col, -1.0)); // incoming
    }
    let eq_matrix = ConstraintMatrix::sparse_from_triplets(num_nodes, num_edges, &triplets)?;

    let mut eq_rhs = vec![0.0; num_nodes];
    eq_rhs[0] = 1.0; // source: top-left
    eq_rhs[num_nodes - 1] = -1.0; // sink: bottom-right

    Ok(LpProblem::new(
        objective,
        eq_matrix,
        eq_rhs,
        ConstraintMatrix::empty(Storage::SparseCsr, num_edges),
        vec![],
        vec![0.0; num_edges],
        vec![1.0; num_edges],
    ))
}

/// Integer item weights drawn uniformly from {3, …, 8}, in d×n row-major
/// order (one row per knapsack dimension).
pub fn seeded_knapsack_weights(n_items: usize, d: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..d * n_items)
        .map(|_| rng.random_range(3..=8) as f64)
        .collect()
}

/// LP relaxation of the multi-dimensional knapsack, converted to the
/// standard min form.
///
/// The max-form problem `max vᵀx s.t. Wx ≤ h·1, 0 ≤ x ≤ 1` becomes
/// `min (−v)ᵀx s.t. (−W)x ≥ −h·1`, so the generated inequality rows are
/// all-nonpositive. Knapsack constraint matrices are fully dense, so the
/// problem is emitted in dense storage. `weights` is d×n row-major.
pub fn gen_knapsack(
    n_items: usize,
    d: usize,
    capacity: f64,
    weights: &[f64],
    values: &[f64],
) -> Result<LpProblem> {
    if n_items < 1 || d < 1 {
        return Err(Error::InvalidParameter(format!(
            "knapsack needs at least one item and one dimension, got n={n_items}, d={d}"
        )));
    }
    if !(capacity.is_finite() && capacity > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "capacity must be positive and finite, got {capacity}"
        )));
    }
    if weights.len() != d * n_items {
        return Err(Error::InvalidParameter(format!(
            "expected {} weights, got {}",
            d * n_items,
            weights.len()
        )));
    }
    if values.len() != n_items {
        return Err(Error::InvalidParameter(format!(
            "expected {} values, got {}",
            n_items,
            values.len()
        )));
    }
    if values.iter().chain(weights.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "knapsack weights and values must be finite".into(),
        ));
    }

    let rows: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            weights[j * n_items..(j + 1) * n_items]
                .iter()
                .map(|w| -w)
                .collect()
        })
        .collect();
    let ineq_matrix = ConstraintMatrix::dense_from_rows(&rows)?;

    Ok(LpProblem::new(
        values.iter().map(|v| -v).collect(),
        ConstraintMatrix::empty(Storage::Dense, n_items),
        vec![],
        ineq_matrix,
        vec![-capacity; d],
        vec![0.0; n_items],
        vec![1.0; n_items],
    ))
}

/// Seeded knapsack instance with an explicit capacity: weights uniform
/// over {3, …, 8}, item values uniform over (0, 1).
pub fn gen_knapsack_seeded_with_capacity(
    n_items: usize,
    d: usize,
    capacity: f64,
    seed: u64,
) -> Result<LpProblem> {
    let weights = seeded_knapsack_weights(n_items, d, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let values: Vec<f64> = (0..n_items).map(|_| rng.random::<f64>()).collect();
    gen_knapsack(n_items, d, capacity, &weights, &values)
}

/// Fully seeded knapsack instance with the default capacity of 500.
pub fn gen_knapsack_seeded(n_items: usize, d: usize, seed: u64) -> Result<LpProblem> {
    gen_knapsack_seeded_with_capacity(n_items, d, 500.0, seed)
}
