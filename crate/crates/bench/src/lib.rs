//! Fixture builders shared by the benchmark targets.

use folp_core::problem::generators::{
    gen_grid_shortest_path, gen_knapsack, seeded_knapsack_weights,
};
use folp_core::{ConstraintMatrix, LpProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random CSR matrix with the given density, entries uniform in (−1, 1).
pub fn random_sparse(nrows: usize, ncols: usize, density: f64, seed: u64) -> ConstraintMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triplets = Vec::new();
    for i in 0..nrows {
        for j in 0..ncols {
            if rng.random::<f64>() < density {
                triplets.push((i, j, rng.random_range(-1.0..1.0)));
            }
        }
    }
    ConstraintMatrix::sparse_from_triplets(nrows, ncols, &triplets).unwrap()
}

/// Random dense matrix, entries uniform in (−1, 1).
pub fn random_dense(nrows: usize, ncols: usize, seed: u64) -> ConstraintMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..nrows)
        .map(|_| (0..ncols).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    ConstraintMatrix::dense_from_rows(&rows).unwrap()
}

/// Random vector, entries uniform in (−1, 1).
pub fn random_vector(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Mid-size knapsack LP with a binding capacity.
pub fn knapsack_problem(n_items: usize, d: usize, seed: u64) -> LpProblem {
    let weights = seeded_knapsack_weights(n_items, d, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xbe9c);
    let values: Vec<f64> = (0..n_items).map(|_| rng.random_range(0.1..1.0)).collect();
    let capacity = n_items as f64 * 5.5 / 3.0;
    gen_knapsack(n_items, d, capacity, &weights, &values).unwrap()
}

/// Grid shortest-path LP with random vertex costs.
pub fn grid_problem(k: usize, seed: u64) -> LpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let costs: Vec<f64> = (0..k * k).map(|_| rng.random_range(0.1..1.0)).collect();
    gen_grid_shortest_path(k, &costs).unwrap()
}
