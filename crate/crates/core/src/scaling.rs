//! Diagonal preconditioning: Ruiz equilibration followed by Pock-Chambolle
//! scaling.
//!
//! A [`ScalingInfo`] holds positive diagonals `D_r`, `D_c` so the scaled
//! matrix is `K̃ = D_r K D_c`, with the rest of the data transformed as
//! `c̃ = D_c c`, `q̃ = D_r q`, `l̃ = D_c⁻¹ l`, `ũ = D_c⁻¹ u`. A solution of
//! the scaled problem maps back through `x = D_c x̃`, `y = D_r ỹ`.
//!
//! Zero rows and columns keep unit scale so the transform stays invertible;
//! dropping them is presolve territory, which this solver does not do.

use crate::error::{Error, Result};
use crate::linalg::ConstraintMatrix;
use crate::problem::SaddleForm;
use crate::scalar::Real;

/// Positive row/column diagonals accumulated by the preconditioners.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingInfo<T = f64> {
    /// Row multipliers, length m₁+m₂ (diagonal of `D_r`).
    pub row_scale: Vec<T>,
    /// Column multipliers, length n (diagonal of `D_c`).
    pub col_scale: Vec<T>,
}

impl<T: Real> ScalingInfo<T> {
    /// Identity scaling.
    pub fn identity(nrows: usize, ncols: usize) -> Self {
        Self {
            row_scale: vec![T::one(); nrows],
            col_scale: vec![T::one(); ncols],
        }
    }

    /// Entrywise product of two scalings: applying `self` then `other` to a
    /// matrix equals applying the composition once.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.row_scale.len(), other.row_scale.len());
        assert_eq!(self.col_scale.len(), other.col_scale.len());
        Self {
            row_scale: self
                .row_scale
                .iter()
                .zip(&other.row_scale)
                .map(|(&a, &b)| a * b)
                .collect(),
            col_scale: self
                .col_scale
                .iter()
                .zip(&other.col_scale)
                .map(|(&a, &b)| a * b)
                .collect(),
        }
    }
}

/// Ruiz equilibration: repeatedly divides each row and column by the square
/// root of its ∞-norm (simultaneously, from the same snapshot). Zero rows
/// and columns keep scale 1. Returns the scaled matrix and the accumulated
/// diagonals.
pub fn ruiz_scale<T: Real>(
    matrix: &ConstraintMatrix<T>,
    iters: usize,
) -> (ConstraintMatrix<T>, ScalingInfo<T>) {
    let mut scaled = matrix.clone();
    let mut info = ScalingInfo::identity(matrix.nrows(), matrix.ncols());
    for _ in 0..iters {
        let (row_norms, col_norms) = scaled.row_col_inf_norms();
        let row_step: Vec<T> = row_norms
            .iter()
            .map(|&n| {
                if n > T::zero() {
                    T::one() / n.sqrt()
                } else {
                    T::one()
                }
            })
            .collect();
        let col_step: Vec<T> = col_norms
            .iter()
            .map(|&n| {
                if n > T::zero() {
                    T::one() / n.sqrt()
                } else {
                    T::one()
                }
            })
            .collect();
        scaled = scaled.scaled(&row_step, &col_step);
        for (acc, s) in info.row_scale.iter_mut().zip(&row_step) {
            *acc *= *s;
        }
        for (acc, s) in info.col_scale.iter_mut().zip(&col_step) {
            *acc *= *s;
        }
    }
    (scaled, info)
}

/// Pock-Chambolle diagonal scaling with exponent `alpha ∈ [0, 2]`:
/// row i is divided by `(Σ_j |K_ij|^{2−α})^{1/2}` and column j by
/// `(Σ_i |K_ij|^α)^{1/2}`. Zero rows/columns keep scale 1.
pub fn pock_chambolle_scale<T: Real>(
    matrix: &ConstraintMatrix<T>,
    alpha: T,
) -> Result<(ConstraintMatrix<T>, ScalingInfo<T>)> {
    if !(alpha >= T::zero() && alpha <= T::of(2.0)) {
        return Err(Error::InvalidParameter(format!(
            "Pock-Chambolle alpha must lie in [0, 2], got {alpha}"
        )));
    }
    let (row_sums, _) = matrix.abs_power_sums(T::of(2.0) - alpha);
    let (_, col_sums) = matrix.abs_power_sums(alpha);
    let to_scale = |s: &T| {
        if *s > T::zero() {
            T::one() / s.sqrt()
        } else {
            T::one()
        }
    };
    let info = ScalingInfo {
        row_scale: row_sums.iter().map(to_scale).collect(),
        col_scale: col_sums.iter().map(to_scale).collect(),
    };
    Ok((matrix.scaled(&info.row_scale, &info.col_scale), info))
}

/// Default preconditioner pipeline: 10 Ruiz iterations then one
/// Pock-Chambolle pass with α = 1, composed into a single scaling.
pub fn default_scaling<T: Real>(matrix: &ConstraintMatrix<T>) -> ScalingInfo<T> {
    let (after_ruiz, ruiz) = ruiz_scale(matrix, 10);
    let (_, pc) = pock_chambolle_scale(&after_ruiz, T::one()).expect("alpha 1 is valid");
    ruiz.compose(&pc)
}

/// Applies a scaling to a whole saddle form.
pub fn apply_scaling<T: Real>(sf: &SaddleForm<T>, s: &ScalingInfo<T>) -> Result<SaddleForm<T>> {
    if s.row_scale.len() != sf.num_constraints() || s.col_scale.len() != sf.num_vars() {
        return Err(Error::DimensionMismatch {
            context: "scaling",
            expected: sf.num_constraints(),
            actual: s.row_scale.len(),
        });
    }
    let constraint_matrix = sf.constraint_matrix.scaled(&s.row_scale, &s.col_scale);
    let rhs = sf
        .rhs
        .iter()
        .zip(&s.row_scale)
        .map(|(&q, &r)| q * r)
        .collect();
    let objective = sf
        .objective
        .iter()
        .zip(&s.col_scale)
        .map(|(&c, &d)| c * d)
        .collect();
    // Dividing keeps infinite bounds infinite (scales are positive).
    let lower = sf
        .lower
        .iter()
        .zip(&s.col_scale)
        .map(|(&l, &d)| l / d)
        .collect();
    let upper = sf
        .upper
        .iter()
        .zip(&s.col_scale)
        .map(|(&u, &d)| u / d)
        .collect();
    Ok(SaddleForm {
        constraint_matrix,
        rhs,
        num_inequalities: sf.num_inequalities,
        objective,
        lower,
        upper,
        objective_offset: sf.objective_offset,
    })
}

fn check_pair_dims<T: Real>(x: &[T], y: &[T], s: &ScalingInfo<T>) -> Result<()> {
    if x.len() != s.col_scale.len() {
        return Err(Error::DimensionMismatch {
            context: "solution scaling (primal)",
            expected: s.col_scale.len(),
            actual: x.len(),
        });
    }
    if y.len() != s.row_scale.len() {
        return Err(Error::DimensionMismatch {
            context: "solution scaling (dual)",
            expected: s.row_scale.len(),
            actual: y.len(),
        });
    }
    Ok(())
}

/// Maps a scaled primal-dual pair back to the original space:
/// `x = D_c x̃`, `y = D_r ỹ`.
pub fn unscale_solution<T: Real>(x: &[T], y: &[T], s: &ScalingInfo<T>) -> Result<(Vec<T>, Vec<T>)> {
    check_pair_dims(x, y, s)?;
    Ok((
        x.iter().zip(&s.col_scale).map(|(&v, &d)| v * d).collect(),
        y.iter().zip(&s.row_scale).map(|(&v, &r)| v * r).collect(),
    ))
}

/// Maps an original-space pair into the scaled space: `x̃ = D_c⁻¹ x`,
/// `ỹ = D_r⁻¹ y` (used for warm starts).
pub fn scale_solution<T: Real>(x: &[T], y: &[T], s: &ScalingInfo<T>) -> Result<(Vec<T>, Vec<T>)> {
    check_pair_dims(x, y, s)?;
    Ok((
        x.iter().zip(&s.col_scale).map(|(&v, &d)| v / d).collect(),
        y.iter().zip(&s.row_scale).map(|(&v, &r)| v / r).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Storage;
    use crate::problem::{build_saddle_form, LpProblem};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ruiz_one_iteration_example() {
        let k = ConstraintMatrix::dense_from_rows(&[vec![4.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let (scaled, info) = ruiz_scale(&k, 1);
        assert_eq!(scaled.to_dense_rows(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(info.row_scale, vec![0.5, 1.0]);
        assert_eq!(info.col_scale, vec![0.5, 1.0]);
    }

    #[test]
    fn ruiz_fixed_point_on_equilibrated_matrix() {
        let k = ConstraintMatrix::dense_from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let (scaled, info) = ruiz_scale(&k, 3);
        assert_eq!(scaled.to_dense_rows(), k.to_dense_rows());
        assert!(info.row_scale.iter().all(|&s| s == 1.0));
        assert!(info.col_scale.iter().all(|&s| s == 1.0));
    }

    #[test]
    fn ruiz_equilibrates_random_sparse() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        for i in 0..30 {
            for j in 0..20 {
                if rng.random::<f64>() < 0.2 {
                    triplets.push((i, j, rng.random_range(-10.0..10.0)));
                }
            }
        }
        let k = ConstraintMatrix::sparse_from_triplets(30, 20, &triplets).unwrap();
        let (scaled, _) = ruiz_scale(&k, 10);
        let (rows, cols) = scaled.row_col_inf_norms();
        for &r in rows.iter().filter(|&&r| r > 0.0) {
            assert!((r - 1.0).abs() <= 1e-2, "row norm {r}");
        }
        for &c in cols.iter().filter(|&&c| c > 0.0) {
            assert!((c - 1.0).abs() <= 1e-2, "col norm {c}");
        }
    }

    #[test]
    fn pock_chambolle_scalar_example() {
        let k = ConstraintMatrix::dense_from_rows(&[vec![2.0f64]]).unwrap();
        let (scaled, _) = pock_chambolle_scale(&k, 1.0).unwrap();
        assert!((scaled.to_dense_rows()[0][0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pock_chambolle_zero_row_keeps_unit_scale() {
        let k = ConstraintMatrix::dense_from_rows(&[vec![1.0, 2.0], vec![0.0, 0.0]]).unwrap();
        let (scaled, info) = pock_chambolle_scale(&k, 1.0).unwrap();
        assert_eq!(info.row_scale[1], 1.0);
        assert_eq!(scaled.to_dense_rows()[1], vec![0.0, 0.0]);
    }

    #[test]
    fn pock_chambolle_depends_on_magnitudes_only() {
        let k1 = ConstraintMatrix::dense_from_rows(&[vec![1.0, -2.0], vec![-3.0, 4.0]]).unwrap();
        let k2 = ConstraintMatrix::dense_from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let (_, i1) = pock_chambolle_scale(&k1, 1.0).unwrap();
        let (_, i2) = pock_chambolle_scale(&k2, 1.0).unwrap();
        assert_eq!(i1, i2);
    }

    #[test]
    fn pock_chambolle_rejects_alpha_outside_range() {
        let k = ConstraintMatrix::dense_from_rows(&[vec![1.0]]).unwrap();
        assert!(pock_chambolle_scale(&k, -0.1).is_err());
        assert!(pock_chambolle_scale(&k, 2.1).is_err());
    }

    fn tiny_saddle() -> SaddleForm {
        // min x s.t. 2x ≥ 2, x ≥ 0
        let p = LpProblem::new(
            vec![1.0],
            ConstraintMatrix::empty(Storage::Dense, 1),
            vec![],
            ConstraintMatrix::dense_from_rows(&[vec![2.0]]).unwrap(),
            vec![2.0],
            vec![0.0],
            vec![f64::INFINITY],
        );
        build_saddle_form(&p).unwrap()
    }

    #[test]
    fn identity_scaling_is_a_noop() {
        let sf = tiny_saddle();
        let id = ScalingInfo::identity(1, 1);
        let scaled = apply_scaling(&sf, &id).unwrap();
        assert_eq!(scaled, sf);
        let (x, y) = unscale_solution(&[1.0], &[0.5], &id).unwrap();
        assert_eq!((x, y), (vec![1.0], vec![0.5]));
    }

    #[test]
    fn scale_unscale_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let s = ScalingInfo {
            row_scale: (0..4).map(|_| rng.random_range(0.1..10.0)).collect(),
            col_scale: (0..6).map(|_| rng.random_range(0.1..10.0)).collect(),
        };
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y: Vec<f64> = (0..4).map(|_| rng.random_range(-5.0..5.0)).collect();
        let (xs, ys) = scale_solution(&x, &y, &s).unwrap();
        let (xr, yr) = unscale_solution(&xs, &ys, &s).unwrap();
        for (a, b) in xr.iter().zip(&x).chain(yr.iter().zip(&y)) {
            assert!((a - b).abs() <= 1e-14 * b.abs().max(1.0));
        }
    }

    #[test]
    fn solution_maps_reject_dimension_mismatch() {
        let id = ScalingInfo::identity(2, 3);
        assert!(unscale_solution(&[1.0], &[0.0, 0.0], &id).is_err());
        assert!(scale_solution(&[1.0, 2.0, 3.0], &[0.0], &id).is_err());
    }

    #[test]
    fn scaling_preserves_pattern_and_signs() {
        let k = ConstraintMatrix::<f64>::sparse_from_triplets(
            3,
            3,
            &[(0, 0, 5.0), (1, 2, -0.25), (2, 1, 1e3)],
        )
        .unwrap();
        let info = default_scaling(&k);
        let scaled = k.scaled(&info.row_scale, &info.col_scale);
        assert_eq!(scaled.nnz(), k.nnz());
        let mut signs_before = Vec::new();
        k.for_each_entry(|i, j, v| signs_before.push((i, j, v.signum())));
        let mut idx = 0;
        scaled.for_each_entry(|i, j, v| {
            assert_eq!((i, j, v.signum()), signs_before[idx]);
            idx += 1;
        });
    }

    #[test]
    fn composition_is_entrywise_product() {
        let k = ConstraintMatrix::dense_from_rows(&[vec![4.0, 0.5], vec![0.0, 8.0]]).unwrap();
        let (after_ruiz, ruiz) = ruiz_scale(&k, 10);
        let (_, pc) = pock_chambolle_scale(&after_ruiz, 1.0).unwrap();
        let composed = ruiz.compose(&pc);
        for (i, (&a, &b)) in ruiz.row_scale.iter().zip(&pc.row_scale).enumerate() {
            assert_eq!(composed.row_scale[i], a * b);
        }
        for (j, (&a, &b)) in ruiz.col_scale.iter().zip(&pc.col_scale).enumerate() {
            assert_eq!(composed.col_scale[j], a * b);
        }
    }
}
