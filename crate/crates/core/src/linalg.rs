//! Dense and sparse matrix kernels.
//!
//! The whole solver is matrix-free: every iteration touches the constraint
//! matrix only through `matvec` and `matvec_transpose`, so these two kernels
//! are the computational bottleneck. Both storage formats use plain
//! sequential loops with a fixed accumulation order, which makes results
//! bit-reproducible within a build.
//!
//! Sparse matrices are CSR only. The transpose product is a column scatter
//! over the CSR rows instead of a materialized CSC copy, so one copy of the
//! matrix serves both products.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result, Violation};
use crate::scalar::{norm2, norm2_sq, Real};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T = f64> {
    nrows: usize,
    ncols: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    /// Builds from a row-major buffer of length `nrows * ncols`.
    pub fn from_row_major(nrows: usize, ncols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(Error::DimensionMismatch {
                context: "dense matrix buffer",
                expected: nrows * ncols,
                actual: data.len(),
            });
        }
        Ok(Self { nrows, ncols, data })
    }

    /// Builds from a list of equally long rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for row in rows {
            if row.len() != ncols {
                return Err(Error::DimensionMismatch {
                    context: "dense matrix row",
                    expected: ncols,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { nrows, ncols, data })
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> T {
        self.data[i * self.ncols + j]
    }

    fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }
}

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within each row and explicit zeros are pruned at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T = f64> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Builds from (row, col, value) triplets. Duplicate positions are
    /// summed, then exact zeros are dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, T)],
    ) -> Result<Self> {
        for &(i, j, _) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::DimensionMismatch {
                    context: "triplet index",
                    expected: nrows.max(ncols),
                    actual: i.max(j),
                });
            }
        }
        let mut sorted: Vec<(usize, usize, T)> = triplets.to_vec();
        sorted.sort_by_key(|&(i, j, _)| (i, j));

        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut k = 0;
        while k < sorted.len() {
            let (i, j, mut v) = sorted[k];
            k += 1;
            while k < sorted.len() && sorted[k].0 == i && sorted[k].1 == j {
                v += sorted[k].2;
                k += 1;
            }
            if v != T::zero() {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Checks the CSR structural invariants.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.row_ptr.len() != self.nrows + 1 {
            return Err("row pointer length".into());
        }
        if self.row_ptr[0] != 0 || *self.row_ptr.last().unwrap() != self.values.len() {
            return Err("row pointer endpoints".into());
        }
        if self.col_idx.len() != self.values.len() {
            return Err("column index length".into());
        }
        for i in 0..self.nrows {
            if self.row_ptr[i] > self.row_ptr[i + 1] {
                return Err(format!("decreasing row pointer at row {i}"));
            }
            let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
            for w in cols.windows(2) {
                if w[0] >= w[1] {
                    return Err(format!("unsorted or duplicate column in row {i}"));
                }
            }
            if let Some(&last) = cols.last() {
                if last >= self.ncols {
                    return Err(format!("column index out of range in row {i}"));
                }
            }
        }
        if self.values.iter().any(|&v| v == T::zero()) {
            return Err("explicit zero stored".into());
        }
        Ok(())
    }

    fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }
}

/// Constraint matrix in either dense or CSR storage.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintMatrix<T = f64> {
    Dense(DenseMatrix<T>),
    Sparse(CsrMatrix<T>),
}

/// Which storage layout a matrix (or problem) uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Storage {
    Dense,
    SparseCsr,
}

impl<T: Real> ConstraintMatrix<T> {
    pub fn dense_from_rows(rows: &[Vec<T>]) -> Result<Self> {
        Ok(Self::Dense(DenseMatrix::from_rows(rows)?))
    }

    pub fn sparse_from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, T)],
    ) -> Result<Self> {
        Ok(Self::Sparse(CsrMatrix::from_triplets(
            nrows, ncols, triplets,
        )?))
    }

    /// Empty matrix (no rows) in the given storage, useful for problems
    /// without one of the constraint classes.
    pub fn empty(storage: Storage, ncols: usize) -> Self {
        match storage {
            Storage::Dense => Self::Dense(DenseMatrix {
                nrows: 0,
                ncols,
                data: Vec::new(),
            }),
            Storage::SparseCsr => Self::Sparse(CsrMatrix {
                nrows: 0,
                ncols,
                row_ptr: vec![0],
                col_idx: Vec::new(),
                values: Vec::new(),
            }),
        }
    }

    pub fn nrows(&self) -> usize {
        match self {
            Self::Dense(m) => m.nrows,
            Self::Sparse(m) => m.nrows,
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Self::Dense(m) => m.ncols,
            Self::Sparse(m) => m.ncols,
        }
    }

    pub fn storage(&self) -> Storage {
        match self {
            Self::Dense(_) => Storage::Dense,
            Self::Sparse(_) => Storage::SparseCsr,
        }
    }

    /// Number of stored entries (all entries for dense storage).
    pub fn nnz(&self) -> usize {
        match self {
            Self::Dense(m) => m.data.len(),
            Self::Sparse(m) => m.values.len(),
        }
    }

    /// True when every entry is exactly zero.
    pub fn is_zero(&self) -> bool {
        match self {
            Self::Dense(m) => m.data.iter().all(|&v| v == T::zero()),
            Self::Sparse(m) => m.values.is_empty(),
        }
    }

    /// Structural validity check; dense matrices are always valid.
    pub fn check_structure(&self, field: &'static str) -> Option<Violation> {
        match self {
            Self::Dense(_) => None,
            Self::Sparse(m) => m
                .validate()
                .err()
                .map(|detail| Violation::MalformedSparse { field, detail }),
        }
    }

    /// Visits every stored entry as `(row, col, value)` in row-major order.
    pub fn for_each_entry(&self, mut f: impl FnMut(usize, usize, T)) {
        match self {
            Self::Dense(m) => {
                for i in 0..m.nrows {
                    for j in 0..m.ncols {
                        f(i, j, m.entry(i, j));
                    }
                }
            }
            Self::Sparse(m) => {
                for i in 0..m.nrows {
                    for (j, v) in m.row_entries(i) {
                        f(i, j, v);
                    }
                }
            }
        }
    }

    /// `out = M v`; panics on length mismatch (use [`Self::matvec`] for the
    /// checked variant).
    pub fn matvec_into(&self, v: &[T], out: &mut [T]) {
        assert_eq!(v.len(), self.ncols(), "matvec input length");
        assert_eq!(out.len(), self.nrows(), "matvec output length");
        match self {
            Self::Dense(m) => {
                for i in 0..m.nrows {
                    let row = m.row(i);
                    let mut acc = T::zero();
                    for j in 0..m.ncols {
                        acc += row[j] * v[j];
                    }
                    out[i] = acc;
                }
            }
            Self::Sparse(m) => {
                for i in 0..m.nrows {
                    let mut acc = T::zero();
                    for (j, a) in m.row_entries(i) {
                        acc += a * v[j];
                    }
                    out[i] = acc;
                }
            }
        }
    }

    /// `out = Mᵀ v`; the sparse path scatters each CSR row into the output.
    pub fn matvec_transpose_into(&self, v: &[T], out: &mut [T]) {
        assert_eq!(v.len(), self.nrows(), "transpose matvec input length");
        assert_eq!(out.len(), self.ncols(), "transpose matvec output length");
        for o in out.iter_mut() {
            *o = T::zero();
        }
        match self {
            Self::Dense(m) => {
                for i in 0..m.nrows {
                    let vi = v[i];
                    let row = m.row(i);
                    for j in 0..m.ncols {
                        out[j] += row[j] * vi;
                    }
                }
            }
            Self::Sparse(m) => {
                for i in 0..m.nrows {
                    let vi = v[i];
                    for (j, a) in m.row_entries(i) {
                        out[j] += a * vi;
                    }
                }
            }
        }
    }

    /// Checked `M v`.
    pub fn matvec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.ncols() {
            return Err(Error::DimensionMismatch {
                context: "matvec",
                expected: self.ncols(),
                actual: v.len(),
            });
        }
        let mut out = vec![T::zero(); self.nrows()];
        self.matvec_into(v, &mut out);
        Ok(out)
    }

    /// Checked `Mᵀ v`.
    pub fn matvec_transpose(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.nrows() {
            return Err(Error::DimensionMismatch {
                context: "transpose matvec",
                expected: self.nrows(),
                actual: v.len(),
            });
        }
        let mut out = vec![T::zero(); self.ncols()];
        self.matvec_transpose_into(v, &mut out);
        Ok(out)
    }

    /// Entrywise absolute row and column ∞-norms. Zero rows/columns give 0.
    pub fn row_col_inf_norms(&self) -> (Vec<T>, Vec<T>) {
        let mut rows = vec![T::zero(); self.nrows()];
        let mut cols = vec![T::zero(); self.ncols()];
        self.for_each_entry(|i, j, v| {
            let a = v.abs();
            if a > rows[i] {
                rows[i] = a;
            }
            if a > cols[j] {
                cols[j] = a;
            }
        });
        (rows, cols)
    }

    /// Entrywise absolute row and column p-norms for finite `p > 0`.
    pub fn row_col_p_norms(&self, p: T) -> Result<(Vec<T>, Vec<T>)> {
        if !(p.is_finite() && p > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "p-norm exponent must be finite and positive, got {p}"
            )));
        }
        let (mut rows, mut cols) = self.abs_power_sums(p);
        let inv = T::one() / p;
        for r in rows.iter_mut() {
            *r = r.powf(inv);
        }
        for c in cols.iter_mut() {
            *c = c.powf(inv);
        }
        Ok((rows, cols))
    }

    /// Row and column sums of `|a|^p` (the building block behind the
    /// Pock-Chambolle preconditioner).
    pub fn abs_power_sums(&self, p: T) -> (Vec<T>, Vec<T>) {
        let one = T::one();
        let two = T::of(2.0);
        let mut rows = vec![T::zero(); self.nrows()];
        let mut cols = vec![T::zero(); self.ncols()];
        self.for_each_entry(|i, j, v| {
            let a = v.abs();
            let powed = if p == one {
                a
            } else if p == two {
                a * a
            } else {
                a.powf(p)
            };
            rows[i] += powed;
            cols[j] += powed;
        });
        (rows, cols)
    }

    /// Returns `diag(row_scale) · M · diag(col_scale)` in the same storage;
    /// the sparsity and sign pattern are preserved because scales are
    /// positive.
    pub fn scaled(&self, row_scale: &[T], col_scale: &[T]) -> Self {
        assert_eq!(row_scale.len(), self.nrows());
        assert_eq!(col_scale.len(), self.ncols());
        match self {
            Self::Dense(m) => {
                let mut data = m.data.clone();
                for i in 0..m.nrows {
                    for j in 0..m.ncols {
                        data[i * m.ncols + j] = data[i * m.ncols + j] * row_scale[i] * col_scale[j];
                    }
                }
                Self::Dense(DenseMatrix {
                    nrows: m.nrows,
                    ncols: m.ncols,
                    data,
                })
            }
            Self::Sparse(m) => {
                let mut values = m.values.clone();
                for i in 0..m.nrows {
                    for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                        values[k] = values[k] * row_scale[i] * col_scale[m.col_idx[k]];
                    }
                }
                Self::Sparse(CsrMatrix {
                    nrows: m.nrows,
                    ncols: m.ncols,
                    row_ptr: m.row_ptr.clone(),
                    col_idx: m.col_idx.clone(),
                    values,
                })
            }
        }
    }

    /// Transposed copy in the same storage format.
    pub fn transposed(&self) -> Self {
        match self {
            Self::Dense(m) => {
                let mut data = vec![T::zero(); m.data.len()];
                for i in 0..m.nrows {
                    for j in 0..m.ncols {
                        data[j * m.nrows + i] = m.entry(i, j);
                    }
                }
                Self::Dense(DenseMatrix {
                    nrows: m.ncols,
                    ncols: m.nrows,
                    data,
                })
            }
            Self::Sparse(m) => {
                let mut triplets = Vec::with_capacity(m.values.len());
                for i in 0..m.nrows {
                    for (j, v) in m.row_entries(i) {
                        triplets.push((j, i, v));
                    }
                }
                Self::Sparse(
                    CsrMatrix::from_triplets(m.ncols, m.nrows, &triplets)
                        .expect("transpose of a valid matrix"),
                )
            }
        }
    }

    /// Stacks `self` on top of `other` (row concatenation); both operands
    /// must share storage format and column count.
    pub fn stack_rows(&self, other: &Self) -> Result<Self> {
        if self.ncols() != other.ncols() {
            return Err(Error::DimensionMismatch {
                context: "row stack",
                expected: self.ncols(),
                actual: other.ncols(),
            });
        }
        match (self, other) {
            (Self::Dense(a), Self::Dense(b)) => {
                let mut data = a.data.clone();
                data.extend_from_slice(&b.data);
                Ok(Self::Dense(DenseMatrix {
                    nrows: a.nrows + b.nrows,
                    ncols: a.ncols,
                    data,
                }))
            }
            (Self::Sparse(a), Self::Sparse(b)) => {
                let offset = *a.row_ptr.last().unwrap();
                let mut row_ptr = a.row_ptr.clone();
                row_ptr.extend(b.row_ptr[1..].iter().map(|&p| p + offset));
                let mut col_idx = a.col_idx.clone();
                col_idx.extend_from_slice(&b.col_idx);
                let mut values = a.values.clone();
                values.extend_from_slice(&b.values);
                Ok(Self::Sparse(CsrMatrix {
                    nrows: a.nrows + b.nrows,
                    ncols: a.ncols,
                    row_ptr,
                    col_idx,
                    values,
                }))
            }
            _ => Err(Error::InvalidParameter(
                "cannot stack matrices with mixed storage formats".into(),
            )),
        }
    }

    /// Splits the matrix back at `row`, returning the top and bottom blocks.
    pub fn split_rows(&self, row: usize) -> (Self, Self) {
        assert!(row <= self.nrows());
        match self {
            Self::Dense(m) => {
                let cut = row * m.ncols;
                (
                    Self::Dense(DenseMatrix {
                        nrows: row,
                        ncols: m.ncols,
                        data: m.data[..cut].to_vec(),
                    }),
                    Self::Dense(DenseMatrix {
                        nrows: m.nrows - row,
                        ncols: m.ncols,
                        data: m.data[cut..].to_vec(),
                    }),
                )
            }
            Self::Sparse(m) => {
                let cut = m.row_ptr[row];
                let top = CsrMatrix {
                    nrows: row,
                    ncols: m.ncols,
                    row_ptr: m.row_ptr[..=row].to_vec(),
                    col_idx: m.col_idx[..cut].to_vec(),
                    values: m.values[..cut].to_vec(),
                };
                let bottom = CsrMatrix {
                    nrows: m.nrows - row,
                    ncols: m.ncols,
                    row_ptr: m.row_ptr[row..].iter().map(|&p| p - cut).collect(),
                    col_idx: m.col_idx[cut..].to_vec(),
                    values: m.values[cut..].to_vec(),
                };
                (Self::Sparse(top), Self::Sparse(bottom))
            }
        }
    }

    /// Casts entries to another scalar type.
    pub fn cast<S: Real>(&self) -> ConstraintMatrix<S> {
        match self {
            Self::Dense(m) => ConstraintMatrix::Dense(DenseMatrix {
                nrows: m.nrows,
                ncols: m.ncols,
                data: m.data.iter().map(|&v| S::of(v.to_f64())).collect(),
            }),
            Self::Sparse(m) => ConstraintMatrix::Sparse(CsrMatrix {
                nrows: m.nrows,
                ncols: m.ncols,
                row_ptr: m.row_ptr.clone(),
                col_idx: m.col_idx.clone(),
                values: m.values.iter().map(|&v| S::of(v.to_f64())).collect(),
            }),
        }
    }

    /// Dense copy of the entries, mostly for tests and oracles.
    pub fn to_dense_rows(&self) -> Vec<Vec<T>> {
        let mut rows = vec![vec![T::zero(); self.ncols()]; self.nrows()];
        self.for_each_entry(|i, j, v| rows[i][j] = v);
        rows
    }
}

/// Outcome of [`estimate_spectral_norm`].
#[derive(Debug, Clone, Copy)]
pub struct SpectralEstimate<T> {
    /// Estimated largest singular value; a lower bound on ‖M‖₂.
    pub value: T,
    /// Power iterations performed.
    pub iterations: usize,
    /// Whether the eigenvector residual reached the tolerance.
    pub converged: bool,
    /// Set when the matrix has no nonzero entries (value is then 0).
    pub is_zero: bool,
}

/// Estimates ‖M‖₂ by power iteration on MᵀM.
///
/// The returned value is the Rayleigh estimate ‖Mv‖ at the final unit
/// vector, so it never exceeds the true spectral norm. Convergence is
/// declared when the relative eigenvector residual ‖MᵀMv − λv‖/λ drops
/// below `tol`.
pub fn estimate_spectral_norm<T: Real>(
    m: &ConstraintMatrix<T>,
    tol: T,
    max_iter: usize,
    seed: u64,
) -> SpectralEstimate<T> {
    if m.is_zero() {
        return SpectralEstimate {
            value: T::zero(),
            iterations: 0,
            converged: true,
            is_zero: true,
        };
    }
    let n = m.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<T> = (0..n).map(|_| T::of(rng.random_range(-1.0..1.0))).collect();
    let mut mv = vec![T::zero(); m.nrows()];
    let mut mtmv = vec![T::zero(); n];

    let mut sigma = T::zero();
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        let vnorm = norm2(&v);
        if vnorm == T::zero() {
            // Landed in the null space; redraw and continue.
            for e in v.iter_mut() {
                *e = T::of(rng.random_range(-1.0..1.0));
            }
            continue;
        }
        for e in v.iter_mut() {
            *e /= vnorm;
        }
        m.matvec_into(&v, &mut mv);
        let lambda = norm2_sq(&mv);
        sigma = lambda.sqrt();
        m.matvec_transpose_into(&mv, &mut mtmv);
        let mut residual_sq = T::zero();
        for j in 0..n {
            let r = mtmv[j] - lambda * v[j];
            residual_sq += r * r;
        }
        if lambda > T::zero() && residual_sq.sqrt() <= tol * lambda {
            converged = true;
            break;
        }
        v.copy_from_slice(&mtmv);
    }
    SpectralEstimate {
        value: sigma,
        iterations,
        converged,
        is_zero: false,
    }
}
