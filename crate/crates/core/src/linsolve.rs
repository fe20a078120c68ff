//! Sparse symmetric positive definite systems and their Cholesky factors.
//!
//! Factorization uses a fill-reducing minimum-degree ordering and runs
//! sequentially, so the same matrix always yields bitwise identical factors
//! and solutions. A factor is immutable and can be shared across threads.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt::factor::{LltError, LltRegularization};
use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, LltRef, SymbolicCholesky};
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::{Conj, MatMut, Par, Side};

use crate::error::{Error, Result};

/// Square matrix in compressed sparse column form. Rows inside each column
/// are sorted and duplicates are summed.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds an `n x n` matrix from `(row, col, value)` entries.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= n || c >= n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: r.max(c) + 1,
                });
            }
            sorted.push((c, r, v));
        }
        sorted.sort_by_key(|e| (e.0, e.1));

        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (c, r, v) in sorted {
            if last == Some((c, r)) {
                *values.last_mut().expect("entry exists") += v;
                continue;
            }
            col_ptr[c + 1] += 1;
            row_idx.push(r);
            values.push(v);
            last = Some((c, r));
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        Ok(Self {
            n,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self {
            n: d.len(),
            col_ptr: (0..=d.len()).collect(),
            row_idx: (0..d.len()).collect(),
            values: d.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entry `(r, c)`, zero when not stored.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let rows = &self.row_idx[self.col_ptr[c]..self.col_ptr[c + 1]];
        match rows.binary_search(&r) {
            Ok(p) => self.values[self.col_ptr[c] + p],
            Err(_) => 0.0,
        }
    }

    /// Stored entries as `(row, col, value)`, column by column.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |c| {
            (self.col_ptr[c]..self.col_ptr[c + 1]).map(move |p| (self.row_idx[p], c, self.values[p]))
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.n];
        for (r, c, v) in self.entries() {
            y[r] += v * x[c];
        }
        Ok(y)
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        let mut rows = vec![0.0f64; self.n];
        for (r, _, v) in self.entries() {
            rows[r] += v.abs();
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// First row without a nonzero entry.
    pub fn first_zero_row(&self) -> Option<usize> {
        let mut seen = vec![false; self.n];
        for (r, _, v) in self.entries() {
            if v != 0.0 {
                seen[r] = true;
            }
        }
        seen.iter().position(|s| !s)
    }

    /// Exact symmetry check; reports the first offending entry.
    pub fn check_symmetric(&self) -> Result<()> {
        for (r, c, v) in self.entries() {
            if r != c && self.get(c, r) != v {
                return Err(Error::NotSymmetricMatrix { row: r, col: c });
            }
        }
        Ok(())
    }

    fn to_faer(&self) -> SparseColMat<usize, f64> {
        let symbolic = SymbolicSparseColMat::new_checked(
            self.n,
            self.n,
            self.col_ptr.clone(),
            None,
            self.row_idx.clone(),
        );
        SparseColMat::new(symbolic, self.values.clone())
    }
}

/// Cholesky factor `P A P^T = L L^T`, reusable for any number of right-hand
/// sides.
#[derive(Debug)]
pub struct Factorization {
    n: usize,
    symbolic: SymbolicCholesky<usize>,
    l_values: Vec<f64>,
}

/// Factorizes a symmetric positive definite matrix.
///
/// Rejects empty rows (naming the row), asymmetric input, and matrices that
/// are not numerically positive definite (naming the original row of the
/// failing pivot).
pub fn factorize(a: &SparseMatrix) -> Result<Factorization> {
    if let Some(row) = a.first_zero_row() {
        return Err(Error::Singular(format!("row {row} has no nonzero entry")));
    }
    a.check_symmetric()?;

    let par = Par::Seq;
    let mat = a.to_faer();
    let symbolic = factorize_symbolic_cholesky(
        mat.symbolic(),
        Side::Lower,
        Default::default(),
        Default::default(),
    )
    .map_err(|e| Error::Backend(format!("{e:?}")))?;

    let mut l_values = vec![0.0; symbolic.len_val()];
    let mut mem = MemBuffer::new(symbolic.factorize_numeric_llt_scratch::<f64>(par, Default::default()));
    let outcome = symbolic.factorize_numeric_llt(
        &mut l_values,
        mat.as_ref(),
        Side::Lower,
        LltRegularization::default(),
        par,
        MemStack::new(&mut mem),
        Default::default(),
    );
    match outcome {
        Ok(_) => {}
        Err(LltError::NonPositivePivot { index }) => {
            // the backend reports pivots 1-based, in permuted order
            let k = index.saturating_sub(1).min(a.dim().saturating_sub(1));
            let row = symbolic.perm().map(|p| p.arrays().0[k]).unwrap_or(k);
            return Err(Error::Singular(format!("non-positive pivot at row {row}")));
        }
    }
    Ok(Factorization {
        n: a.dim(),
        symbolic,
        l_values,
    })
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        if self.n == 0 {
            return Ok(());
        }
        let par = Par::Seq;
        let mut mem = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(1, par));
        let llt = LltRef::<'_, usize, f64>::new(&self.symbolic, &self.l_values);
        let n = self.n;
        llt.solve_in_place_with_conj(
            Conj::No,
            MatMut::from_column_major_slice_mut(x, n, 1),
            par,
            MemStack::new(&mut mem),
        );
        Ok(())
    }
}

/// One-shot `A x = b`.
pub fn solve(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    factorize(a)?.solve(b)
}
