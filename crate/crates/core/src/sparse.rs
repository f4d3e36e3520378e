//! Compressed sparse row operators and the matrix-free operator trait used by
//! the Krylov solvers.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spin::CMatrix;

/// Rows below this count are applied serially; above it rayon splits rows.
const PARALLEL_ROWS: usize = 1 << 12;

/// A linear map on `C^dim`, applied without materializing the matrix.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`. `y` is overwritten.
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);

    fn apply_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.apply(x, &mut y);
        y
    }

    /// Dense matrix built column by column from unit vectors.
    fn to_dense(&self) -> CMatrix {
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            e[j] = Complex64::new(1.0, 0.0);
            self.apply(&e, &mut col);
            for (i, v) in col.iter().enumerate() {
                out[(i, j)] = *v;
            }
            e[j] = Complex64::new(0.0, 0.0);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseOperator {
    pub fn zeros(dim: usize) -> Self {
        SparseOperator { dim, row_ptr: vec![0; dim + 1], cols: Vec::new(), vals: Vec::new() }
    }

    /// Assembles from (row, col, value) triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, Complex64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|(r, c, _)| *r >= dim || *c >= dim) {
            return Err(Error::invalid(format!("triplet ({r}, {c}) outside dimension {dim}")));
        }
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            cols.push(c);
            vals.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let op = SparseOperator { dim, row_ptr, cols, vals };
        Ok(op.pruned())
    }

    pub fn from_dense(m: &CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::invalid("matrix must be square"));
        }
        let mut t = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let v = m[(r, c)];
                if v != Complex64::new(0.0, 0.0) {
                    t.push((r, c, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), t)
    }

    fn pruned(self) -> Self {
        let mut row_ptr = vec![0usize; self.dim + 1];
        let mut cols = Vec::with_capacity(self.cols.len());
        let mut vals = Vec::with_capacity(self.vals.len());
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.vals[k] != Complex64::new(0.0, 0.0) {
                    cols.push(self.cols[k]);
                    vals.push(self.vals[k]);
                }
            }
            row_ptr[r + 1] = cols.len();
        }
        SparseOperator { dim: self.dim, row_ptr, cols, vals }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Iterates stored entries as (row, col, value).
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[range.clone()].binary_search(&c) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn adjoint(&self) -> SparseOperator {
        let t = self.entries().map(|(r, c, v)| (c, r, v.conj())).collect();
        SparseOperator::from_triplets(self.dim, t).expect("adjoint of a valid operator")
    }

    /// max |H − H†| over all entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (r, c, v) in self.entries() {
            worst = worst.max((v - self.get(c, r).conj()).norm());
        }
        worst
    }

    pub fn scaled(&self, a: f64) -> SparseOperator {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= a);
        out.pruned()
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &SparseOperator, b: f64) -> Result<SparseOperator> {
        if self.dim != other.dim {
            return Err(Error::invalid(format!(
                "dimension mismatch: {} vs {}",
                self.dim, other.dim
            )));
        }
        let t = self
            .entries()
            .map(|(r, c, v)| (r, c, v * a))
            .chain(other.entries().map(|(r, c, v)| (r, c, v * b)))
            .collect();
        SparseOperator::from_triplets(self.dim, t)
    }

    /// Sparse product `self · other`.
    pub fn matmul(&self, other: &SparseOperator) -> Result<SparseOperator> {
        if self.dim != other.dim {
            return Err(Error::invalid("dimension mismatch in product"));
        }
        let mut t = Vec::new();
        for (r, k, a) in self.entries() {
            for j in other.row_ptr[k]..other.row_ptr[k + 1] {
                t.push((r, other.cols[j], a * other.vals[j]));
            }
        }
        SparseOperator::from_triplets(self.dim, t)
    }

    /// `self ⊗ other` with `self` as the slow (outer) index.
    pub fn kron(&self, other: &SparseOperator) -> SparseOperator {
        let n = other.dim;
        let mut t = Vec::with_capacity(self.nnz() * other.nnz());
        for (r1, c1, a) in self.entries() {
            for (r2, c2, b) in other.entries() {
                t.push((r1 * n + r2, c1 * n + c2, a * b));
            }
        }
        SparseOperator::from_triplets(self.dim * n, t).expect("kron indices in range")
    }

    pub fn identity(dim: usize) -> SparseOperator {
        let t = (0..dim).map(|i| (i, i, Complex64::new(1.0, 0.0))).collect();
        SparseOperator::from_triplets(dim, t).expect("identity")
    }

    pub fn dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.entries() {
            m[(r, c)] += v;
        }
        m
    }

    fn row_dot(&self, r: usize, x: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in self.row_ptr[r]..self.row_ptr[r + 1] {
            acc += self.vals[k] * x[self.cols[k]];
        }
        acc
    }
}

impl LinearOperator for SparseOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        if self.dim >= PARALLEL_ROWS {
            y.par_iter_mut().enumerate().for_each(|(r, yr)| *yr = self.row_dot(r, x));
        } else {
            for (r, yr) in y.iter_mut().enumerate() {
                *yr = self.row_dot(r, x);
            }
        }
    }
}

impl LinearOperator for CMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = (0..self.ncols()).map(|c| self[(r, c)] * x[c]).sum();
        }
    }
}
