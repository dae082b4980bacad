//! Coordinate-list and compressed-row sparse matrices.
//!
//! Assembly happens in COO form (Kronecker products, sums, small products on
//! the photonic space) and is compressed once into CSR for repeated
//! matrix-vector products. Construction is deterministic: entries are sorted
//! and duplicates merged in a fixed order, so identical inputs produce
//! bitwise-identical matrices.

use std::ops::{AddAssign, Mul, Neg};

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::Real;

/// Entry scalar for sparse storage: real or complex floating point.
pub trait SparseScalar:
    Copy + PartialEq + Zero + AddAssign + Mul<Output = Self> + Neg<Output = Self> + Send + Sync + 'static
{
}
impl<S> SparseScalar for S where
    S: Copy + PartialEq + Zero + AddAssign + Mul<Output = S> + Neg<Output = S> + Send + Sync + 'static
{
}

/// Coordinate-list sparse matrix. Indices are `u32`; the Hilbert spaces here
/// stay far below that limit.
#[derive(Debug, Clone)]
pub struct Coo<S> {
    pub nrows: usize,
    pub ncols: usize,
    entries: Vec<(u32, u32, S)>,
}

impl<S: SparseScalar> Coo<S> {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        assert!(nrows <= u32::MAX as usize && ncols <= u32::MAX as usize);
        Coo { nrows, ncols, entries: Vec::new() }
    }

    pub fn identity(n: usize) -> Self
    where
        S: num_traits::One,
    {
        let mut m = Coo::new(n, n);
        for i in 0..n {
            m.push(i, i, S::one());
        }
        m
    }

    pub fn from_diagonal(diag: &[S]) -> Self {
        let mut m = Coo::new(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.push(i, i, v);
        }
        m
    }

    pub fn push(&mut self, row: usize, col: usize, value: S) {
        debug_assert!(row < self.nrows && col < self.ncols);
        if !value.is_zero() {
            self.entries.push((row as u32, col as u32, value));
        }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Kronecker product `self (x) other`, row-major convention: the left
    /// factor owns the slow index.
    pub fn kron(&self, other: &Coo<S>) -> Coo<S> {
        let mut out = Coo::new(self.nrows * other.nrows, self.ncols * other.ncols);
        out.entries.reserve(self.nnz() * other.nnz());
        let (rn, cn) = (other.nrows as u32, other.ncols as u32);
        for &(r1, c1, v1) in &self.entries {
            for &(r2, c2, v2) in &other.entries {
                out.entries.push((r1 * rn + r2, c1 * cn + c2, v1 * v2));
            }
        }
        out
    }

    /// Matrix product, meant for small photonic-space factors only.
    pub fn matmul(&self, other: &Coo<S>) -> Coo<S> {
        assert_eq!(self.ncols, other.nrows, "matmul dimension mismatch");
        let b = other.clone().to_csr();
        let mut out = Coo::new(self.nrows, other.ncols);
        for &(r, c, v) in &self.entries {
            for (bc, bv) in b.row(c as usize) {
                out.entries.push((r, bc, v * *bv));
            }
        }
        out
    }

    pub fn scaled(mut self, s: S) -> Coo<S> {
        for e in &mut self.entries {
            e.2 = e.2 * s;
        }
        self
    }

    /// Append all entries of `other` (matrix sum once compressed).
    pub fn add_assign(&mut self, other: &Coo<S>) {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        self.entries.extend_from_slice(&other.entries);
    }

    /// Compress to CSR, merging duplicate coordinates by summation in sorted
    /// order.
    pub fn to_csr(mut self) -> Csr<S> {
        self.entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::with_capacity(self.entries.len());
        let mut values = Vec::with_capacity(self.entries.len());
        indptr.push(0usize);
        let mut row = 0u32;
        let mut it = self.entries.iter().peekable();
        while let Some(&&(r, c, v)) = it.peek() {
            while row < r {
                indptr.push(indices.len());
                row += 1;
            }
            let mut acc = v;
            it.next();
            while let Some(&&(r2, c2, v2)) = it.peek() {
                if r2 == r && c2 == c {
                    acc += v2;
                    it.next();
                } else {
                    break;
                }
            }
            if !acc.is_zero() {
                indices.push(c);
                values.push(acc);
            }
        }
        while indptr.len() < self.nrows + 1 {
            indptr.push(indices.len());
        }
        Csr { nrows: self.nrows, ncols: self.ncols, indptr, indices, values }
    }
}

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Debug, Clone)]
pub struct Csr<S> {
    pub nrows: usize,
    pub ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<S>,
}

impl<S: SparseScalar> Csr<S> {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (u32, &S)> {
        let lo = self.indptr[i];
        let hi = self.indptr[i + 1];
        self.indices[lo..hi].iter().copied().zip(&self.values[lo..hi])
    }

    /// Entries in row-major order for dumps and conversions.
    pub fn iter_entries(&self) -> impl Iterator<Item = (usize, usize, &S)> {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j as usize, v)))
    }

    pub fn to_dense(&self) -> ndarray::Array2<S> {
        let mut a = ndarray::Array2::zeros((self.nrows, self.ncols));
        for (i, j, v) in self.iter_entries() {
            a[[i, j]] = *v;
        }
        a
    }

    /// Largest |i - j| over stored entries.
    pub fn half_bandwidth(&self) -> usize {
        let mut bw = 0usize;
        for i in 0..self.nrows {
            for (j, _) in self.row(i) {
                let d = (j as i64 - i as i64).unsigned_abs() as usize;
                bw = bw.max(d);
            }
        }
        bw
    }
}

impl<T: Real> Csr<T> {
    /// `y = A x`
    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for i in 0..self.nrows {
            let lo = self.indptr[i];
            let hi = self.indptr[i + 1];
            let mut acc = T::zero();
            for k in lo..hi {
                acc += self.values[k] * x[self.indices[k] as usize];
            }
            y[i] = acc;
        }
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `max |A - A^T|`, zero for exactly symmetric matrices.
    pub fn symmetry_residual(&self) -> T {
        assert_eq!(self.nrows, self.ncols);
        // column-sorted rows allow a transpose lookup by binary search
        let mut worst = T::zero();
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                let ju = j as usize;
                let lo = self.indptr[ju];
                let hi = self.indptr[ju + 1];
                let vt = match self.indices[lo..hi].binary_search(&(i as u32)) {
                    Ok(k) => self.values[lo + k],
                    Err(_) => T::zero(),
                };
                worst = worst.max((*v - vt).abs());
            }
        }
        worst
    }

    /// Assert the Hermiticity invariant `max|A - A^T| <= limit * max|A|`.
    pub fn require_symmetric(&self, rel_limit: T) -> Result<()> {
        let residual = self.symmetry_residual();
        let limit = rel_limit * self.max_abs();
        if residual > limit {
            return Err(Error::NotHermitian {
                residual: residual.to_f64_lossy(),
                limit: limit.to_f64_lossy(),
            });
        }
        Ok(())
    }

    /// Extract the lower band `band[[i, k]] = A[i, i-k] - shift * [k == 0]`
    /// for the banded Cholesky.
    pub fn to_lower_band(&self, shift: T) -> ndarray::Array2<T> {
        let bw = self.half_bandwidth();
        let mut band = ndarray::Array2::zeros((self.nrows, bw + 1));
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                let j = j as usize;
                if j <= i {
                    band[[i, i - j]] = *v;
                }
            }
            band[[i, 0]] -= shift;
        }
        band
    }

    /// Gershgorin lower bound `min_i (a_ii - sum_{j != i} |a_ij|)`.
    pub fn gershgorin_lower_bound(&self) -> T {
        let mut bound = T::infinity();
        for i in 0..self.nrows {
            let mut diag = T::zero();
            let mut radius = T::zero();
            for (j, v) in self.row(i) {
                if j as usize == i {
                    diag = *v;
                } else {
                    radius += v.abs();
                }
            }
            bound = bound.min(diag - radius);
        }
        bound
    }
}
