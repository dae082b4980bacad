//! Dense symmetric eigensolvers and banded Cholesky factorization.
//!
//! The eigensolver is the classic Householder reduction to tridiagonal form
//! followed by the implicit-shift QL iteration, written out explicitly so the
//! whole pipeline stays generic over the scalar and bitwise deterministic.
//! It backs the Bogoliubov transformation, the Rayleigh-Ritz step of the
//! Krylov solver, the atomic eigenproblem and the entropy Gram matrices; the
//! banded Cholesky backs the shift-invert acceleration in `spectra`.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::Real;

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale<T: Real>(x: &mut [T], alpha: T) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

/// Fortran-style `SIGN(a, b)`: |a| carrying the sign of `b`.
fn sign_of<T: Real>(a: T, b: T) -> T {
    if b >= T::zero() {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Householder reduction of a symmetric matrix to tridiagonal form.
///
/// On return `z` holds the accumulated orthogonal transformation `Q` with
/// `Q^T A Q = tridiag(d, e)`; `e[0]` is unused (set to zero).
fn tred2<T: Real>(z: &mut Array2<T>, d: &mut [T], e: &mut [T]) {
    let n = z.nrows();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = T::zero();
        if l > 0 {
            let mut scale = T::zero();
            for k in 0..=l {
                scale += z[[i, k]].abs();
            }
            if scale == T::zero() {
                e[i] = z[[i, l]];
            } else {
                for k in 0..=l {
                    z[[i, k]] /= scale;
                    h += z[[i, k]] * z[[i, k]];
                }
                let mut f = z[[i, l]];
                let g = if f >= T::zero() { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z[[i, l]] = f - g;
                f = T::zero();
                for j in 0..=l {
                    z[[j, i]] = z[[i, j]] / h;
                    let mut g = T::zero();
                    for k in 0..=j {
                        g += z[[j, k]] * z[[i, k]];
                    }
                    for k in (j + 1)..=l {
                        g += z[[k, j]] * z[[i, k]];
                    }
                    e[j] = g / h;
                    f += e[j] * z[[i, j]];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = z[[i, j]];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        let upd = f * e[k] + g * z[[i, k]];
                        z[[j, k]] -= upd;
                    }
                }
            }
        } else {
            e[i] = z[[i, l]];
        }
        d[i] = h;
    }
    d[0] = T::zero();
    e[0] = T::zero();
    for i in 0..n {
        if d[i] != T::zero() {
            for j in 0..i {
                let mut g = T::zero();
                for k in 0..i {
                    g += z[[i, k]] * z[[k, j]];
                }
                for k in 0..i {
                    let upd = g * z[[k, i]];
                    z[[k, j]] -= upd;
                }
            }
        }
        d[i] = z[[i, i]];
        z[[i, i]] = T::one();
        for j in 0..i {
            z[[j, i]] = T::zero();
            z[[i, j]] = T::zero();
        }
    }
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix.
///
/// `d` enters as the diagonal and leaves as the (unsorted) eigenvalues;
/// `e[1..]` enters as the subdiagonal. When `z` is given, its columns are
/// rotated alongside so that column `j` ends up as the eigenvector of the
/// eigenvalue `d[j]` in the basis `z` started in.
fn tql2<T: Real>(d: &mut [T], e: &mut [T], mut z: Option<&mut Array2<T>>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let eps = T::epsilon();
    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 64 {
                return Err(Error::DenseEigenFailure(l));
            }
            let mut g = (d[l + 1] - d[l]) / (T::of(2.0) * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + sign_of(r, g));
            let mut s = T::one();
            let mut c = T::one();
            let mut p = T::zero();
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + T::of(2.0) * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..z.nrows() {
                        f = z[[k, i + 1]];
                        z[[k, i + 1]] = s * z[[k, i]] + c * f;
                        z[[k, i]] = c * z[[k, i]] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}

/// Deterministic sign fix: the first component whose magnitude exceeds 1e-6
/// is made positive. Unit vectors of any realistic dimension always have one.
pub fn fix_sign<T: Real>(v: &mut [T]) {
    let thr = T::of(1e-6);
    for &x in v.iter() {
        if x.abs() > thr {
            if x < T::zero() {
                scale(v, -T::one());
            }
            return;
        }
    }
}

/// Eigendecomposition of a real symmetric matrix.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns, each sign-fixed via [`fix_sign`]. Only the lower
/// triangle of `a` is referenced.
pub fn sym_eigen<T: Real>(a: &Array2<T>) -> Result<(Vec<T>, Array2<T>)> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "sym_eigen needs a square matrix");
    if n == 0 {
        return Ok((Vec::new(), Array2::zeros((0, 0))));
    }
    // symmetrize from the lower triangle so callers may fill only one half
    let mut z = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            z[[i, j]] = a[[i, j]];
            z[[j, i]] = a[[i, j]];
        }
    }
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(&mut z, &mut d, &mut e);
    tql2(&mut d, &mut e, Some(&mut z))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("finite eigenvalues"));
    let values: Vec<T> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        let mut col: Vec<T> = (0..n).map(|k| z[[k, src]]).collect();
        fix_sign(&mut col);
        for k in 0..n {
            vectors[[k, dst]] = col[k];
        }
    }
    Ok((values, vectors))
}

/// Eigenvalues (ascending) of a real symmetric matrix, skipping the
/// eigenvector accumulation.
pub fn sym_eigenvalues<T: Real>(a: &Array2<T>) -> Result<Vec<T>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut z = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            z[[i, j]] = a[[i, j]];
            z[[j, i]] = a[[i, j]];
        }
    }
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(&mut z, &mut d, &mut e);
    tql2(&mut d, &mut e, None)?;
    d.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Ok(d)
}

/// Cholesky factorization `A = L L^T` of a symmetric positive-definite banded
/// matrix, stored by diagonals: `band[[i, k]] = A[i, i-k]` for `k <= bw`.
pub struct BandedCholesky<T> {
    n: usize,
    bw: usize,
    /// lower factor in the same band layout
    l: Array2<T>,
}

impl<T: Real> BandedCholesky<T> {
    /// Factor the band in place. Fails with [`Error::UnstablePhotonForm`]-free
    /// semantics: a non-positive pivot reports the matrix as not positive
    /// definite via `Err`.
    pub fn factor(mut band: Array2<T>) -> Result<Self> {
        let n = band.nrows();
        let bw = band.ncols() - 1;
        for j in 0..n {
            let mut s = band[[j, 0]];
            for k in 1..=bw.min(j) {
                s -= band[[j, k]] * band[[j, k]];
            }
            if s <= T::zero() {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            let ljj = s.sqrt();
            band[[j, 0]] = ljj;
            let imax = (j + bw).min(n - 1);
            for i in (j + 1)..=imax {
                let mut s = band[[i, i - j]];
                let kmin = i.saturating_sub(bw).max(j.saturating_sub(bw));
                for k in kmin..j {
                    s -= band[[i, i - k]] * band[[j, j - k]];
                }
                band[[i, i - j]] = s / ljj;
            }
        }
        Ok(BandedCholesky { n, bw, l: band })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve `A x = b` in place.
    pub fn solve(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.n);
        let bw = self.bw;
        // forward: L y = b
        for i in 0..self.n {
            let mut s = b[i];
            for k in 1..=bw.min(i) {
                s -= self.l[[i, k]] * b[i - k];
            }
            b[i] = s / self.l[[i, 0]];
        }
        // backward: L^T x = y
        for i in (0..self.n).rev() {
            let mut s = b[i];
            let kmax = bw.min(self.n - 1 - i);
            for k in 1..=kmax {
                s -= self.l[[i + k, k]] * b[i + k];
            }
            b[i] = s / self.l[[i, 0]];
        }
    }
}
