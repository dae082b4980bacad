//! Deterministic iterative eigensolver for the lowest eigenpairs, plus the
//! convergence controller that escalates grid resolution and photon cutoffs
//! until eigenvalue drifts fall below target.
//!
//! The solver is a Krylov iteration with full reorthogonalization, seeded by
//! a fixed pair of start vectors (normalized all-ones, plus an alternating
//! pattern) so repeated runs are bitwise identical and eigenvalue
//! multiplicities up to two are resolved without randomness. Large operators
//! are handled through a shift-invert spectral transformation backed by a
//! banded Cholesky factorization; the reported residuals are always measured
//! against the original operator, `|H v - lambda v| <= tol * max(1, |lambda|)`.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm2, scale, sym_eigen, BandedCholesky};
use crate::sparse::Csr;
use crate::Real;

/// Symmetric linear operator usable by the Krylov iteration.
pub trait SymOp<T: Real> {
    fn dim(&self) -> usize;
    /// `y = A x`
    fn apply(&self, x: &[T], y: &mut [T]);
}

impl<T: Real> SymOp<T> for Csr<T> {
    fn dim(&self) -> usize {
        self.nrows
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        self.matvec(x, y);
    }
}

struct ShiftInvertOp<'a, T> {
    chol: &'a BandedCholesky<T>,
}

impl<T: Real> SymOp<T> for ShiftInvertOp<'_, T> {
    fn dim(&self) -> usize {
        self.chol.dim()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        y.copy_from_slice(x);
        self.chol.solve(y);
    }
}

/// How [`lowest_eigenpairs`] attacks the problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Pick based on dimension and band memory.
    Auto,
    /// Krylov iteration directly on the operator.
    Direct,
    /// Krylov iteration on `(A - sigma)^{-1}` via banded Cholesky.
    ShiftInvert,
}

#[derive(Debug, Clone)]
pub struct EigenRequest<T> {
    /// Number of lowest eigenpairs.
    pub k: usize,
    /// Absolute eigenvalue tolerance; the per-pair residual bound is
    /// `tol * max(1, |lambda|)`.
    pub tol: T,
    pub want_vectors: bool,
    /// Krylov basis budget.
    pub max_vectors: usize,
    pub strategy: Strategy,
    /// Memory allowance for the banded factorization, in bytes.
    pub max_band_bytes: usize,
}

impl<T: Real> EigenRequest<T> {
    pub fn new(k: usize, tol: T) -> Self {
        assert!(k >= 1, "k must be at least 1");
        assert!(tol > T::zero(), "tolerance must be positive");
        EigenRequest {
            k,
            tol,
            want_vectors: false,
            max_vectors: 700,
            strategy: Strategy::Auto,
            max_band_bytes: 3 << 30,
        }
    }

    pub fn with_vectors(mut self) -> Self {
        self.want_vectors = true;
        self
    }
}

#[derive(Debug, Clone)]
pub struct EigenSolution<T> {
    /// Lowest eigenvalues, ascending.
    pub values: Vec<T>,
    /// Matching orthonormal eigenvectors if requested, sign-fixed.
    pub vectors: Option<Vec<Vec<T>>>,
    /// Verified residuals `|H v - lambda v|` per pair.
    pub residuals: Vec<T>,
    /// Krylov basis size consumed.
    pub basis_size: usize,
    pub strategy: Strategy,
}

/// Growing Krylov basis with full reorthogonalization and exact residual
/// bookkeeping for the expanded block.
struct KrylovBasis<T> {
    vectors: Vec<Vec<T>>,
    /// `t[[i, j]] = v_i . (A v_j)` for expanded columns `j`
    t: Array2<T>,
    expanded: usize,
    injection_cursor: usize,
    dim: usize,
}

impl<T: Real> KrylovBasis<T> {
    fn seeded(dim: usize, max_vectors: usize) -> Self {
        let mut basis = KrylovBasis {
            vectors: Vec::new(),
            t: Array2::zeros((max_vectors, max_vectors)),
            expanded: 0,
            injection_cursor: 0,
            dim,
        };
        let inv = T::one() / T::of(dim as f64).sqrt();
        basis.append(vec![inv; dim]);
        if dim > 1 {
            let mut alt: Vec<T> = (0..dim).map(|i| if i % 2 == 0 { inv } else { -inv }).collect();
            basis.orthogonalize(&mut alt);
            let n = norm2(&alt);
            if n > T::of(0.25) {
                scale(&mut alt, T::one() / n);
                basis.append(alt);
            }
        }
        basis
    }

    fn append(&mut self, v: Vec<T>) {
        debug_assert_eq!(v.len(), self.dim);
        self.vectors.push(v);
    }

    fn len(&self) -> usize {
        self.vectors.len()
    }

    /// Two-pass projection of `w` against every basis vector; coefficients
    /// are discarded (used for seeds and injected directions).
    fn orthogonalize(&self, w: &mut [T]) {
        for _ in 0..2 {
            for v in &self.vectors {
                let h = dot(v, w);
                axpy(-h, v, w);
            }
        }
    }

    /// Expand one column: apply `op` to the first unexpanded vector, record
    /// overlaps, append the orthogonal remainder. Returns false once the
    /// whole reachable space is exhausted or the basis budget is spent.
    fn expand_one<O: SymOp<T>>(&mut self, op: &O) -> bool {
        if self.expanded == self.t.nrows() {
            return false;
        }
        if self.expanded == self.len() && !self.inject() {
            return false;
        }
        let j = self.expanded;
        let mut w = vec![T::zero(); self.dim];
        op.apply(&self.vectors[j], &mut w);
        let applied_scale = norm2(&w);
        for _ in 0..2 {
            for (i, v) in self.vectors.iter().enumerate() {
                let h = dot(v, &w);
                self.t[[i, j]] += h;
                axpy(-h, v, &mut w);
            }
        }
        let beta = norm2(&w);
        let breakdown = T::of(1e-13) * applied_scale.max(T::of(1e-300));
        if beta > breakdown && self.len() < self.t.nrows() {
            scale(&mut w, T::one() / beta);
            let m = self.len();
            self.t[[m, j]] = beta;
            self.t[[j, m]] = beta;
            self.append(w);
        }
        self.expanded += 1;
        true
    }

    /// Deterministic deflation restart: bring in the first canonical basis
    /// vector with a significant component outside the current span.
    fn inject(&mut self) -> bool {
        while self.injection_cursor < self.dim {
            let idx = self.injection_cursor;
            self.injection_cursor += 1;
            if self.len() >= self.dim || self.len() >= self.t.nrows() {
                return false;
            }
            let mut w = vec![T::zero(); self.dim];
            w[idx] = T::one();
            self.orthogonalize(&mut w);
            let n = norm2(&w);
            if n > T::of(0.5) {
                scale(&mut w, T::one() / n);
                self.append(w);
                return true;
            }
        }
        false
    }

    /// Rayleigh-Ritz over the expanded block. Returns eigenvalues of the
    /// projected operator (ascending) and their coefficient columns.
    fn ritz(&self) -> Result<(Vec<T>, Array2<T>)> {
        let p = self.expanded;
        let mut tp = Array2::zeros((p, p));
        for i in 0..p {
            for j in 0..=i {
                let v = (self.t[[i, j]] + self.t[[j, i]]) * T::of(0.5);
                tp[[i, j]] = v;
            }
        }
        sym_eigen(&tp)
    }

    /// Exact residual bound for a Ritz pair from the frontier rows:
    /// `|A V s - theta V s| = |t[p.., ..p] s|` up to reorthogonalization noise.
    fn frontier_residual(&self, s: &[T]) -> T {
        let p = self.expanded;
        let m = self.len();
        let mut acc = T::zero();
        for r in p..m {
            let mut row = T::zero();
            for (j, &sj) in s.iter().enumerate() {
                row += self.t[[r, j]] * sj;
            }
            acc += row * row;
        }
        acc.sqrt()
    }

    /// Assemble `V s` and normalize.
    fn assemble(&self, s: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        for (j, &sj) in s.iter().enumerate() {
            axpy(sj, &self.vectors[j], &mut out);
        }
        let n = norm2(&out);
        scale(&mut out, T::one() / n);
        out
    }
}

fn residual_of<T: Real, O: SymOp<T>>(op: &O, v: &[T]) -> (T, T) {
    let mut av = vec![T::zero(); v.len()];
    op.apply(v, &mut av);
    let lambda = dot(v, &av);
    axpy(-lambda, v, &mut av);
    (lambda, norm2(&av))
}

/// Direct Krylov driver: iterate until the `k` lowest Ritz pairs satisfy the
/// residual bound against `op` itself.
fn direct_lowest<T: Real, O: SymOp<T>>(
    op: &O,
    k: usize,
    tol: T,
    max_vectors: usize,
    want_vectors: bool,
) -> Result<(Vec<T>, Option<Vec<Vec<T>>>, Vec<T>, usize)> {
    let dim = op.dim();
    let budget = max_vectors.min(dim).max((k + 2).min(dim));
    let mut basis = KrylovBasis::seeded(dim, budget);
    loop {
        let chunk = (basis.expanded / 6).max(2);
        let mut stalled = false;
        for _ in 0..chunk {
            if !basis.expand_one(op) {
                stalled = true;
                break;
            }
        }
        if basis.expanded == 0 {
            return Err(Error::DimensionMismatch("empty operator".into()));
        }
        let p = basis.expanded;
        let exact = p == dim; // full space spanned: Ritz values are exact
        let (theta, s) = basis.ritz()?;
        let kk = k.min(p);
        let mut bounds_ok = kk == k;
        for i in 0..kk {
            let col: Vec<T> = (0..p).map(|r| s[[r, i]]).collect();
            if basis.frontier_residual(&col) > tol * T::one().max(theta[i].abs()) {
                bounds_ok = false;
                break;
            }
        }
        if bounds_ok || stalled || exact {
            // assemble candidates and verify true residuals
            let mut values = Vec::with_capacity(kk);
            let mut residuals = Vec::with_capacity(kk);
            let mut vectors = Vec::with_capacity(kk);
            let mut verified = kk == k;
            for i in 0..kk {
                let col: Vec<T> = (0..p).map(|r| s[[r, i]]).collect();
                let mut v = basis.assemble(&col);
                let (lambda, res) = residual_of(op, &v);
                if res > tol * T::one().max(lambda.abs()) {
                    verified = false;
                }
                crate::linalg::fix_sign(&mut v);
                values.push(lambda);
                residuals.push(res);
                vectors.push(v);
            }
            if verified || exact {
                if kk < k {
                    return Err(Error::DimensionMismatch(format!(
                        "only {kk} eigenpairs reachable for an operator of dimension {dim}"
                    )));
                }
                return Ok((values, want_vectors.then_some(vectors), residuals, basis.len()));
            }
            if stalled {
                return Err(Error::NonConvergence {
                    max_vectors: budget,
                    best_residuals: residuals.iter().map(|r| r.to_f64_lossy()).collect(),
                });
            }
        } else if stalled {
            return Err(Error::NonConvergence { max_vectors: budget, best_residuals: vec![] });
        }
    }
}

/// Shift-invert driver: factor `A - sigma` once, iterate on its inverse, and
/// verify residuals in the metric of `A`.
fn shift_invert_lowest<T: Real>(
    a: &Csr<T>,
    k: usize,
    tol: T,
    max_vectors: usize,
    want_vectors: bool,
) -> Result<(Vec<T>, Option<Vec<Vec<T>>>, Vec<T>, usize)> {
    let dim = a.nrows;
    // pilot run for a shift strictly below the spectrum
    let pilot_budget = 48.min(dim);
    let mut pilot = KrylovBasis::seeded(dim, pilot_budget);
    while pilot.expanded < pilot_budget && pilot.expand_one(a) {}
    let (theta, _) = pilot.ritz()?;
    let lo = theta.first().copied().unwrap_or(T::zero());
    let hi = theta.get(k.min(theta.len().saturating_sub(1))).copied().unwrap_or(lo);
    let mut margin = (hi - lo).max(lo.abs() * T::of(1e-6)).max(T::of(1e-6));

    let mut chol = None;
    for _ in 0..10 {
        let sigma = lo - margin;
        match BandedCholesky::factor(a.to_lower_band(sigma)) {
            Ok(c) => {
                chol = Some((c, sigma));
                break;
            }
            Err(_) => margin *= T::of(4.0),
        }
    }
    let (chol, _sigma) = chol.ok_or_else(|| {
        Error::InvalidConfig("could not place the shift below the spectrum".into())
    })?;
    let inv = ShiftInvertOp { chol: &chol };

    let budget = max_vectors.min(dim).max(k + 2);
    let mut basis = KrylovBasis::seeded(dim, budget);
    let mut best: Vec<T> = Vec::new();
    loop {
        let mut exhausted = false;
        let chunk = (basis.expanded / 6).max(2).min(budget.saturating_sub(basis.expanded)).max(1);
        for _ in 0..chunk {
            if basis.expanded >= budget {
                break;
            }
            if !basis.expand_one(&inv) {
                exhausted = true;
                break;
            }
        }
        if basis.expanded >= k.min(dim) {
            let (mu, s) = basis.ritz()?;
            // largest mu of the inverse <-> lowest lambda of A
            let p = basis.expanded;
            let kk = k.min(mu.len());
            let mut values = Vec::with_capacity(kk);
            let mut residuals = Vec::with_capacity(kk);
            let mut vectors = Vec::with_capacity(kk);
            let mut ok = kk == k || p == dim;
            for i in 0..kk {
                let col_idx = p - 1 - i;
                let col: Vec<T> = (0..p).map(|r| s[[r, col_idx]]).collect();
                let mut v = basis.assemble(&col);
                let (lambda, res) = residual_of(a, &v);
                crate::linalg::fix_sign(&mut v);
                values.push(lambda);
                residuals.push(res);
                vectors.push(v);
                if res > tol * T::one().max(lambda.abs()) {
                    ok = false;
                }
            }
            // ascending order of lambda comes out naturally; enforce anyway
            let mut order: Vec<usize> = (0..values.len()).collect();
            order.sort_by(|&x, &y| values[x].partial_cmp(&values[y]).expect("finite"));
            let values: Vec<T> = order.iter().map(|&i| values[i]).collect();
            let residuals: Vec<T> = order.iter().map(|&i| residuals[i]).collect();
            let vectors: Vec<Vec<T>> = order.iter().map(|&i| vectors[i].clone()).collect();
            best = residuals.clone();
            if ok || exhausted {
                if kk < k {
                    return Err(Error::DimensionMismatch(format!(
                        "requested {k} eigenpairs from an operator of dimension {dim}"
                    )));
                }
                let vecs = want_vectors.then_some(vectors);
                return Ok((values, vecs, residuals, basis.len()));
            }
        }
        if exhausted || basis.expanded >= budget {
            return Err(Error::NonConvergence {
                max_vectors: budget,
                best_residuals: best.iter().map(|r| r.to_f64_lossy()).collect(),
            });
        }
    }
}

/// Lowest `k` eigenpairs of a sparse symmetric matrix, deterministic across
/// runs and thread counts.
pub fn lowest_eigenpairs<T: Real>(a: &Csr<T>, req: &EigenRequest<T>) -> Result<EigenSolution<T>> {
    if a.nrows != a.ncols {
        return Err(Error::DimensionMismatch(format!("operator is {}x{}", a.nrows, a.ncols)));
    }
    if req.k > a.nrows {
        return Err(Error::DimensionMismatch(format!(
            "requested {} eigenpairs from an operator of dimension {}",
            req.k, a.nrows
        )));
    }
    let strategy = match req.strategy {
        Strategy::Auto => {
            let bw = a.half_bandwidth();
            let band_bytes = a.nrows * (bw + 1) * std::mem::size_of::<T>();
            if a.nrows <= 512 {
                Strategy::Direct
            } else if band_bytes <= req.max_band_bytes {
                Strategy::ShiftInvert
            } else {
                Strategy::Direct
            }
        }
        s => s,
    };
    let (values, vectors, residuals, basis_size) = match strategy {
        Strategy::ShiftInvert => shift_invert_lowest(a, req.k, req.tol, req.max_vectors, req.want_vectors)?,
        _ => direct_lowest(a, req.k, req.tol, req.max_vectors, req.want_vectors)?,
    };
    Ok(EigenSolution { values, vectors, residuals, basis_size, strategy })
}

/// One resolution level of the two-knob escalation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumericsLevel {
    pub n_points: usize,
    pub cutoffs: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EscalationKind {
    Grid,
    Cutoff,
}

#[derive(Debug, Clone)]
pub struct EscalationRecord<T> {
    pub kind: EscalationKind,
    pub level: NumericsLevel,
    /// max |drift| of the tracked eigenvalues against the previous level
    pub drift: T,
}

/// Outcome of the convergence controller.
#[derive(Debug, Clone)]
pub struct ConvergenceReport<T> {
    pub final_level: NumericsLevel,
    pub escalations: Vec<EscalationRecord<T>>,
    pub converged: bool,
}

impl<T: Real> ConvergenceReport<T> {
    /// Drifts of the final two escalations must not increase.
    pub fn drifts_monotone(&self) -> bool {
        let n = self.escalations.len();
        if n < 2 {
            return true;
        }
        self.escalations[n - 1].drift <= self.escalations[n - 2].drift
    }
}

#[derive(Debug, Clone)]
pub struct ConvergeOptions<T> {
    pub targets_k: usize,
    /// Drift target between successive escalations (absolute units).
    pub tol: T,
    pub max_escalations: usize,
    /// Hard cap on grid x Fock dimension.
    pub max_dim: usize,
    pub cutoff_increment: usize,
    pub eigen: EigenRequest<T>,
}

impl<T: Real> ConvergeOptions<T> {
    pub fn new(k: usize, tol: T) -> Self {
        let mut eigen = EigenRequest::new(k, tol * T::of(0.05));
        eigen.want_vectors = false;
        ConvergeOptions {
            targets_k: k,
            tol,
            max_escalations: 10,
            max_dim: 1 << 20,
            cutoff_increment: 4,
            eigen,
        }
    }
}

/// Escalate grid and cutoffs alternately until the lowest `k` eigenvalues
/// drift less than `tol` under both knobs, then return the final spectrum.
///
/// `build` assembles the operator for a given level; the budget-exhausted
/// path returns a partial report with `converged = false` rather than an
/// error so callers can inspect the trace.
pub fn converge<T, F>(
    build: F,
    start: NumericsLevel,
    opts: &ConvergeOptions<T>,
) -> Result<(ConvergenceReport<T>, Vec<T>)>
where
    T: Real,
    F: Fn(&NumericsLevel) -> Result<Csr<T>>,
{
    let solve = |level: &NumericsLevel| -> Result<Vec<T>> {
        let op = build(level)?;
        let sol = lowest_eigenpairs(&op, &opts.eigen)?;
        Ok(sol.values)
    };
    let mut level = start;
    let mut spectrum = solve(&level)?;
    let mut escalations: Vec<EscalationRecord<T>> = Vec::new();
    let mut kind = EscalationKind::Grid;
    let mut grid_drift: Option<T> = None;
    let mut cutoff_drift: Option<T> = None;
    for _ in 0..opts.max_escalations {
        let next = match kind {
            EscalationKind::Grid => NumericsLevel {
                n_points: level.n_points * 2,
                cutoffs: level.cutoffs.clone(),
            },
            EscalationKind::Cutoff => NumericsLevel {
                n_points: level.n_points,
                cutoffs: level.cutoffs.iter().map(|c| c + opts.cutoff_increment).collect(),
            },
        };
        let dim: usize = next.n_points * next.cutoffs.iter().map(|c| c + 1).product::<usize>();
        if dim > opts.max_dim {
            return Ok((
                ConvergenceReport { final_level: level, escalations, converged: false },
                spectrum,
            ));
        }
        let next_spectrum = solve(&next)?;
        let drift = spectrum
            .iter()
            .zip(&next_spectrum)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max);
        escalations.push(EscalationRecord { kind, level: next.clone(), drift });
        match kind {
            EscalationKind::Grid => grid_drift = Some(drift),
            EscalationKind::Cutoff => cutoff_drift = Some(drift),
        }
        level = next;
        spectrum = next_spectrum;
        let n = escalations.len();
        let monotone = n < 2 || escalations[n - 1].drift <= escalations[n - 2].drift;
        if let (Some(g), Some(c)) = (grid_drift, cutoff_drift) {
            if g < opts.tol && c < opts.tol && monotone {
                return Ok((
                    ConvergenceReport { final_level: level, escalations, converged: true },
                    spectrum,
                ));
            }
        }
        kind = match kind {
            EscalationKind::Grid => EscalationKind::Cutoff,
            EscalationKind::Cutoff => EscalationKind::Grid,
        };
    }
    Ok((ConvergenceReport { final_level: level, escalations, converged: false }, spectrum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::Coo;
    use approx::assert_relative_eq;

    fn two_by_two() -> Csr<f64> {
        let mut m = Coo::new(2, 2);
        m.push(0, 1, 1.0);
        m.push(1, 0, 1.0);
        m.to_csr()
    }

    #[test]
    fn flip_matrix_eigenvalues() {
        let sol = lowest_eigenpairs(&two_by_two(), &EigenRequest::new(2, 1e-12)).unwrap();
        assert_relative_eq!(sol.values[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(sol.values[1], 1.0, epsilon = 1e-12);
    }

    fn det_sparse(n: usize, bw: usize) -> Csr<f64> {
        let mut m = Coo::new(n, n);
        for i in 0..n {
            m.push(i, i, (i % 17) as f64 + 0.3 * ((i * 7 % 5) as f64));
            for d in 1..=bw {
                if i + d < n {
                    let v = 0.4 / d as f64 * ((((i * 13 + d * 29) % 11) as f64) / 11.0 - 0.5);
                    m.push(i, i + d, v);
                    m.push(i + d, i, v);
                }
            }
        }
        m.to_csr()
    }

    #[test]
    fn agrees_with_dense_oracle_direct_and_shift_invert() {
        for n in [24, 257, 900] {
            let a = det_sparse(n, 3);
            let dense = a.to_dense();
            let reference = {
                let na = nalgebra::DMatrix::from_fn(n, n, |i, j| dense[[i, j]]);
                let mut ev = na.symmetric_eigen().eigenvalues.as_slice().to_vec();
                ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
                ev
            };
            for strategy in [Strategy::Direct, Strategy::ShiftInvert] {
                let mut req = EigenRequest::new(6, 1e-11);
                req.strategy = strategy;
                let sol = lowest_eigenpairs(&a, &req).unwrap();
                for (v, r) in sol.values.iter().zip(&reference) {
                    assert!(
                        (v - r).abs() < 1e-9,
                        "{strategy:?} n={n}: {v} vs {r}"
                    );
                }
            }
        }
    }

    #[test]
    fn resolves_double_multiplicity() {
        // block diag of two identical 40x40 blocks: every eigenvalue doubled
        let n = 40;
        let mut m = Coo::new(2 * n, 2 * n);
        for b in 0..2 {
            let off = b * n;
            for i in 0..n {
                m.push(off + i, off + i, (i as f64) * 0.5);
                if i + 1 < n {
                    m.push(off + i, off + i + 1, -0.7);
                    m.push(off + i + 1, off + i, -0.7);
                }
            }
        }
        let a = m.to_csr();
        let sol = lowest_eigenpairs(&a, &EigenRequest::new(4, 1e-11)).unwrap();
        assert_relative_eq!(sol.values[0], sol.values[1], epsilon = 1e-9);
        assert_relative_eq!(sol.values[2], sol.values[3], epsilon = 1e-9);
        assert!(sol.values[1] < sol.values[2] - 1e-6);
    }

    #[test]
    fn deterministic_bitwise() {
        let a = det_sparse(600, 2);
        let r1 = lowest_eigenpairs(&a, &EigenRequest::new(5, 1e-11).with_vectors()).unwrap();
        let r2 = lowest_eigenpairs(&a, &EigenRequest::new(5, 1e-11).with_vectors()).unwrap();
        assert_eq!(r1.values, r2.values);
        assert_eq!(r1.vectors.unwrap(), r2.vectors.unwrap());
    }

    #[test]
    fn residual_bound_holds() {
        let a = det_sparse(500, 4);
        let req = EigenRequest::new(5, 1e-10).with_vectors();
        let sol = lowest_eigenpairs(&a, &req).unwrap();
        for (lambda, res) in sol.values.iter().zip(&sol.residuals) {
            assert!(*res <= 1e-10 * 1.0_f64.max(lambda.abs()));
        }
    }

    #[test]
    fn diagonal_catches_decoupled_ladder() {
        // diagonal with known entries, including a duplicate pair
        let diag = [3.0, 0.5, 2.0, 0.5, 5.0, 1.0];
        let mut m = Coo::new(6, 6);
        for (i, &v) in diag.iter().enumerate() {
            m.push(i, i, v);
        }
        let sol = lowest_eigenpairs(&m.to_csr(), &EigenRequest::new(4, 1e-13)).unwrap();
        assert_eq!(sol.values, vec![0.5, 0.5, 1.0, 2.0]);
    }

    #[test]
    fn converge_controller_trivial_diagonal() {
        // "operator" whose spectrum is independent of the level: converges at
        // the first grid + cutoff escalation pair
        let build = |_level: &NumericsLevel| -> Result<Csr<f64>> {
            let mut m = Coo::new(8, 8);
            for i in 0..8 {
                m.push(i, i, i as f64);
            }
            Ok(m.to_csr())
        };
        let opts = ConvergeOptions::new(3, 1e-8);
        let (report, spectrum) =
            converge(build, NumericsLevel { n_points: 16, cutoffs: vec![2] }, &opts).unwrap();
        assert!(report.converged);
        assert_eq!(report.escalations.len(), 2);
        assert_eq!(spectrum, vec![0.0, 1.0, 2.0]);
        assert!(report.drifts_monotone());
    }

    #[test]
    fn converge_budget_exhaustion_flagged() {
        let build = |level: &NumericsLevel| -> Result<Csr<f64>> {
            // spectrum keeps moving with the level: never converges
            let mut m = Coo::new(4, 4);
            for i in 0..4 {
                m.push(i, i, i as f64 + 1.0 / level.n_points as f64);
            }
            Ok(m.to_csr())
        };
        let mut opts = ConvergeOptions::new(2, 1e-14);
        opts.max_escalations = 3;
        let (report, _) =
            converge(build, NumericsLevel { n_points: 4, cutoffs: vec![1] }, &opts).unwrap();
        assert!(!report.converged);
        assert_eq!(report.escalations.len(), 3);
    }
}
