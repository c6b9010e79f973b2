//! Sparse storage and the direct solver for the per-step block system.
//!
//! Factorization is delegated to faer's sparse LU (fill-reducing ordering
//! plus partial pivoting). Matrices are stored row-compressed here; the CSR
//! arrays of `A` are handed to faer as the CSC arrays of `A^T`, which is
//! factored and solved transposed.

use std::time::{Duration, Instant};

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::{Mat, Side};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("sparse LU failed: {0}")]
    Factorization(String),
    #[error("solution is not finite (singular or near-singular system)")]
    NonFinite,
    #[error("dense decomposition failed: {0}")]
    Dense(String),
}

/// Row-compressed sparse matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Triplet accumulator; duplicate entries are summed on conversion.
#[derive(Debug, Clone, Default)]
pub struct Triplets {
    pub nrows: usize,
    pub ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, entries: Vec::new() }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self { nrows, ncols, entries: Vec::with_capacity(cap) }
    }

    #[inline]
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.entries.push((i, j, v));
    }

    /// Adds every entry of `m`, scaled, at the given offset.
    pub fn push_matrix(&mut self, m: &SparseMatrix, row_off: usize, col_off: usize, scale: f64) {
        for i in 0..m.nrows {
            for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                self.push(row_off + i, col_off + m.col_idx[k], scale * m.values[k]);
            }
        }
    }

    /// Adds `scale * m^T` at the given offset.
    pub fn push_transpose(&mut self, m: &SparseMatrix, row_off: usize, col_off: usize, scale: f64) {
        for i in 0..m.nrows {
            for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                self.push(row_off + m.col_idx[k], col_off + i, scale * m.values[k]);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Explicit zeros are kept so the pattern is stable across value changes.
    pub fn into_csr(mut self) -> SparseMatrix {
        self.entries.sort_unstable_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in self.entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix { nrows: self.nrows, ncols: self.ncols, row_ptr, col_idx, values }
    }
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, row_ptr: vec![0; nrows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Triplets::new(n, n);
        for i in 0..n {
            t.push(i, i, 1.0);
        }
        t.into_csr()
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut t = Triplets::new(nrows, ncols);
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    t.push(i, j, v);
                }
            }
        }
        t.into_csr()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    /// Position of entry `(i, j)` in the value array, if stored.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].binary_search(&j).ok().map(|k| r.start + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.find(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for i in 0..self.nrows {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
    }

    /// `y = A^T x`
    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.col_idx[k]] += self.values[k] * x[i];
            }
        }
        y
    }

    /// `x^T A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.matvec(y);
        dot(x, &ay)
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut t = Triplets::with_capacity(self.ncols, self.nrows, self.nnz());
        t.push_transpose(self, 0, 0, 1.0);
        t.into_csr()
    }

    pub fn scaled(&self, s: f64) -> SparseMatrix {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= s);
        m
    }

    /// `self + s * other` (patterns merged).
    pub fn add(&self, other: &SparseMatrix, s: f64) -> Result<SparseMatrix, LinalgError> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(LinalgError::Shape(format!(
                "{}x{} + {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut t = Triplets::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        t.push_matrix(self, 0, 0, 1.0);
        t.push_matrix(other, 0, 0, s);
        Ok(t.into_csr())
    }

    /// Adds `s * other` into existing entries of `self`; fails if `other`
    /// has an entry outside `self`'s pattern.
    pub fn add_in_pattern(&mut self, other: &SparseMatrix, row_off: usize, col_off: usize, s: f64) -> Result<(), LinalgError> {
        for i in 0..other.nrows {
            for k in other.row_ptr[i]..other.row_ptr[i + 1] {
                let (r, c) = (row_off + i, col_off + other.col_idx[k]);
                let pos = self
                    .find(r, c)
                    .ok_or_else(|| LinalgError::Shape(format!("entry ({r},{c}) outside pattern")))?;
                self.values[pos] += s * other.values[k];
            }
        }
        Ok(())
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut d = Mat::<f64>::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                d[(i, j)] += v;
            }
        }
        d
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    /// Submatrix with the given rows and columns (in the given order).
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> SparseMatrix {
        let mut colmap = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            colmap[c] = k;
        }
        let mut t = Triplets::new(rows.len(), cols.len());
        for (ri, &r) in rows.iter().enumerate() {
            for (c, v) in self.row(r) {
                if colmap[c] != usize::MAX {
                    t.push(ri, colmap[c], v);
                }
            }
        }
        t.into_csr()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinearSolveReport {
    /// `||A x - b||_2` recomputed after the solve.
    pub residual_norm: f64,
    pub rhs_norm: f64,
    pub factor_time: Duration,
    pub solve_time: Duration,
    /// `max |y| / max |D_r b|` for the equilibrated solve `y`: a lower bound
    /// on the infinity norm of the inverse of the scaled matrix, large when
    /// pivots are tiny.
    pub pivot_growth: f64,
    pub refinement_steps: usize,
}

impl LinearSolveReport {
    pub fn relative_residual(&self) -> f64 {
        if self.rhs_norm > 0.0 {
            self.residual_norm / self.rhs_norm
        } else {
            self.residual_norm
        }
    }
}

/// Direct solver that keeps the symbolic factorization for matrices sharing
/// one sparsity pattern.
pub struct DirectSolver {
    pattern: Option<(Vec<usize>, Vec<usize>)>,
    symbolic_csc: Option<SymbolicSparseColMat<usize>>,
    symbolic: Option<SymbolicLu<usize>>,
    refinement_steps: usize,
}

impl Default for DirectSolver {
    fn default() -> Self {
        Self::new()
    }
}

/// Relative residual below which iterative refinement stops.
const REFINE_TARGET: f64 = 1e-14;

impl DirectSolver {
    pub fn new() -> Self {
        Self { pattern: None, symbolic_csc: None, symbolic: None, refinement_steps: 3 }
    }

    fn prepare(&mut self, a: &SparseMatrix) -> Result<(), LinalgError> {
        let same = self.pattern.as_ref().is_some_and(|(rp, ci)| rp == &a.row_ptr && ci == &a.col_idx);
        if same {
            return Ok(());
        }
        // The CSR arrays of A are the CSC arrays of A^T.
        let sym = SymbolicSparseColMat::new_checked(a.ncols, a.nrows, a.row_ptr.clone(), None, a.col_idx.clone());
        let lu = SymbolicLu::try_new(sym.as_ref()).map_err(|e| LinalgError::Factorization(format!("{e:?}")))?;
        self.pattern = Some((a.row_ptr.clone(), a.col_idx.clone()));
        self.symbolic_csc = Some(sym);
        self.symbolic = Some(lu);
        Ok(())
    }

    /// Equilibrates and factors `a`, reusing the symbolic analysis when the
    /// pattern is unchanged.
    pub fn factor(&mut self, a: &SparseMatrix) -> Result<Factorization, LinalgError> {
        let n = a.nrows;
        if a.ncols != n {
            return Err(LinalgError::Shape(format!("{}x{} matrix is not square", a.nrows, a.ncols)));
        }
        let t0 = Instant::now();
        self.prepare(a)?;
        let (dr, dc) = equilibrate(a);
        let mut scaled = a.values.clone();
        for i in 0..n {
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                scaled[k] *= dr[i] * dc[a.col_idx[k]];
            }
        }
        let sym = self.symbolic_csc.as_ref().unwrap();
        let at = SparseColMatRef::new(sym.as_ref(), &scaled);
        let lu = Lu::try_new_with_symbolic(self.symbolic.clone().unwrap(), at)
            .map_err(|e| LinalgError::Factorization(format!("{e:?}")))?;
        Ok(Factorization { lu, dr, dc, factor_time: t0.elapsed(), refinement_steps: self.refinement_steps })
    }

    /// Solves `A x = b` with row/column equilibration and iterative refinement.
    pub fn solve(&mut self, a: &SparseMatrix, b: &[f64]) -> Result<(Vec<f64>, LinearSolveReport), LinalgError> {
        if b.len() != a.nrows {
            return Err(LinalgError::Shape(format!("{}x{} system with rhs {}", a.nrows, a.ncols, b.len())));
        }
        self.factor(a)?.solve(a, b)
    }
}

/// Numeric LU factors of an equilibrated matrix.
pub struct Factorization {
    lu: Lu<usize, f64>,
    dr: Vec<f64>,
    dc: Vec<f64>,
    factor_time: Duration,
    refinement_steps: usize,
}

impl Factorization {
    /// One solve with the factors, without refinement.
    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        let n = self.dr.len();
        let mut rhs = Mat::<f64>::zeros(n, 1);
        for i in 0..n {
            rhs[(i, 0)] = self.dr[i] * r[i];
        }
        let y = self.lu.solve_transpose(&rhs);
        (0..n).map(|i| self.dc[i] * y[(i, 0)]).collect()
    }

    /// Solves `A x = b` for the factored `a`, refining iteratively.
    pub fn solve(&self, a: &SparseMatrix, b: &[f64]) -> Result<(Vec<f64>, LinearSolveReport), LinalgError> {
        let n = self.dr.len();
        if a.nrows != n || b.len() != n {
            return Err(LinalgError::Shape(format!("factors of size {n}, matrix {}x{}, rhs {}", a.nrows, a.ncols, b.len())));
        }
        let t1 = Instant::now();
        let mut x = self.apply(b);
        let ymax = x.iter().zip(&self.dc).fold(0.0_f64, |m, (x, d)| m.max((x / d).abs()));
        let bmax = b.iter().zip(&self.dr).fold(0.0_f64, |m, (b, d)| m.max((b * d).abs()));
        let pivot_growth = if bmax > 0.0 { ymax / bmax } else { 0.0 };
        let rhs_norm = norm2(b);
        let mut r = residual(a, &x, b);
        let mut rn = norm2(&r);
        let mut steps = 0;
        while steps < self.refinement_steps && rn > REFINE_TARGET * rhs_norm && rn.is_finite() {
            let dx = self.apply(&r);
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
            let tr = residual(a, &trial, b);
            let tn = norm2(&tr);
            steps += 1;
            if !(tn < rn) {
                break;
            }
            x = trial;
            r = tr;
            rn = tn;
        }
        if !rn.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        let report = LinearSolveReport {
            residual_norm: rn,
            rhs_norm,
            factor_time: self.factor_time,
            solve_time: t1.elapsed(),
            pivot_growth,
            refinement_steps: steps,
        };
        Ok((x, report))
    }
}

fn residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.matvec(x);
    b.iter().zip(&ax).map(|(b, a)| b - a).collect()
}

/// Iterative infinity-norm row/column scaling; returns `(D_r, D_c)` such
/// that `D_r A D_c` has rows and columns of unit max-norm.
fn equilibrate(a: &SparseMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.nrows;
    let mut dr = vec![1.0; n];
    let mut dc = vec![1.0; a.ncols];
    for _ in 0..10 {
        let mut rmax = vec![0.0_f64; n];
        let mut cmax = vec![0.0_f64; a.ncols];
        for i in 0..n {
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                let j = a.col_idx[k];
                let v = (a.values[k] * dr[i] * dc[j]).abs();
                rmax[i] = rmax[i].max(v);
                cmax[j] = cmax[j].max(v);
            }
        }
        let mut done = true;
        for i in 0..n {
            if rmax[i] > 0.0 {
                dr[i] /= rmax[i].sqrt();
                done &= (rmax[i] - 1.0).abs() < 1e-2;
            }
        }
        for j in 0..a.ncols {
            if cmax[j] > 0.0 {
                dc[j] /= cmax[j].sqrt();
                done &= (cmax[j] - 1.0).abs() < 1e-2;
            }
        }
        if done {
            break;
        }
    }
    (dr, dc)
}

/// One-shot sparse LU solve.
pub fn lu_solve(a: &SparseMatrix, b: &[f64]) -> Result<(Vec<f64>, LinearSolveReport), LinalgError> {
    DirectSolver::new().solve(a, b)
}

/// Dense estimate of `inf_w sup_v (B v, w) / (|v|_V |w|_W)` where the norms
/// are given by SPD Gram matrices `m_v` (columns of B) and `m_w` (rows).
///
/// Computed as the square root of the smallest eigenvalue of
/// `M_w^{-1/2} B M_v^{-1} B^T M_w^{-1/2}`.
pub fn smallest_singular_estimate(b: &SparseMatrix, m_v: &SparseMatrix, m_w: &SparseMatrix) -> Result<f64, LinalgError> {
    let (m, n) = (b.nrows, b.ncols);
    if m_v.nrows != n || m_v.ncols != n || m_w.nrows != m || m_w.ncols != m {
        return Err(LinalgError::Shape(format!(
            "B is {m}x{n}, M_v is {}x{}, M_w is {}x{}",
            m_v.nrows, m_v.ncols, m_w.nrows, m_w.ncols
        )));
    }
    if m == 0 {
        return Ok(0.0);
    }
    let bd = b.to_dense();
    let llt = m_v.to_dense().llt(Side::Lower).map_err(|e| LinalgError::Dense(format!("{e:?}")))?;
    // S = B M_v^{-1} B^T
    let bt = bd.transpose().to_owned();
    let y = llt.solve(&bt);
    let s = &bd * &y;
    // M_w^{-1/2} via the eigendecomposition of M_w.
    let evd = m_w.to_dense().self_adjoint_eigen(Side::Lower).map_err(|e| LinalgError::Dense(format!("{e:?}")))?;
    let u = evd.U();
    let d = evd.S().column_vector();
    let mut w = Mat::<f64>::zeros(m, m);
    for j in 0..m {
        let dj = d[j];
        if !(dj > 0.0) {
            return Err(LinalgError::Dense("W Gram matrix is not positive definite".into()));
        }
        let f = 1.0 / dj.sqrt();
        for i in 0..m {
            w[(i, j)] = u[(i, j)] * f;
        }
    }
    let wh = &w * u.transpose();
    let t = &wh * &s * &wh;
    let sym = Mat::<f64>::from_fn(m, m, |i, j| 0.5 * (t[(i, j)] + t[(j, i)]));
    let ev = sym.self_adjoint_eigenvalues(Side::Lower).map_err(|e| LinalgError::Dense(format!("{e:?}")))?;
    Ok(ev[0].max(0.0).sqrt())
}

/// Dense inverse of a small SPD matrix (used by tests and diagnostics).
pub fn dense_inverse(a: &Mat<f64>) -> Mat<f64> {
    a.partial_piv_lu().inverse()
}
