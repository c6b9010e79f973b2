//! Volume bilinear forms.

use crate::fem::{essential_bc_mask, CellValues, Components, DofMap, EssentialBc, Tabulation};
use crate::linalg::{DirectSolver, SparseMatrix, Triplets};
use crate::mesh::{BoundaryTag, Point2};
use crate::quadrature::{triangle_rule, MAX_DEGREE};

use super::{apply_dirichlet, volume_degree, AssemblyError};

/// Local basis of a space seen as vector valued (vector Lagrange spaces
/// expanded by component, local index `c * n + i`) or scalar valued.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LocalBasis {
    rt: bool,
    n: usize,
    comps: usize,
}

impl LocalBasis {
    pub(crate) fn of(dm: &DofMap) -> Self {
        Self { rt: dm.kind().is_rt(), n: dm.local_dofs(), comps: if dm.kind().is_rt() { 1 } else { dm.components() } }
    }

    pub(crate) fn len(&self) -> usize {
        self.n * self.comps
    }

    #[inline]
    pub(crate) fn scalar(&self, cv: &CellValues, q: usize, a: usize) -> f64 {
        cv.vals[q * self.n + a]
    }

    #[inline]
    pub(crate) fn value(&self, cv: &CellValues, q: usize, a: usize) -> [f64; 2] {
        if self.rt {
            return cv.vvals[q * self.n + a];
        }
        let (c, i) = (a / self.n, a % self.n);
        let mut v = [0.0; 2];
        v[c] = cv.vals[q * self.n + i];
        v
    }

    /// `g[c][d] = d v_c / d x_d`
    #[inline]
    pub(crate) fn grad(&self, cv: &CellValues, q: usize, a: usize) -> [[f64; 2]; 2] {
        if self.rt {
            return cv.vgrads[q * self.n + a];
        }
        let (c, i) = (a / self.n, a % self.n);
        let mut g = [[0.0; 2]; 2];
        g[c] = cv.grads[q * self.n + i];
        g
    }

    #[inline]
    pub(crate) fn div(&self, cv: &CellValues, q: usize, a: usize) -> f64 {
        if self.rt {
            return cv.divs[q * self.n + a];
        }
        let (c, i) = (a / self.n, a % self.n);
        cv.grads[q * self.n + i][c]
    }

    pub(crate) fn globals(&self, dm: &DofMap, cell: usize, out: &mut Vec<usize>) {
        out.clear();
        for c in 0..self.comps {
            for i in 0..self.n {
                out.push(dm.global(cell, i, c));
            }
        }
    }
}

/// Loops over cells, calling `kernel(cell, test values, trial values, local)`
/// with `local` a zeroed row-major `n_test x n_trial` buffer.
pub(crate) fn assemble_cells(
    test: &DofMap,
    trial: &DofMap,
    degree: usize,
    mut kernel: impl FnMut(usize, &CellValues, &CellValues, &mut [f64]),
) -> Result<SparseMatrix, AssemblyError> {
    if test.mesh().n_cells() != trial.mesh().n_cells() {
        return Err(AssemblyError::Dimension("test and trial spaces live on different meshes".into()));
    }
    let rule = triangle_rule(degree.clamp(1, MAX_DEGREE)).expect("degree clamped to supported range");
    let tab_t = Tabulation::from_rule(test.kind(), &rule);
    let tab_u = Tabulation::from_rule(trial.kind(), &rule);
    let (bt, bu) = (LocalBasis::of(test), LocalBasis::of(trial));
    let (nt, nu) = (bt.len(), bu.len());
    let nc = test.mesh().n_cells();
    let mut trip = Triplets::with_capacity(test.n_dofs(), trial.n_dofs(), nc * nt * nu);
    let (mut cv_t, mut cv_u) = (CellValues::default(), CellValues::default());
    let (mut gt, mut gu) = (Vec::new(), Vec::new());
    let mut local = vec![0.0; nt * nu];
    for cell in 0..nc {
        let geom = test.geometry(cell)?;
        cv_t.reinit(&tab_t, &geom, test.cell_signs(cell));
        cv_u.reinit(&tab_u, &geom, trial.cell_signs(cell));
        local.iter_mut().for_each(|v| *v = 0.0);
        kernel(cell, &cv_t, &cv_u, &mut local);
        bt.globals(test, cell, &mut gt);
        bu.globals(trial, cell, &mut gu);
        for (a, &ga) in gt.iter().enumerate() {
            for (b, &gb) in gu.iter().enumerate() {
                trip.push(ga, gb, local[a * nu + b]);
            }
        }
    }
    Ok(trip.into_csr())
}

fn sym_grad_form(dm: &DofMap, mu: f64, lambda: f64, xi: f64) -> Result<SparseMatrix, AssemblyError> {
    let b = LocalBasis::of(dm);
    let n = b.len();
    let deg = volume_degree(dm.kind(), dm.kind());
    assemble_cells(dm, dm, deg, |_, cv, _, local| {
        for q in 0..cv.n_points() {
            let w = cv.jxw[q];
            for i in 0..n {
                let gi = b.grad(cv, q, i);
                let di = gi[0][0] + gi[1][1];
                let vi = b.value(cv, q, i);
                for j in 0..n {
                    let gj = b.grad(cv, q, j);
                    // 2 mu D(u):D(v) = mu sum (g_cd + g_dc) v_cd
                    let mut s = 0.0;
                    for c in 0..2 {
                        for d in 0..2 {
                            s += (gj[c][d] + gj[d][c]) * gi[c][d];
                        }
                    }
                    let mut val = mu * s;
                    if lambda != 0.0 {
                        val += lambda * (gj[0][0] + gj[1][1]) * di;
                    }
                    if xi != 0.0 {
                        let vj = b.value(cv, q, j);
                        val += xi * (vj[0] * vi[0] + vj[1] * vi[1]);
                    }
                    local[i * n + j] += w * val;
                }
            }
        }
    })
}

/// `(2 mu_f D(u), D(v))` on a vector H1 space.
pub fn assemble_af(dm: &DofMap, mu_f: f64) -> Result<SparseMatrix, AssemblyError> {
    sym_grad_form(dm, mu_f, 0.0, 0.0)
}

/// `(2 mu_p D(u), D(v)) + (lambda_p div u, div v) + (xi u, v)`.
pub fn assemble_ape(dm: &DofMap, mu_p: f64, lambda_p: f64, xi: f64) -> Result<SparseMatrix, AssemblyError> {
    sym_grad_form(dm, mu_p, lambda_p, xi)
}

/// `(mu_f K^{-1} u, v)` on an H(div) space.
pub fn assemble_apd(dm: &DofMap, mu_f: f64, k_inv: [[f64; 2]; 2]) -> Result<SparseMatrix, AssemblyError> {
    weighted_vector_mass(dm, [[mu_f * k_inv[0][0], mu_f * k_inv[0][1]], [mu_f * k_inv[1][0], mu_f * k_inv[1][1]]])
}

fn weighted_vector_mass(dm: &DofMap, m: [[f64; 2]; 2]) -> Result<SparseMatrix, AssemblyError> {
    let b = LocalBasis::of(dm);
    let n = b.len();
    let deg = volume_degree(dm.kind(), dm.kind());
    assemble_cells(dm, dm, deg, |_, cv, _, local| {
        for q in 0..cv.n_points() {
            let w = cv.jxw[q];
            for i in 0..n {
                let vi = b.value(cv, q, i);
                for j in 0..n {
                    let vj = b.value(cv, q, j);
                    let mv = [m[0][0] * vj[0] + m[0][1] * vj[1], m[1][0] * vj[0] + m[1][1] * vj[1]];
                    local[i * n + j] += w * (mv[0] * vi[0] + mv[1] * vi[1]);
                }
            }
        }
    })
}

/// `density (u, v)` for a vector space (Lagrange or RT).
pub fn assemble_vector_mass(dm: &DofMap, density: f64) -> Result<SparseMatrix, AssemblyError> {
    weighted_vector_mass(dm, [[density, 0.0], [0.0, density]])
}

/// `density (p, w)` for a scalar space.
pub fn assemble_scalar_mass(dm: &DofMap, density: f64) -> Result<SparseMatrix, AssemblyError> {
    let b = LocalBasis::of(dm);
    let n = b.len();
    let deg = volume_degree(dm.kind(), dm.kind());
    assemble_cells(dm, dm, deg, |_, cv, _, local| {
        for q in 0..cv.n_points() {
            let w = density * cv.jxw[q];
            for i in 0..n {
                let vi = b.scalar(cv, q, i);
                for j in 0..n {
                    local[i * n + j] += w * vi * b.scalar(cv, q, j);
                }
            }
        }
    })
}

/// Mass matrix of any space scaled by `density`.
pub fn assemble_mass(dm: &DofMap, density: f64) -> Result<SparseMatrix, AssemblyError> {
    if dm.kind().is_rt() || dm.components() == 2 {
        assemble_vector_mass(dm, density)
    } else {
        assemble_scalar_mass(dm, density)
    }
}

/// `b(v, w) = -(div v, w)`; rows are scalar test dofs, columns vector dofs.
pub fn assemble_b(vector: &DofMap, scalar: &DofMap) -> Result<SparseMatrix, AssemblyError> {
    let (bv, bs) = (LocalBasis::of(vector), LocalBasis::of(scalar));
    let (nv, ns) = (bv.len(), bs.len());
    let deg = volume_degree(vector.kind(), scalar.kind());
    assemble_cells(scalar, vector, deg, |_, cs, cvv, local| {
        for q in 0..cs.n_points() {
            let w = cs.jxw[q];
            for i in 0..ns {
                let wi = bs.scalar(cs, q, i);
                for j in 0..nv {
                    local[i * nv + j] -= w * wi * bv.div(cvv, q, j);
                }
            }
        }
    })
}

/// Stokes-like projection `S u`: `a_f(S u, v) + b_f(v, r) = a_f(u, v)` and
/// `b_f(S u, w) = b_f(u, w)` for all discrete `v` vanishing on `dirichlet`
/// and all `w`, with `S u` equal to the interpolant of `u` on `dirichlet`.
pub fn stokes_projection(
    velocity: &DofMap,
    pressure: &DofMap,
    mu_f: f64,
    dirichlet: &[BoundaryTag],
    u: impl Fn(Point2) -> [f64; 2],
    grad_u: impl Fn(Point2) -> [[f64; 2]; 2],
) -> Result<Vec<f64>, AssemblyError> {
    let (nu, np) = (velocity.n_dofs(), pressure.n_dofs());
    let a = assemble_af(velocity, mu_f)?;
    let b = assemble_b(velocity, pressure)?;
    let mut t = Triplets::new(nu + np, nu + np);
    t.push_matrix(&a, 0, 0, 1.0);
    t.push_transpose(&b, 0, nu, 1.0);
    t.push_matrix(&b, nu, 0, 1.0);
    let mut k = t.into_csr();

    let mut rhs = vec![0.0; nu + np];
    let degree = (2 * velocity.kind().degree() + 4).min(MAX_DEGREE);
    let rule = triangle_rule(degree).expect("degree within supported range");
    let (tv, tp) = (Tabulation::from_rule(velocity.kind(), &rule), Tabulation::from_rule(pressure.kind(), &rule));
    let (bv, bp) = (LocalBasis::of(velocity), LocalBasis::of(pressure));
    let (mut cv, mut cp) = (CellValues::default(), CellValues::default());
    let (mut gv, mut gp) = (Vec::new(), Vec::new());
    for cell in 0..velocity.mesh().n_cells() {
        let geom = velocity.geometry(cell)?;
        cv.reinit(&tv, &geom, velocity.cell_signs(cell));
        cp.reinit(&tp, &geom, pressure.cell_signs(cell));
        bv.globals(velocity, cell, &mut gv);
        bp.globals(pressure, cell, &mut gp);
        for q in 0..cv.n_points() {
            let w = cv.jxw[q];
            let g = grad_u(geom.map(rule.points[q]));
            for (i, &gi) in gv.iter().enumerate() {
                let phi = bv.grad(&cv, q, i);
                let mut s = 0.0;
                for c in 0..2 {
                    for d in 0..2 {
                        s += (g[c][d] + g[d][c]) * phi[c][d];
                    }
                }
                rhs[gi] += w * mu_f * s;
            }
            let div = g[0][0] + g[1][1];
            for (j, &gj) in gp.iter().enumerate() {
                rhs[nu + gj] -= w * div * bp.scalar(&cp, q, j);
            }
        }
    }

    let mut bc = EssentialBc::new(nu);
    essential_bc_mask(velocity, dirichlet, Components::Both, |p, _| u(p), 0.0, &mut bc)?;
    let mut mask = bc.mask;
    let mut values = bc.values;
    mask.resize(nu + np, false);
    values.resize(nu + np, 0.0);
    apply_dirichlet(&mut k, &mut rhs, &mask, &values)?;
    let (x, _) = DirectSolver::new().solve(&k, &rhs)?;
    Ok(x[..nu].to_vec())
}

/// `rho (w . grad u, v)` with `w` a coefficient vector of the same space.
///
/// Quadrature degree `3k` integrates the trilinear integrand exactly for
/// polynomial bases of degree `k`.
pub fn assemble_convection(dm: &DofMap, w_prev: &[f64], rho: f64) -> Result<SparseMatrix, AssemblyError> {
    if w_prev.len() != dm.n_dofs() {
        return Err(AssemblyError::Dimension(format!(
            "convection field has {} entries, space has {}",
            w_prev.len(),
            dm.n_dofs()
        )));
    }
    let b = LocalBasis::of(dm);
    let n = b.len();
    let deg = (3 * dm.kind().degree()).clamp(1, MAX_DEGREE);
    let mut glob = Vec::new();
    assemble_cells(dm, dm, deg, |cell, cv, _, local| {
        b.globals(dm, cell, &mut glob);
        for q in 0..cv.n_points() {
            let mut w = [0.0; 2];
            for (a, &g) in glob.iter().enumerate() {
                let v = b.value(cv, q, a);
                w[0] += w_prev[g] * v[0];
                w[1] += w_prev[g] * v[1];
            }
            let jw = rho * cv.jxw[q];
            for i in 0..n {
                let vi = b.value(cv, q, i);
                for j in 0..n {
                    let gj = b.grad(cv, q, j);
                    let adv = [gj[0][0] * w[0] + gj[0][1] * w[1], gj[1][0] * w[0] + gj[1][1] * w[1]];
                    local[i * n + j] += jw * (adv[0] * vi[0] + adv[1] * vi[1]);
                }
            }
        }
    })
}

/// Gram matrix of the full H1 inner product `(u, v) + (grad u, grad v)`.
pub fn h1_gram(dm: &DofMap) -> Result<SparseMatrix, AssemblyError> {
    let b = LocalBasis::of(dm);
    let n = b.len();
    let deg = volume_degree(dm.kind(), dm.kind());
    assemble_cells(dm, dm, deg, |_, cv, _, local| {
        for q in 0..cv.n_points() {
            let w = cv.jxw[q];
            for i in 0..n {
                let (vi, gi) = (b.value(cv, q, i), b.grad(cv, q, i));
                for j in 0..n {
                    let (vj, gj) = (b.value(cv, q, j), b.grad(cv, q, j));
                    let mut s = vi[0] * vj[0] + vi[1] * vj[1];
                    for c in 0..2 {
                        for d in 0..2 {
                            s += gi[c][d] * gj[c][d];
                        }
                    }
                    local[i * n + j] += w * s;
                }
            }
        }
    })
}

/// Gram matrix of the H(div) inner product `(u, v) + (div u, div v)`.
pub fn hdiv_gram(dm: &DofMap) -> Result<SparseMatrix, AssemblyError> {
    let b = LocalBasis::of(dm);
    let n = b.len();
    let deg = volume_degree(dm.kind(), dm.kind());
    assemble_cells(dm, dm, deg, |_, cv, _, local| {
        for q in 0..cv.n_points() {
            let w = cv.jxw[q];
            for i in 0..n {
                let (vi, di) = (b.value(cv, q, i), b.div(cv, q, i));
                for j in 0..n {
                    let (vj, dj) = (b.value(cv, q, j), b.div(cv, q, j));
                    local[i * n + j] += w * (vi[0] * vj[0] + vi[1] * vj[1] + di * dj);
                }
            }
        }
    })
}
