//! Interface forms: BJS friction and the multiplier couplings.

use crate::fem::{edge_reference_point, CellValues, DofMap, ElementKind, MultiplierSpace, Tabulation};
use crate::linalg::{SparseMatrix, Triplets};
use crate::mesh::{CoupledMesh, InterfaceEdge};
use crate::quadrature::{edge_rule, EdgeRule, MAX_DEGREE};

use super::forms::LocalBasis;
use super::{AssemblyError, ProblemCoefficients};

/// BJS blocks with signs included: the joint matrix
/// `[[ff, fe], [ef, ee]]` represents `a_BJS(u, eta; v, xi)`.
#[derive(Debug, Clone)]
pub struct BjsBlocks {
    pub ff: SparseMatrix,
    pub fe: SparseMatrix,
    pub ef: SparseMatrix,
    pub ee: SparseMatrix,
}

/// Rows are multiplier dofs; `l_f` pairs with `v_f . n_f`, `l_p` and `l_e`
/// with `v_p . n_p` and `xi . n_p`.
#[derive(Debug, Clone)]
pub struct BGammaBlocks {
    pub l_f: SparseMatrix,
    pub l_p: SparseMatrix,
    pub l_e: SparseMatrix,
}

fn trace_degree(kind: ElementKind) -> usize {
    match kind {
        ElementKind::P1Bubble => 1,
        k => k.degree(),
    }
}

/// Edge rule exact for products of the traces involved and of degree at
/// least `2 k + 2` for multiplier degree `k`.
pub fn interface_edge_rule(fluid: ElementKind, solid: ElementKind, multiplier_degree: usize) -> EdgeRule {
    let d = (2 * multiplier_degree + 2).max(2 * trace_degree(fluid)).max(2 * trace_degree(solid));
    edge_rule(d.min(MAX_DEGREE)).expect("degree within supported range")
}

/// Global index and physical value of every local basis function of `cell`
/// at parameter `s` along the segment from vertex `va` to vertex `vb`.
pub fn trace_values(dm: &DofMap, cell: usize, va: usize, vb: usize, s: f64) -> Result<Vec<(usize, [f64; 2])>, AssemblyError> {
    let r = edge_reference_point(dm.mesh(), cell, va, vb, s);
    let tab = Tabulation::at_point(dm.kind(), r);
    let geom = dm.geometry(cell)?;
    let mut cv = CellValues::default();
    cv.reinit(&tab, &geom, dm.cell_signs(cell));
    let b = LocalBasis::of(dm);
    let mut glob = Vec::new();
    b.globals(dm, cell, &mut glob);
    Ok(glob.iter().enumerate().map(|(a, &g)| (g, b.value(&cv, 0, a))).collect())
}

fn fluid_trace(dm: &DofMap, e: &InterfaceEdge, s: f64) -> Result<Vec<(usize, [f64; 2])>, AssemblyError> {
    trace_values(dm, e.fluid_cell, e.fluid_vertices[0], e.fluid_vertices[1], s)
}

fn poro_trace(dm: &DofMap, e: &InterfaceEdge, s: f64) -> Result<Vec<(usize, [f64; 2])>, AssemblyError> {
    trace_values(dm, e.poro_cell, e.poro_vertices[0], e.poro_vertices[1], s)
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `sum_e int_e gamma [(u - eta) . tau][(v - xi) . tau]` with
/// `gamma = mu_f alpha_BJS / sqrt(tau^T K tau)`.
pub fn assemble_bjs(
    uf: &DofMap,
    eta: &DofMap,
    coeffs: &ProblemCoefficients,
    mesh: &CoupledMesh,
    rule: &EdgeRule,
) -> Result<BjsBlocks, AssemblyError> {
    let (nf, ne) = (uf.n_dofs(), eta.n_dofs());
    let mut ff = Triplets::new(nf, nf);
    let mut fe = Triplets::new(nf, ne);
    let mut ef = Triplets::new(ne, nf);
    let mut ee = Triplets::new(ne, ne);
    for (k, e) in mesh.interface.iter().enumerate() {
        let kt = coeffs.k_tangential(e.tangent_f);
        if !(kt > 0.0) {
            return Err(AssemblyError::Coefficient(format!("tau^T K tau = {kt} on interface edge {k}")));
        }
        let gamma = coeffs.mu_f * coeffs.alpha_bjs / kt.sqrt();
        let tau = e.tangent_f;
        for (s, w) in rule.iter() {
            let jw = gamma * w * e.length;
            let tf: Vec<(usize, f64)> = fluid_trace(uf, e, s[0])?.into_iter().map(|(g, v)| (g, dot(v, tau))).collect();
            let te: Vec<(usize, f64)> = poro_trace(eta, e, s[0])?.into_iter().map(|(g, v)| (g, dot(v, tau))).collect();
            for &(gi, vi) in &tf {
                for &(gj, vj) in &tf {
                    ff.push(gi, gj, jw * vi * vj);
                }
                for &(gj, vj) in &te {
                    fe.push(gi, gj, -jw * vi * vj);
                }
            }
            for &(gi, vi) in &te {
                for &(gj, vj) in &tf {
                    ef.push(gi, gj, -jw * vi * vj);
                }
                for &(gj, vj) in &te {
                    ee.push(gi, gj, jw * vi * vj);
                }
            }
        }
    }
    Ok(BjsBlocks { ff: ff.into_csr(), fe: fe.into_csr(), ef: ef.into_csr(), ee: ee.into_csr() })
}

/// `<v_f . n_f + (xi + v_p) . n_p, mu>` split into its three blocks.
pub fn assemble_bgamma(
    uf: &DofMap,
    up: &DofMap,
    eta: &DofMap,
    lambda: &MultiplierSpace,
    mesh: &CoupledMesh,
    rule: &EdgeRule,
) -> Result<BGammaBlocks, AssemblyError> {
    if lambda.n_edges != mesh.interface.len() {
        return Err(AssemblyError::Dimension(format!(
            "multiplier space has {} edges, interface has {}",
            lambda.n_edges,
            mesh.interface.len()
        )));
    }
    let nl = lambda.n_dofs();
    let mut lf = Triplets::new(nl, uf.n_dofs());
    let mut lp = Triplets::new(nl, up.n_dofs());
    let mut le = Triplets::new(nl, eta.n_dofs());
    for (k, e) in mesh.interface.iter().enumerate() {
        for (s, w) in rule.iter() {
            let jw = w * e.length;
            let mu = lambda.basis(s[0]);
            let blocks: [(&DofMap, bool, [f64; 2], &mut Triplets); 3] =
                [(uf, true, e.normal_f, &mut lf), (up, false, e.normal_p, &mut lp), (eta, false, e.normal_p, &mut le)];
            for (dm, fluid, n, trip) in blocks {
                let tr = if fluid { fluid_trace(dm, e, s[0])? } else { poro_trace(dm, e, s[0])? };
                for (g, v) in tr {
                    let vn = dot(v, n);
                    for (m, &mv) in mu.iter().enumerate().take(lambda.per_edge()) {
                        trip.push(lambda.dof(k, m), g, jw * mv * vn);
                    }
                }
            }
        }
    }
    Ok(BGammaBlocks { l_f: lf.into_csr(), l_p: lp.into_csr(), l_e: le.into_csr() })
}

/// `L2(Gamma)` mass matrix of the multiplier space.
pub fn assemble_multiplier_mass(lambda: &MultiplierSpace, mesh: &CoupledMesh) -> SparseMatrix {
    let mut t = Triplets::new(lambda.n_dofs(), lambda.n_dofs());
    for (e, edge) in mesh.interface.iter().enumerate().take(lambda.n_edges) {
        let h = edge.length;
        if lambda.degree == 0 {
            t.push(lambda.dof(e, 0), lambda.dof(e, 0), h);
        } else {
            // Mass matrix of (1-s, s) on [0,1].
            for a in 0..2 {
                for b in 0..2 {
                    let m = if a == b { 1.0 / 3.0 } else { 1.0 / 6.0 };
                    t.push(lambda.dof(e, a), lambda.dof(e, b), h * m);
                }
            }
        }
    }
    t.into_csr()
}
