//! Finite element spaces: reference elements, affine/Piola maps, DOF maps,
//! essential boundary data, interpolation and the interface multiplier space.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{BoundaryTag, Point2, SubMesh, LOCAL_EDGES};
use crate::quadrature::{edge_rule, triangle_rule, TriangleRule};

pub mod reference;

use reference::{rt_reference_basis, rt_reference_dofs, scalar_basis, REF_VERTICES};

#[derive(Debug, Error, PartialEq)]
pub enum FemError {
    #[error("{kind:?} cannot be built with vector={vector}")]
    Incompatible { kind: ElementKind, vector: bool },
    #[error("degenerate element {cell} (det J = {det:e})")]
    Degenerate { cell: usize, det: f64 },
    #[error("point ({x}, {y}) lies outside element {cell}")]
    OutsideElement { cell: usize, x: f64, y: f64 },
    #[error("{0:?} has no boundary degrees of freedom for essential data")]
    NoTraceDofs(ElementKind),
    #[error("coefficient vector has length {got}, expected {expected}")]
    Dimension { got: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElementKind {
    P0,
    P1,
    P1Bubble,
    P2,
    P1dc,
    RT0,
    RT1,
}

impl ElementKind {
    /// Local degrees of freedom per component.
    pub fn local_dofs(self) -> usize {
        match self {
            ElementKind::P0 => 1,
            ElementKind::P1 | ElementKind::P1dc | ElementKind::RT0 => 3,
            ElementKind::P1Bubble => 4,
            ElementKind::P2 => 6,
            ElementKind::RT1 => 8,
        }
    }

    /// Highest total polynomial degree of the basis functions.
    pub fn degree(self) -> usize {
        match self {
            ElementKind::P0 => 0,
            ElementKind::P1 | ElementKind::P1dc | ElementKind::RT0 => 1,
            ElementKind::P2 | ElementKind::RT1 => 2,
            ElementKind::P1Bubble => 3,
        }
    }

    /// Degree of the normal trace (RT) or of the polynomial space (scalar kinds).
    pub fn order(self) -> usize {
        match self {
            ElementKind::P0 | ElementKind::RT0 => 0,
            ElementKind::P1 | ElementKind::P1dc | ElementKind::P1Bubble | ElementKind::RT1 => 1,
            ElementKind::P2 => 2,
        }
    }

    pub fn is_rt(self) -> bool {
        matches!(self, ElementKind::RT0 | ElementKind::RT1)
    }

    pub fn is_continuous(self) -> bool {
        matches!(self, ElementKind::P1 | ElementKind::P1Bubble | ElementKind::P2)
    }

    /// Local dofs living on local edge `l` (the edge opposite local vertex `l`).
    pub fn edge_local_dofs(self, l: usize) -> Vec<usize> {
        let [a, b] = LOCAL_EDGES[l];
        match self {
            ElementKind::P1 | ElementKind::P1Bubble => vec![a, b],
            ElementKind::P2 => vec![a, b, 3 + l],
            ElementKind::RT0 => vec![l],
            ElementKind::RT1 => vec![2 * l, 2 * l + 1],
            ElementKind::P0 | ElementKind::P1dc => Vec::new(),
        }
    }
}

/// Affine map `x = origin + J x_hat` of a triangle.
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry {
    pub origin: Point2,
    /// `jac[r][c]`
    pub jac: [[f64; 2]; 2],
    pub det: f64,
    pub inv: [[f64; 2]; 2],
}

impl CellGeometry {
    pub fn new(cell: usize, p: [Point2; 3]) -> Result<Self, FemError> {
        let jac = [[p[1].x - p[0].x, p[2].x - p[0].x], [p[1].y - p[0].y, p[2].y - p[0].y]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !(det > 0.0) || !det.is_finite() {
            return Err(FemError::Degenerate { cell, det });
        }
        let inv = [[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]];
        Ok(Self { origin: p[0], jac, det, inv })
    }

    pub fn of_cell(mesh: &SubMesh, cell: usize) -> Result<Self, FemError> {
        Self::new(cell, mesh.cell_points(cell))
    }

    pub fn map(&self, r: [f64; 2]) -> Point2 {
        Point2::new(
            self.origin.x + self.jac[0][0] * r[0] + self.jac[0][1] * r[1],
            self.origin.y + self.jac[1][0] * r[0] + self.jac[1][1] * r[1],
        )
    }

    pub fn inverse_map(&self, p: Point2) -> [f64; 2] {
        let (dx, dy) = (p.x - self.origin.x, p.y - self.origin.y);
        [self.inv[0][0] * dx + self.inv[0][1] * dy, self.inv[1][0] * dx + self.inv[1][1] * dy]
    }

    /// Physical gradient of a scalar from its reference gradient: `J^{-T} g`.
    pub fn grad(&self, g: [f64; 2]) -> [f64; 2] {
        [self.inv[0][0] * g[0] + self.inv[1][0] * g[1], self.inv[0][1] * g[0] + self.inv[1][1] * g[1]]
    }
}

/// Contravariant Piola transform of a reference vector value: `J v / det J`.
pub fn piola_map(g: &CellGeometry, v: [f64; 2]) -> [f64; 2] {
    [
        (g.jac[0][0] * v[0] + g.jac[0][1] * v[1]) / g.det,
        (g.jac[1][0] * v[0] + g.jac[1][1] * v[1]) / g.det,
    ]
}

/// Divergence under the Piola transform: `div v / det J`.
pub fn piola_div(g: &CellGeometry, d: f64) -> f64 {
    d / g.det
}

/// Gradient under the Piola transform: `J G J^{-1} / det J`.
pub fn piola_grad(g: &CellGeometry, gr: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut jg = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            jg[r][c] = g.jac[r][0] * gr[0][c] + g.jac[r][1] * gr[1][c];
        }
    }
    let mut out = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = (jg[r][0] * g.inv[0][c] + jg[r][1] * g.inv[1][c]) / g.det;
        }
    }
    out
}

/// Reference basis tabulated at quadrature points.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub kind: ElementKind,
    pub ndof: usize,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    /// Scalar kinds: `vals[q * ndof + i]`.
    pub vals: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
    /// RT kinds.
    pub vvals: Vec<[f64; 2]>,
    pub vgrads: Vec<[[f64; 2]; 2]>,
    pub divs: Vec<f64>,
}

impl Tabulation {
    pub fn new(kind: ElementKind, points: Vec<[f64; 2]>, weights: Vec<f64>) -> Self {
        let n = kind.local_dofs();
        let nq = points.len();
        let mut t = Tabulation {
            kind,
            ndof: n,
            points,
            weights,
            vals: Vec::new(),
            grads: Vec::new(),
            vvals: Vec::new(),
            vgrads: Vec::new(),
            divs: Vec::new(),
        };
        if kind.is_rt() {
            t.vvals = vec![[0.0; 2]; nq * n];
            t.vgrads = vec![[[0.0; 2]; 2]; nq * n];
            t.divs = vec![0.0; nq * n];
            for q in 0..nq {
                let r = q * n..(q + 1) * n;
                rt_reference_basis(kind, t.points[q], &mut t.vvals[r.clone()], &mut t.vgrads[r.clone()], &mut t.divs[r]);
            }
        } else {
            t.vals = vec![0.0; nq * n];
            t.grads = vec![[0.0; 2]; nq * n];
            for q in 0..nq {
                let r = q * n..(q + 1) * n;
                scalar_basis(kind, t.points[q], &mut t.vals[r.clone()], &mut t.grads[r]);
            }
        }
        t
    }

    pub fn from_rule(kind: ElementKind, rule: &TriangleRule) -> Self {
        Self::new(kind, rule.points.clone(), rule.weights.clone())
    }

    pub fn at_point(kind: ElementKind, p: [f64; 2]) -> Self {
        Self::new(kind, vec![p], vec![1.0])
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }
}

/// Physical basis values on one cell, signs applied.
#[derive(Debug, Clone, Default)]
pub struct CellValues {
    pub ndof: usize,
    pub jxw: Vec<f64>,
    pub vals: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
    pub vvals: Vec<[f64; 2]>,
    pub vgrads: Vec<[[f64; 2]; 2]>,
    pub divs: Vec<f64>,
}

impl CellValues {
    pub fn reinit(&mut self, tab: &Tabulation, geom: &CellGeometry, signs: &[f64]) {
        let n = tab.ndof;
        let nq = tab.n_points();
        self.ndof = n;
        self.jxw.clear();
        self.jxw.extend(tab.weights.iter().map(|w| w * geom.det));
        if tab.kind.is_rt() {
            self.vvals.resize(nq * n, [0.0; 2]);
            self.vgrads.resize(nq * n, [[0.0; 2]; 2]);
            self.divs.resize(nq * n, 0.0);
            for q in 0..nq {
                for i in 0..n {
                    let k = q * n + i;
                    let s = signs[i];
                    let v = piola_map(geom, tab.vvals[k]);
                    self.vvals[k] = [s * v[0], s * v[1]];
                    let g = piola_grad(geom, tab.vgrads[k]);
                    self.vgrads[k] = [[s * g[0][0], s * g[0][1]], [s * g[1][0], s * g[1][1]]];
                    self.divs[k] = s * piola_div(geom, tab.divs[k]);
                }
            }
        } else {
            self.vals.clear();
            self.vals.extend_from_slice(&tab.vals);
            self.grads.resize(nq * n, [0.0; 2]);
            for k in 0..nq * n {
                self.grads[k] = geom.grad(tab.grads[k]);
            }
        }
    }

    pub fn n_points(&self) -> usize {
        self.jxw.len()
    }
}

/// Global numbering of a finite element space on one submesh.
///
/// Vector Lagrange spaces are stored component-blocked: dof `i` of component
/// `c` has global index `c * n_scalar + i`.
#[derive(Debug, Clone)]
pub struct DofMap {
    kind: ElementKind,
    mesh: Arc<SubMesh>,
    components: usize,
    n_scalar: usize,
    cell_dofs: Vec<usize>,
    cell_signs: Vec<f64>,
}

pub fn build_space(mesh: &Arc<SubMesh>, kind: ElementKind, vector: bool) -> Result<DofMap, FemError> {
    if kind.is_rt() != vector && (kind.is_rt() || kind == ElementKind::P0 || kind == ElementKind::P1dc) {
        return Err(FemError::Incompatible { kind, vector });
    }
    let topo = mesh.topology();
    let (nv, ne, nc) = (mesh.n_vertices(), topo.n_edges(), mesh.n_cells());
    let n = kind.local_dofs();
    let mut cell_dofs = Vec::with_capacity(n * nc);
    let mut cell_signs = vec![1.0; n * nc];
    for c in 0..nc {
        let t = mesh.triangles[c];
        let ce = topo.cell_edges[c];
        match kind {
            ElementKind::P0 => cell_dofs.push(c),
            ElementKind::P1 => cell_dofs.extend_from_slice(&t),
            ElementKind::P1Bubble => {
                cell_dofs.extend_from_slice(&t);
                cell_dofs.push(nv + c);
            }
            ElementKind::P2 => {
                cell_dofs.extend_from_slice(&t);
                cell_dofs.extend(ce.iter().map(|e| nv + e));
            }
            ElementKind::P1dc => cell_dofs.extend((0..3).map(|i| 3 * c + i)),
            ElementKind::RT0 | ElementKind::RT1 => {
                let per_edge = if kind == ElementKind::RT0 { 1 } else { 2 };
                for l in 0..3 {
                    let (ns, ps) = edge_signs(&t, l);
                    for k in 0..per_edge {
                        cell_dofs.push(per_edge * ce[l] + k);
                        cell_signs[c * n + per_edge * l + k] = if k == 0 { ns } else { ns * ps };
                    }
                }
                if kind == ElementKind::RT1 {
                    cell_dofs.push(2 * ne + 2 * c);
                    cell_dofs.push(2 * ne + 2 * c + 1);
                }
            }
        }
    }
    let n_scalar = match kind {
        ElementKind::P0 => nc,
        ElementKind::P1 => nv,
        ElementKind::P1Bubble => nv + nc,
        ElementKind::P2 => nv + ne,
        ElementKind::P1dc => 3 * nc,
        ElementKind::RT0 => ne,
        ElementKind::RT1 => 2 * ne + 2 * nc,
    };
    let components = if vector && !kind.is_rt() { 2 } else { 1 };
    Ok(DofMap { kind, mesh: Arc::clone(mesh), components, n_scalar, cell_dofs, cell_signs })
}

/// Orientation signs of local edge `l` of triangle `t`: whether the cell's
/// outward normal agrees with the global edge normal (the clockwise rotation
/// of the lower-to-higher vertex direction), and whether the local edge
/// parameter runs from the lower to the higher global vertex.
fn edge_signs(t: &[usize; 3], l: usize) -> (f64, f64) {
    let [a, b] = LOCAL_EDGES[l];
    let ps = if t[a] < t[b] { 1.0 } else { -1.0 };
    // Counter-clockwise traversal is 1->2, 2->0, 0->1; edge 1 runs opposite
    // to its local parameter.
    let ns = if l == 1 { -ps } else { ps };
    (ns, ps)
}

impl DofMap {
    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn mesh(&self) -> &Arc<SubMesh> {
        &self.mesh
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn n_scalar(&self) -> usize {
        self.n_scalar
    }

    pub fn n_dofs(&self) -> usize {
        self.components * self.n_scalar
    }

    pub fn local_dofs(&self) -> usize {
        self.kind.local_dofs()
    }

    /// Scalar dofs of `cell` (component 0).
    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        let n = self.kind.local_dofs();
        &self.cell_dofs[cell * n..(cell + 1) * n]
    }

    pub fn cell_signs(&self, cell: usize) -> &[f64] {
        let n = self.kind.local_dofs();
        &self.cell_signs[cell * n..(cell + 1) * n]
    }

    pub fn global(&self, cell: usize, local: usize, comp: usize) -> usize {
        comp * self.n_scalar + self.cell_dofs(cell)[local]
    }

    pub fn geometry(&self, cell: usize) -> Result<CellGeometry, FemError> {
        CellGeometry::of_cell(&self.mesh, cell)
    }

    fn check_len(&self, coeffs: &[f64]) -> Result<(), FemError> {
        if coeffs.len() != self.n_dofs() {
            return Err(FemError::Dimension { got: coeffs.len(), expected: self.n_dofs() });
        }
        Ok(())
    }
}

/// Value, gradient (`grad[c][d] = d u_c / d x_d`) and divergence of a field
/// at a point. Scalar fields use component 0.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldValue {
    pub value: [f64; 2],
    pub grad: [[f64; 2]; 2],
    pub div: f64,
}

/// Evaluates a field at a reference point of `cell`.
pub fn eval_reference(dm: &DofMap, coeffs: &[f64], cell: usize, r: [f64; 2]) -> Result<FieldValue, FemError> {
    dm.check_len(coeffs)?;
    let geom = dm.geometry(cell)?;
    let tab = Tabulation::at_point(dm.kind, r);
    let mut cv = CellValues::default();
    cv.reinit(&tab, &geom, dm.cell_signs(cell));
    let mut out = FieldValue::default();
    let dofs = dm.cell_dofs(cell);
    if dm.kind.is_rt() {
        for (i, &g) in dofs.iter().enumerate() {
            let u = coeffs[g];
            for c in 0..2 {
                out.value[c] += u * cv.vvals[i][c];
                for d in 0..2 {
                    out.grad[c][d] += u * cv.vgrads[i][c][d];
                }
            }
            out.div += u * cv.divs[i];
        }
    } else {
        for comp in 0..dm.components {
            for (i, &g) in dofs.iter().enumerate() {
                let u = coeffs[comp * dm.n_scalar + g];
                out.value[comp] += u * cv.vals[i];
                out.grad[comp][0] += u * cv.grads[i][0];
                out.grad[comp][1] += u * cv.grads[i][1];
            }
        }
        out.div = if dm.components == 2 { out.grad[0][0] + out.grad[1][1] } else { 0.0 };
    }
    Ok(out)
}

/// Evaluates a field at a physical point inside `cell` (tolerance 1e-10 in
/// barycentric coordinates).
pub fn eval_field(dm: &DofMap, coeffs: &[f64], cell: usize, p: Point2) -> Result<FieldValue, FemError> {
    let geom = dm.geometry(cell)?;
    let r = geom.inverse_map(p);
    let tol = 1e-10;
    if r[0] < -tol || r[1] < -tol || r[0] + r[1] > 1.0 + tol {
        return Err(FemError::OutsideElement { cell, x: p.x, y: p.y });
    }
    eval_reference(dm, coeffs, cell, r)
}

/// Which components of a vector Lagrange field an essential condition fixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Components {
    Both,
    X,
    Y,
}

impl Components {
    fn includes(self, c: usize) -> bool {
        match self {
            Components::Both => true,
            Components::X => c == 0,
            Components::Y => c == 1,
        }
    }
}

/// Per-dof essential mask with prescribed values.
#[derive(Debug, Clone, PartialEq)]
pub struct EssentialBc {
    pub mask: Vec<bool>,
    pub values: Vec<f64>,
}

impl EssentialBc {
    pub fn new(n: usize) -> Self {
        Self { mask: vec![false; n], values: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Overwrites masked entries of `x` with the prescribed values.
    pub fn apply_to(&self, x: &mut [f64]) {
        for (i, m) in self.mask.iter().enumerate() {
            if *m {
                x[i] = self.values[i];
            }
        }
    }
}

/// Marks the dofs on edges tagged with one of `tags` and stores values
/// computed by the dof functionals of `value_fn` at time `t`.
///
/// Lagrange spaces take point values; Raviart-Thomas spaces take edge
/// moments of `value_fn . n` against the edge weights, with `n` the global
/// edge normal.
pub fn essential_bc_mask(
    dm: &DofMap,
    tags: &[BoundaryTag],
    components: Components,
    value_fn: impl Fn(Point2, f64) -> [f64; 2],
    t: f64,
    bc: &mut EssentialBc,
) -> Result<(), FemError> {
    if bc.len() != dm.n_dofs() {
        return Err(FemError::Dimension { got: bc.len(), expected: dm.n_dofs() });
    }
    let kind = dm.kind;
    if matches!(kind, ElementKind::P0 | ElementKind::P1dc) {
        return Err(FemError::NoTraceDofs(kind));
    }
    let mesh = &dm.mesh;
    for (_, cell, l) in mesh.tagged_edges(tags) {
        let geom = dm.geometry(cell)?;
        if kind.is_rt() {
            let signs = dm.cell_signs(cell);
            let ldofs = rt_local_dofs(kind, &geom, &|p| value_fn(p, t));
            for i in kind.edge_local_dofs(l) {
                let g = dm.global(cell, i, 0);
                bc.mask[g] = true;
                bc.values[g] = signs[i] * ldofs[i];
            }
        } else {
            let pts = lagrange_nodes(kind, &geom);
            for i in kind.edge_local_dofs(l) {
                let v = value_fn(pts[i], t);
                for comp in 0..dm.components {
                    if dm.components == 1 || components.includes(comp) {
                        let g = dm.global(cell, i, comp);
                        bc.mask[g] = true;
                        bc.values[g] = v[comp];
                    }
                }
            }
        }
    }
    Ok(())
}

/// Physical nodes of the vertex/edge Lagrange dofs (bubble slot gets the centroid).
fn lagrange_nodes(kind: ElementKind, geom: &CellGeometry) -> Vec<Point2> {
    let mut pts: Vec<Point2> = REF_VERTICES.iter().map(|&r| geom.map(r)).collect();
    match kind {
        ElementKind::P2 => {
            for [a, b] in LOCAL_EDGES {
                pts.push(pts[a].midpoint(pts[b]));
            }
        }
        ElementKind::P1Bubble => pts.push(geom.map([1.0 / 3.0, 1.0 / 3.0])),
        ElementKind::P0 => {
            pts.clear();
            pts.push(geom.map([1.0 / 3.0, 1.0 / 3.0]));
        }
        _ => {}
    }
    pts
}

/// Local (cell-oriented) RT dofs of a physical vector field.
fn rt_local_dofs(kind: ElementKind, geom: &CellGeometry, f: &dyn Fn(Point2) -> [f64; 2]) -> Vec<f64> {
    // Pull back by the inverse Piola map: v_hat = det J^{-1} f(F(x_hat)).
    let pull = |r: [f64; 2]| {
        let v = f(geom.map(r));
        let d = geom.det;
        [
            d * (geom.inv[0][0] * v[0] + geom.inv[0][1] * v[1]),
            d * (geom.inv[1][0] * v[0] + geom.inv[1][1] * v[1]),
        ]
    };
    rt_reference_dofs(kind, &pull)
}

/// Canonical interpolant: nodal values for Lagrange kinds (cell means for
/// P0, centroid correction for the bubble), moments for Raviart-Thomas.
/// Scalar spaces use component 0 of `f`.
pub fn interpolate(dm: &DofMap, f: impl Fn(Point2) -> [f64; 2]) -> Result<Vec<f64>, FemError> {
    let kind = dm.kind;
    let mut out = vec![0.0; dm.n_dofs()];
    let mean_rule = triangle_rule(6).unwrap();
    for cell in 0..dm.mesh.n_cells() {
        let geom = dm.geometry(cell)?;
        if kind.is_rt() {
            let ldofs = rt_local_dofs(kind, &geom, &f);
            let signs = dm.cell_signs(cell);
            for (i, v) in ldofs.iter().enumerate() {
                out[dm.global(cell, i, 0)] = signs[i] * v;
            }
            continue;
        }
        if kind == ElementKind::P0 {
            for comp in 0..dm.components {
                let mean = 2.0 * mean_rule.integrate(|r| f(geom.map(r))[comp]);
                out[dm.global(cell, 0, comp)] = mean;
            }
            continue;
        }
        let pts = lagrange_nodes(kind, &geom);
        let vals: Vec<[f64; 2]> = pts.iter().map(|&p| f(p)).collect();
        for comp in 0..dm.components {
            for i in 0..kind.local_dofs() {
                let v = if kind == ElementKind::P1Bubble && i == 3 {
                    vals[3][comp] - (vals[0][comp] + vals[1][comp] + vals[2][comp]) / 3.0
                } else {
                    vals[i][comp]
                };
                out[dm.global(cell, i, comp)] = v;
            }
        }
    }
    Ok(out)
}

/// Elementwise L2 projection onto a discontinuous scalar space (P0, P1dc).
pub fn l2_project_discontinuous(dm: &DofMap, f: impl Fn(Point2) -> f64) -> Result<Vec<f64>, FemError> {
    let kind = dm.kind;
    if kind.is_continuous() || kind.is_rt() {
        return Err(FemError::Incompatible { kind, vector: dm.components == 2 });
    }
    let rule = triangle_rule(8).unwrap();
    let tab = Tabulation::from_rule(kind, &rule);
    let n = kind.local_dofs();
    let mut out = vec![0.0; dm.n_dofs()];
    for cell in 0..dm.mesh.n_cells() {
        let geom = dm.geometry(cell)?;
        let mut m = faer::Mat::<f64>::zeros(n, n);
        let mut b = faer::Mat::<f64>::zeros(n, 1);
        for q in 0..tab.n_points() {
            let w = tab.weights[q] * geom.det;
            let fv = f(geom.map(tab.points[q]));
            for i in 0..n {
                let vi = tab.vals[q * n + i];
                b[(i, 0)] += w * fv * vi;
                for j in 0..n {
                    m[(i, j)] += w * vi * tab.vals[q * n + j];
                }
            }
        }
        use faer::linalg::solvers::Solve;
        let x = m.partial_piv_lu().solve(&b);
        for i in 0..n {
            out[dm.global(cell, i, 0)] = x[(i, 0)];
        }
    }
    Ok(out)
}

/// `int_mesh f` by a triangle rule of the given degree (clamped to the
/// supported range).
pub fn integrate(mesh: &SubMesh, degree: usize, f: impl Fn(Point2) -> f64) -> f64 {
    let rule = triangle_rule(degree.clamp(1, crate::quadrature::MAX_DEGREE)).unwrap();
    let mut total = 0.0;
    for cell in 0..mesh.n_cells() {
        let p = mesh.cell_points(cell);
        let det = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y);
        for (r, w) in rule.iter() {
            let x = Point2::new(
                p[0].x + r[0] * (p[1].x - p[0].x) + r[1] * (p[2].x - p[0].x),
                p[0].y + r[0] * (p[1].y - p[0].y) + r[1] * (p[2].y - p[0].y),
            );
            total += w * det.abs() * f(x);
        }
    }
    total
}

/// Reference point of `cell` at parameter `s` along the segment between
/// the cell's vertices `va` and `vb` (global vertex indices).
pub fn edge_reference_point(mesh: &SubMesh, cell: usize, va: usize, vb: usize, s: f64) -> [f64; 2] {
    let t = mesh.triangles[cell];
    let ia = t.iter().position(|&v| v == va).expect("vertex not in cell");
    let ib = t.iter().position(|&v| v == vb).expect("vertex not in cell");
    let (a, b) = (REF_VERTICES[ia], REF_VERTICES[ib]);
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
}

/// Discontinuous polynomials of degree `degree` on each interface edge,
/// parametrized by `s` running from `fluid_vertices[0]` to `fluid_vertices[1]`.
/// Degree 0 uses the constant; degree 1 the nodal pair `(1 - s, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultiplierSpace {
    pub degree: usize,
    pub n_edges: usize,
}

impl MultiplierSpace {
    pub fn new(degree: usize, n_edges: usize) -> Self {
        assert!(degree <= 1, "multiplier degree must be 0 or 1");
        Self { degree, n_edges }
    }

    pub fn per_edge(&self) -> usize {
        self.degree + 1
    }

    pub fn n_dofs(&self) -> usize {
        self.n_edges * self.per_edge()
    }

    pub fn dof(&self, edge: usize, k: usize) -> usize {
        edge * self.per_edge() + k
    }

    pub fn basis(&self, s: f64) -> [f64; 2] {
        if self.degree == 0 {
            [1.0, 0.0]
        } else {
            [1.0 - s, s]
        }
    }

    /// Value of a multiplier field on edge `edge` at parameter `s`.
    pub fn eval(&self, coeffs: &[f64], edge: usize, s: f64) -> f64 {
        let b = self.basis(s);
        (0..self.per_edge()).map(|k| coeffs[self.dof(edge, k)] * b[k]).sum()
    }

    /// Edgewise L2 projection of `f(edge, s)`.
    pub fn project(&self, f: impl Fn(usize, f64) -> f64) -> Vec<f64> {
        let rule = edge_rule(8).unwrap();
        let mut out = vec![0.0; self.n_dofs()];
        for e in 0..self.n_edges {
            if self.degree == 0 {
                out[self.dof(e, 0)] = rule.integrate(|s| f(e, s[0]));
            } else {
                // Mass matrix of (1-s, s) on [0,1] is [[1/3,1/6],[1/6,1/3]].
                let b0 = rule.integrate(|s| f(e, s[0]) * (1.0 - s[0]));
                let b1 = rule.integrate(|s| f(e, s[0]) * s[0]);
                out[self.dof(e, 0)] = 4.0 * b0 - 2.0 * b1;
                out[self.dof(e, 1)] = -2.0 * b0 + 4.0 * b1;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests;
