//! Linear forms: volume sources and natural boundary data.

use crate::fem::{CellValues, DofMap, Tabulation};
use crate::mesh::{BoundaryTag, Point2, LOCAL_EDGES};
use crate::quadrature::{edge_rule, triangle_rule, MAX_DEGREE};

use super::forms::LocalBasis;
use super::interface::trace_values;
use super::{AssemblyError, BoundaryConditions, Sources, Spaces};

/// Load vectors of each field at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsVectors {
    /// `(f_f, v_f)` plus boundary tractions.
    pub uf: Vec<f64>,
    /// `(q_f, w_f)`
    pub pf: Vec<f64>,
    /// `-<p_bc, v_p . n>` on natural Darcy boundaries.
    pub up: Vec<f64>,
    /// `(q_p, w_p)`
    pub pp: Vec<f64>,
    /// `(f_p, xi_p)`
    pub eta: Vec<f64>,
}

fn source_degree(dm: &DofMap) -> usize {
    (dm.kind().degree() + 6).min(MAX_DEGREE)
}

/// `(f, v)` for a vector or scalar space; scalar spaces use component 0.
pub(crate) fn load_vector(dm: &DofMap, f: impl Fn(Point2) -> [f64; 2]) -> Result<Vec<f64>, AssemblyError> {
    let rule = triangle_rule(source_degree(dm)).expect("supported degree");
    let tab = Tabulation::from_rule(dm.kind(), &rule);
    let b = LocalBasis::of(dm);
    let vector = dm.kind().is_rt() || dm.components() == 2;
    let mut out = vec![0.0; dm.n_dofs()];
    let mut cv = CellValues::default();
    let mut glob = Vec::new();
    for cell in 0..dm.mesh().n_cells() {
        let geom = dm.geometry(cell)?;
        cv.reinit(&tab, &geom, dm.cell_signs(cell));
        b.globals(dm, cell, &mut glob);
        for q in 0..cv.n_points() {
            let fv = f(geom.map(tab.points[q]));
            let w = cv.jxw[q];
            for (a, &g) in glob.iter().enumerate() {
                out[g] += w * if vector {
                    let v = b.value(&cv, q, a);
                    fv[0] * v[0] + fv[1] * v[1]
                } else {
                    fv[0] * b.scalar(&cv, q, a)
                };
            }
        }
    }
    Ok(out)
}

/// Adds `int_e g(tag, x, n) . v ds` over boundary edges with one of `tags`.
pub(crate) fn add_boundary_load(
    dm: &DofMap,
    tags: &[BoundaryTag],
    degree: usize,
    g: impl Fn(BoundaryTag, Point2, [f64; 2]) -> [f64; 2],
    out: &mut [f64],
) -> Result<(), AssemblyError> {
    if tags.is_empty() {
        return Ok(());
    }
    let mesh = dm.mesh();
    let rule = edge_rule(degree.min(MAX_DEGREE)).expect("supported degree");
    for (edge, cell, l) in mesh.tagged_edges(tags) {
        let tag = mesh.topology().edge_tag(edge).expect("tagged edge");
        let tri = mesh.triangles[cell];
        let [a, b] = LOCAL_EDGES[l];
        let (va, vb) = (tri[a], tri[b]);
        let (pa, pb) = (mesh.vertices[va], mesh.vertices[vb]);
        let len = pa.distance(pb);
        let n = mesh.outward_normal(cell, l);
        for (s, w) in rule.iter() {
            let x = Point2::new(pa.x + s[0] * (pb.x - pa.x), pa.y + s[0] * (pb.y - pa.y));
            let gv = g(tag, x, n);
            for (dof, v) in trace_values(dm, cell, va, vb, s[0])? {
                out[dof] += w * len * (gv[0] * v[0] + gv[1] * v[1]);
            }
        }
    }
    Ok(())
}

/// All load vectors at time `t`.
pub fn assemble_rhs(spaces: &Spaces, bcs: &BoundaryConditions, sources: &dyn Sources, t: f64) -> Result<RhsVectors, AssemblyError> {
    let mut uf = load_vector(&spaces.uf, |p| sources.fluid_force(p, t))?;
    let pf = load_vector(&spaces.pf, |p| [sources.fluid_mass(p, t), 0.0])?;
    let pp = load_vector(&spaces.pp, |p| [sources.darcy_source(p, t), 0.0])?;
    let eta = load_vector(&spaces.eta, |p| sources.solid_force(p, t))?;
    let mut up = vec![0.0; spaces.up.n_dofs()];
    let deg_f = 2 * spaces.uf.kind().degree() + 4;
    add_boundary_load(&spaces.uf, &bcs.fluid_traction, deg_f, |tag, x, n| sources.fluid_traction(tag, x, n, t), &mut uf)?;
    let deg_p = 2 * spaces.up.kind().degree() + 4;
    add_boundary_load(
        &spaces.up,
        &bcs.darcy_pressure,
        deg_p,
        |tag, x, n| {
            let p = sources.darcy_pressure(tag, x, t);
            [-p * n[0], -p * n[1]]
        },
        &mut up,
    )?;
    Ok(RhsVectors { uf, pf, up, pp, eta })
}
