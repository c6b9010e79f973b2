//! Two-subdomain triangulations with boundary and interface tagging.
//!
//! A [`CoupledMesh`] pairs a fluid [`SubMesh`] with a poroelastic one. The
//! two meshes meet along the interface, whose edges must coincide vertex for
//! vertex in both submeshes.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod io;
mod structured;

pub use io::{read_mesh, read_mesh_str, write_mesh, write_mesh_string};
pub use structured::{build_banded_mesh, build_rectangle_coupled_mesh, Band, DiagonalPattern, RectangleTags};

/// Absolute tolerance (relative to the mesh extent) used when matching interface vertices.
pub const MATCH_TOLERANCE: f64 = 1e-12;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn midpoint(self, other: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(p: [f64; 2]) -> Self {
        Point2::new(p[0], p[1])
    }
}

/// Boundary portion an edge belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundaryTag {
    /// Exterior fluid boundary carrying a velocity condition.
    GammaF,
    /// Exterior poroelastic boundary with Darcy pressure data.
    GammaPD,
    /// Exterior poroelastic boundary with Darcy normal flux data.
    GammaPN,
    /// Fluid/poroelastic interface.
    GammaFP,
    FInlet,
    FOutlet,
    PInlet,
    POutlet,
    PExt,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 9] = [
        BoundaryTag::GammaF,
        BoundaryTag::GammaPD,
        BoundaryTag::GammaPN,
        BoundaryTag::GammaFP,
        BoundaryTag::FInlet,
        BoundaryTag::FOutlet,
        BoundaryTag::PInlet,
        BoundaryTag::POutlet,
        BoundaryTag::PExt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryTag::GammaF => "GammaF",
            BoundaryTag::GammaPD => "GammaPD",
            BoundaryTag::GammaPN => "GammaPN",
            BoundaryTag::GammaFP => "GammaFP",
            BoundaryTag::FInlet => "FInlet",
            BoundaryTag::FOutlet => "FOutlet",
            BoundaryTag::PInlet => "PInlet",
            BoundaryTag::POutlet => "POutlet",
            BoundaryTag::PExt => "PExt",
        }
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundaryTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BoundaryTag::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown boundary tag `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subdomain {
    Fluid,
    Poroelastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("subdivision counts must be at least 1 (got nx={nx}, ny_f={ny_f}, ny_p={ny_p})")]
    ZeroSubdivision { nx: usize, ny_f: usize, ny_p: usize },
    #[error("interface y={interface_y} is not strictly inside ({y0}, {y1})")]
    InterfaceOutside { interface_y: f64, y0: f64, y1: f64 },
    #[error("invalid layout: {0}")]
    Layout(String),
    #[error("vertex index {index} out of range in {what}")]
    IndexOutOfRange { what: String, index: usize },
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("mesh violates {} invariant(s): {}", .0.len(), summarize(.0))]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn summarize(v: &[Violation]) -> String {
    let mut s: Vec<String> = v.iter().take(4).map(|v| v.to_string()).collect();
    if v.len() > 4 {
        s.push(format!("... ({} more)", v.len() - 4));
    }
    s.join("; ")
}

/// Which invariant a [`Violation`] breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    FiniteCoordinates,
    PositiveOrientation,
    Conforming,
    BoundaryEdgeTagged,
    TaggedEdgeOnBoundary,
    InterfaceMatching,
    InterfaceTagged,
    InterfaceNormals,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::FiniteCoordinates => "finite-coordinates",
            Rule::PositiveOrientation => "positive-orientation",
            Rule::Conforming => "conforming",
            Rule::BoundaryEdgeTagged => "boundary-edge-tagged-once",
            Rule::TaggedEdgeOnBoundary => "tagged-edge-on-boundary",
            Rule::InterfaceMatching => "matching-trace",
            Rule::InterfaceTagged => "interface-tagged",
            Rule::InterfaceNormals => "interface-normals",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub entity: String,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {}", self.entity, self.rule, self.detail)
    }
}

/// Edge/cell adjacency derived from the triangle list.
///
/// Local edge `i` of a triangle is the edge opposite local vertex `i`, so the
/// local vertex pairs are `(1,2)`, `(0,2)` and `(0,1)`.
#[derive(Debug, Clone, Default)]
pub struct Topology {
    /// Edges as `(lo, hi)` global vertex pairs.
    pub edges: Vec<[usize; 2]>,
    pub cell_edges: Vec<[usize; 3]>,
    edge_cells: Vec<[usize; 2]>,
    edge_tags: Vec<Option<BoundaryTag>>,
    overshared: Vec<usize>,
    tag_issues: Vec<Violation>,
}

pub const LOCAL_EDGES: [[usize; 2]; 3] = [[1, 2], [0, 2], [0, 1]];

impl Topology {
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Cells adjacent to `edge` (one for boundary edges).
    pub fn edge_cells(&self, edge: usize) -> impl Iterator<Item = usize> + '_ {
        self.edge_cells[edge].iter().copied().filter(|&c| c != NONE)
    }

    pub fn is_boundary_edge(&self, edge: usize) -> bool {
        self.edge_cells[edge][1] == NONE
    }

    pub fn edge_tag(&self, edge: usize) -> Option<BoundaryTag> {
        self.edge_tags[edge]
    }

    pub fn find_edge(&self, a: usize, b: usize) -> Option<usize> {
        let key = if a < b { [a, b] } else { [b, a] };
        self.edges.binary_search(&key).ok()
    }
}

#[derive(Debug, Clone)]
pub struct SubMesh {
    pub vertices: Vec<Point2>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub subdomain: Subdomain,
    topology: Topology,
}

impl SubMesh {
    /// Builds a submesh and its adjacency. Only index ranges are checked
    /// here; geometric invariants are reported by [`SubMesh::validate`].
    pub fn new(
        vertices: Vec<Point2>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
        subdomain: Subdomain,
    ) -> Result<Self, MeshError> {
        let nv = vertices.len();
        for (c, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&v| v >= nv) {
                return Err(MeshError::IndexOutOfRange { what: format!("triangle {c}"), index: bad });
            }
        }
        for (k, be) in boundary_edges.iter().enumerate() {
            if let Some(&bad) = be.vertices.iter().find(|&&v| v >= nv) {
                return Err(MeshError::IndexOutOfRange { what: format!("boundary edge {k}"), index: bad });
            }
        }
        let topology = build_topology(&triangles, &boundary_edges);
        Ok(Self { vertices, triangles, boundary_edges, subdomain, topology })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.topology.edges.len()
    }

    pub fn cell_points(&self, cell: usize) -> [Point2; 3] {
        let t = self.triangles[cell];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    /// Twice the signed area; positive for counter-clockwise triangles.
    pub fn signed_double_area(&self, cell: usize) -> f64 {
        let [a, b, c] = self.cell_points(cell);
        (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)
    }

    pub fn area(&self, cell: usize) -> f64 {
        0.5 * self.signed_double_area(cell)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.area(c)).sum()
    }

    pub fn diameter(&self, cell: usize) -> f64 {
        let [a, b, c] = self.cell_points(cell);
        a.distance(b).max(b.distance(c)).max(c.distance(a))
    }

    pub fn max_diameter(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.diameter(c)).fold(0.0, f64::max)
    }

    pub fn min_diameter(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.diameter(c)).fold(f64::INFINITY, f64::min)
    }

    /// Edges carrying one of `tags`, as `(edge index, cell, local edge)`.
    pub fn tagged_edges(&self, tags: &[BoundaryTag]) -> Vec<(usize, usize, usize)> {
        let topo = &self.topology;
        (0..topo.n_edges())
            .filter(|&e| topo.edge_tags[e].is_some_and(|t| tags.contains(&t)))
            .filter_map(|e| {
                let cell = topo.edge_cells[e][0];
                (cell != NONE).then(|| {
                    let local = topo.cell_edges[cell].iter().position(|&x| x == e).unwrap();
                    (e, cell, local)
                })
            })
            .collect()
    }

    /// Unit normal of local edge `local` of `cell`, pointing out of the cell.
    pub fn outward_normal(&self, cell: usize, local: usize) -> [f64; 2] {
        let t = self.triangles[cell];
        let [i, j] = LOCAL_EDGES[local];
        let (a, b, c) = (self.vertices[t[i]], self.vertices[t[j]], self.vertices[t[local]]);
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let len = dx.hypot(dy);
        let mut n = [dy / len, -dx / len];
        let m = a.midpoint(b);
        if n[0] * (c.x - m.x) + n[1] * (c.y - m.y) > 0.0 {
            n = [-n[0], -n[1]];
        }
        n
    }

    pub fn validate(&self) -> Vec<Violation> {
        let name = match self.subdomain {
            Subdomain::Fluid => "fluid",
            Subdomain::Poroelastic => "poro",
        };
        let mut out = Vec::new();
        for (i, p) in self.vertices.iter().enumerate() {
            if !p.is_finite() {
                out.push(Violation {
                    entity: format!("{name} vertex {i}"),
                    rule: Rule::FiniteCoordinates,
                    detail: format!("({}, {})", p.x, p.y),
                });
            }
        }
        for c in 0..self.n_cells() {
            let a2 = self.signed_double_area(c);
            if !(a2 > 0.0) {
                out.push(Violation {
                    entity: format!("{name} triangle {c}"),
                    rule: Rule::PositiveOrientation,
                    detail: format!("signed area {}", 0.5 * a2),
                });
            }
        }
        for &e in &self.topology.overshared {
            let [a, b] = self.topology.edges[e];
            out.push(Violation {
                entity: format!("{name} edge ({a},{b})"),
                rule: Rule::Conforming,
                detail: "shared by more than two triangles".into(),
            });
        }
        for (e, cells) in self.topology.edge_cells.iter().enumerate() {
            if cells[1] == NONE && self.topology.edge_tags[e].is_none() {
                let [a, b] = self.topology.edges[e];
                out.push(Violation {
                    entity: format!("{name} edge ({a},{b})"),
                    rule: Rule::BoundaryEdgeTagged,
                    detail: "boundary edge without tag".into(),
                });
            }
        }
        out.extend(self.topology.tag_issues.iter().map(|v| Violation {
            entity: format!("{name} {}", v.entity),
            ..v.clone()
        }));
        out
    }
}

fn build_topology(triangles: &[[usize; 3]], boundary_edges: &[BoundaryEdge]) -> Topology {
    let mut keyed: Vec<([usize; 2], usize, usize)> = Vec::with_capacity(3 * triangles.len());
    for (c, tri) in triangles.iter().enumerate() {
        for (l, [i, j]) in LOCAL_EDGES.iter().enumerate() {
            let (a, b) = (tri[*i], tri[*j]);
            keyed.push(([a.min(b), a.max(b)], c, l));
        }
    }
    keyed.sort_unstable();
    let mut edges = Vec::new();
    let mut edge_cells: Vec<[usize; 2]> = Vec::new();
    let mut cell_edges = vec![[NONE; 3]; triangles.len()];
    let mut overshared = Vec::new();
    for (key, c, l) in keyed {
        if edges.last() != Some(&key) {
            edges.push(key);
            edge_cells.push([NONE, NONE]);
        }
        let e = edges.len() - 1;
        let slot = &mut edge_cells[e];
        if slot[0] == NONE {
            slot[0] = c;
        } else if slot[1] == NONE {
            slot[1] = c;
        } else if overshared.last() != Some(&e) {
            overshared.push(e);
        }
        cell_edges[c][l] = e;
    }
    let mut edge_tags = vec![None; edges.len()];
    let mut tag_issues = Vec::new();
    for be in boundary_edges {
        let [a, b] = be.vertices;
        let key = [a.min(b), a.max(b)];
        match edges.binary_search(&key) {
            Ok(e) if edge_cells[e][1] == NONE => {
                if edge_tags[e].is_some() {
                    tag_issues.push(Violation {
                        entity: format!("edge ({a},{b})"),
                        rule: Rule::BoundaryEdgeTagged,
                        detail: "tagged more than once".into(),
                    });
                }
                edge_tags[e] = Some(be.tag);
            }
            Ok(_) => tag_issues.push(Violation {
                entity: format!("edge ({a},{b})"),
                rule: Rule::TaggedEdgeOnBoundary,
                detail: format!("{} tag on an interior edge", be.tag),
            }),
            Err(_) => tag_issues.push(Violation {
                entity: format!("edge ({a},{b})"),
                rule: Rule::TaggedEdgeOnBoundary,
                detail: "tagged edge is not an edge of any triangle".into(),
            }),
        }
    }
    Topology { edges, cell_edges, edge_cells, edge_tags, overshared, tag_issues }
}

/// One interface edge as seen from both subdomains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceEdge {
    /// Fluid vertex indices; `fluid_vertices[k]` coincides with `poro_vertices[k]`.
    pub fluid_vertices: [usize; 2],
    pub poro_vertices: [usize; 2],
    pub fluid_edge: usize,
    pub poro_edge: usize,
    pub fluid_cell: usize,
    pub poro_cell: usize,
    pub normal_f: [f64; 2],
    pub normal_p: [f64; 2],
    /// `normal_f` rotated by +90 degrees.
    pub tangent_f: [f64; 2],
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct CoupledMesh {
    pub fluid: Arc<SubMesh>,
    pub poro: Arc<SubMesh>,
    pub interface: Vec<InterfaceEdge>,
    pairs: Vec<([usize; 2], [usize; 2])>,
    pair_issues: Vec<Violation>,
}

impl CoupledMesh {
    /// Couples two submeshes through paired interface edges (fluid vertex
    /// pair, poro vertex pair). Geometric mismatches are kept as violations
    /// and reported by [`CoupledMesh::validate`].
    pub fn new(fluid: SubMesh, poro: SubMesh, pairs: Vec<([usize; 2], [usize; 2])>) -> Result<Self, MeshError> {
        let mut interface = Vec::with_capacity(pairs.len());
        let mut pair_issues = Vec::new();
        for (k, &(fv, pv)) in pairs.iter().enumerate() {
            for (what, mesh, vs) in [("fluid", &fluid, fv), ("poro", &poro, pv)] {
                if let Some(&bad) = vs.iter().find(|&&v| v >= mesh.n_vertices()) {
                    return Err(MeshError::IndexOutOfRange { what: format!("interface edge {k} ({what})"), index: bad });
                }
            }
            let (Some(fe), Some(pe)) = (fluid.topology.find_edge(fv[0], fv[1]), poro.topology.find_edge(pv[0], pv[1])) else {
                pair_issues.push(Violation {
                    entity: format!("interface edge {k}"),
                    rule: Rule::InterfaceMatching,
                    detail: "vertex pair is not a mesh edge".into(),
                });
                continue;
            };
            let fc = fluid.topology.edge_cells[fe][0];
            let pc = poro.topology.edge_cells[pe][0];
            let fl = fluid.topology.cell_edges[fc].iter().position(|&x| x == fe).unwrap();
            let pl = poro.topology.cell_edges[pc].iter().position(|&x| x == pe).unwrap();
            let normal_f = fluid.outward_normal(fc, fl);
            let normal_p = poro.outward_normal(pc, pl);
            let a = fluid.vertices[fv[0]];
            let b = fluid.vertices[fv[1]];
            interface.push(InterfaceEdge {
                fluid_vertices: fv,
                poro_vertices: pv,
                fluid_edge: fe,
                poro_edge: pe,
                fluid_cell: fc,
                poro_cell: pc,
                normal_f,
                normal_p,
                tangent_f: [-normal_f[1], normal_f[0]],
                length: a.distance(b),
            });
        }
        Ok(Self { fluid: Arc::new(fluid), poro: Arc::new(poro), interface, pairs, pair_issues })
    }

    /// Builds the mesh and rejects it if any invariant is violated.
    pub fn new_validated(fluid: SubMesh, poro: SubMesh, pairs: Vec<([usize; 2], [usize; 2])>) -> Result<Self, MeshError> {
        let mesh = Self::new(fluid, poro, pairs)?;
        let violations = mesh.validate();
        if violations.is_empty() {
            Ok(mesh)
        } else {
            Err(MeshError::Invalid(violations))
        }
    }

    pub fn interface_pairs(&self) -> &[([usize; 2], [usize; 2])] {
        &self.pairs
    }

    pub fn interface_length(&self) -> f64 {
        self.interface.iter().map(|e| e.length).sum()
    }

    /// Largest element diameter over both subdomains.
    pub fn h_max(&self) -> f64 {
        self.fluid.max_diameter().max(self.poro.max_diameter())
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = self.fluid.validate();
        out.extend(self.poro.validate());
        out.extend(self.pair_issues.iter().cloned());
        let scale = bounding_scale(&self.fluid).max(bounding_scale(&self.poro)).max(1.0);
        let tol = MATCH_TOLERANCE * scale;
        let mut fluid_seen = vec![false; self.fluid.n_edges()];
        let mut poro_seen = vec![false; self.poro.n_edges()];
        for (k, ie) in self.interface.iter().enumerate() {
            fluid_seen[ie.fluid_edge] = true;
            poro_seen[ie.poro_edge] = true;
            for j in 0..2 {
                let pf = self.fluid.vertices[ie.fluid_vertices[j]];
                let pp = self.poro.vertices[ie.poro_vertices[j]];
                let d = pf.distance(pp);
                if !(d <= tol) {
                    out.push(Violation {
                        entity: format!("interface edge {k}"),
                        rule: Rule::InterfaceMatching,
                        detail: format!("vertex {j} offset by {d:.3e}"),
                    });
                }
            }
            for (what, mesh, e) in [("fluid", &self.fluid, ie.fluid_edge), ("poro", &self.poro, ie.poro_edge)] {
                if mesh.topology.edge_tags[e] != Some(BoundaryTag::GammaFP) {
                    out.push(Violation {
                        entity: format!("interface edge {k}"),
                        rule: Rule::InterfaceTagged,
                        detail: format!("{what} edge not tagged GammaFP"),
                    });
                }
            }
            let sum = (ie.normal_f[0] + ie.normal_p[0]).hypot(ie.normal_f[1] + ie.normal_p[1]);
            let unit = (ie.normal_f[0].hypot(ie.normal_f[1]) - 1.0).abs();
            if sum > 1e-12 || unit > 1e-14 {
                out.push(Violation {
                    entity: format!("interface edge {k}"),
                    rule: Rule::InterfaceNormals,
                    detail: format!("|n_f + n_p| = {sum:.3e}"),
                });
            }
        }
        for (what, mesh, seen) in [("fluid", &self.fluid, &fluid_seen), ("poro", &self.poro, &poro_seen)] {
            for (e, tag) in mesh.topology.edge_tags.iter().enumerate() {
                if *tag == Some(BoundaryTag::GammaFP) && !seen[e] {
                    let [a, b] = mesh.topology.edges[e];
                    out.push(Violation {
                        entity: format!("{what} edge ({a},{b})"),
                        rule: Rule::InterfaceMatching,
                        detail: "GammaFP edge has no partner".into(),
                    });
                }
            }
        }
        out
    }

    /// Splits every triangle into four similar ones through its edge midpoints.
    pub fn uniform_refine(&self) -> Result<CoupledMesh, MeshError> {
        let fluid = refine_submesh(&self.fluid)?;
        let poro = refine_submesh(&self.poro)?;
        let fnv = self.fluid.n_vertices();
        let pnv = self.poro.n_vertices();
        let mut pairs = Vec::with_capacity(2 * self.pairs.len());
        for ie in &self.interface {
            let fm = fnv + ie.fluid_edge;
            let pm = pnv + ie.poro_edge;
            let [f0, f1] = ie.fluid_vertices;
            let [p0, p1] = ie.poro_vertices;
            pairs.push(([f0, fm], [p0, pm]));
            pairs.push(([fm, f1], [pm, p1]));
        }
        CoupledMesh::new(fluid, poro, pairs)
    }
}

fn bounding_scale(mesh: &SubMesh) -> f64 {
    mesh.vertices.iter().fold(0.0_f64, |m, p| m.max(p.x.abs()).max(p.y.abs()))
}

fn refine_submesh(mesh: &SubMesh) -> Result<SubMesh, MeshError> {
    let topo = &mesh.topology;
    let nv = mesh.n_vertices();
    let mut vertices = mesh.vertices.clone();
    vertices.extend(topo.edges.iter().map(|&[a, b]| mesh.vertices[a].midpoint(mesh.vertices[b])));
    let mut triangles = Vec::with_capacity(4 * mesh.n_cells());
    for (c, &[v0, v1, v2]) in mesh.triangles.iter().enumerate() {
        let [e0, e1, e2] = topo.cell_edges[c];
        let (m0, m1, m2) = (nv + e0, nv + e1, nv + e2);
        triangles.push([v0, m2, m1]);
        triangles.push([m2, v1, m0]);
        triangles.push([m1, m0, v2]);
        triangles.push([m0, m1, m2]);
    }
    let mut boundary_edges = Vec::with_capacity(2 * mesh.boundary_edges.len());
    for be in &mesh.boundary_edges {
        let [a, b] = be.vertices;
        let e = topo
            .find_edge(a, b)
            .ok_or_else(|| MeshError::Layout(format!("boundary edge ({a},{b}) is not a mesh edge")))?;
        let m = nv + e;
        boundary_edges.push(BoundaryEdge { vertices: [a, m], tag: be.tag });
        boundary_edges.push(BoundaryEdge { vertices: [m, b], tag: be.tag });
    }
    SubMesh::new(vertices, triangles, boundary_edges, mesh.subdomain)
}
