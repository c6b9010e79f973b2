//! ASCII mesh format.
//!
//! ```text
//! fpsi-mesh v1
//! vertices N        (fluid)
//! x y
//! triangles M
//! i j k
//! bedges B
//! i j TAG
//! vertices N        (poro)
//! ...
//! interface E
//! fi fj pi pj
//! ```
//!
//! Indices are 0-based; `fi fj` and `pi pj` name the same edge in the fluid
//! and poroelastic submeshes with matching vertex order.

use std::fmt::Write as _;
use std::path::Path;

use super::{BoundaryEdge, BoundaryTag, CoupledMesh, MeshError, Point2, SubMesh, Subdomain};

const HEADER: &str = "fpsi-mesh v1";

pub fn write_mesh_string(mesh: &CoupledMesh) -> String {
    let mut s = String::new();
    s.push_str(HEADER);
    s.push('\n');
    for sub in [&mesh.fluid, &mesh.poro] {
        writeln!(s, "vertices {}", sub.vertices.len()).unwrap();
        for p in &sub.vertices {
            writeln!(s, "{:.16e} {:.16e}", p.x, p.y).unwrap();
        }
        writeln!(s, "triangles {}", sub.triangles.len()).unwrap();
        for t in &sub.triangles {
            writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
        }
        writeln!(s, "bedges {}", sub.boundary_edges.len()).unwrap();
        for e in &sub.boundary_edges {
            writeln!(s, "{} {} {}", e.vertices[0], e.vertices[1], e.tag).unwrap();
        }
    }
    let pairs = mesh.interface_pairs();
    writeln!(s, "interface {}", pairs.len()).unwrap();
    for (f, p) in pairs {
        writeln!(s, "{} {} {} {}", f[0], f[1], p[0], p[1]).unwrap();
    }
    s
}

pub fn write_mesh(mesh: &CoupledMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    std::fs::write(path, write_mesh_string(mesh))?;
    Ok(())
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<CoupledMesh, MeshError> {
    read_mesh_str(&std::fs::read_to_string(path)?)
}

/// Parses and validates a mesh; any invariant violation is an error.
pub fn read_mesh_str(text: &str) -> Result<CoupledMesh, MeshError> {
    let mut lines = Lines::new(text);
    let (ln, header) = lines.next_line()?;
    if header.trim() != HEADER {
        return Err(parse_err(ln, 1, format!("expected header `{HEADER}`")));
    }
    let fluid = read_submesh(&mut lines, Subdomain::Fluid)?;
    let poro = read_submesh(&mut lines, Subdomain::Poroelastic)?;
    let n = lines.section("interface")?;
    let mut pairs = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, toks) = lines.tokens()?;
        expect_count(ln, &toks, 4)?;
        let v: Vec<usize> = toks.iter().map(|t| parse_tok(ln, t)).collect::<Result<_, _>>()?;
        pairs.push(([v[0], v[1]], [v[2], v[3]]));
    }
    if let Some((ln, rest)) = lines.next_nonempty() {
        return Err(parse_err(ln, 1, format!("unexpected trailing content `{}`", rest.trim())));
    }
    CoupledMesh::new_validated(fluid, poro, pairs)
}

fn read_submesh(lines: &mut Lines<'_>, subdomain: Subdomain) -> Result<SubMesh, MeshError> {
    let nv = lines.section("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, toks) = lines.tokens()?;
        expect_count(ln, &toks, 2)?;
        let x: f64 = parse_tok(ln, &toks[0])?;
        let y: f64 = parse_tok(ln, &toks[1])?;
        vertices.push(Point2::new(x, y));
    }
    let nt = lines.section("triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, toks) = lines.tokens()?;
        expect_count(ln, &toks, 3)?;
        let mut t = [0usize; 3];
        for k in 0..3 {
            t[k] = parse_index(ln, &toks[k], nv)?;
        }
        triangles.push(t);
    }
    let nb = lines.section("bedges")?;
    let mut bedges = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (ln, toks) = lines.tokens()?;
        expect_count(ln, &toks, 3)?;
        let a = parse_index(ln, &toks[0], nv)?;
        let b = parse_index(ln, &toks[1], nv)?;
        let tag: BoundaryTag = toks[2].text.parse().map_err(|m| parse_err(ln, toks[2].column, m))?;
        bedges.push(BoundaryEdge { vertices: [a, b], tag });
    }
    SubMesh::new(vertices, triangles, bedges, subdomain)
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self { iter: text.lines().enumerate(), last: 0 }
    }

    fn next_nonempty(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.iter.by_ref() {
            self.last = i + 1;
            if !l.trim().is_empty() {
                return Some((i + 1, l));
            }
        }
        None
    }

    fn next_line(&mut self) -> Result<(usize, &'a str), MeshError> {
        self.next_nonempty().ok_or_else(|| parse_err(self.last + 1, 1, "unexpected end of file".into()))
    }

    fn tokens(&mut self) -> Result<(usize, Vec<Token<'a>>), MeshError> {
        let (ln, line) = self.next_line()?;
        let mut toks = Vec::new();
        let mut start = None;
        for (i, ch) in line.char_indices().chain(std::iter::once((line.len(), ' '))) {
            match (ch.is_whitespace(), start) {
                (false, None) => start = Some(i),
                (true, Some(s)) => {
                    toks.push(Token { text: &line[s..i], column: s + 1 });
                    start = None;
                }
                _ => {}
            }
        }
        Ok((ln, toks))
    }

    fn section(&mut self, keyword: &str) -> Result<usize, MeshError> {
        let (ln, toks) = self.tokens()?;
        if toks.first().map(|t| t.text) != Some(keyword) {
            let col = toks.first().map_or(1, |t| t.column);
            return Err(parse_err(ln, col, format!("expected `{keyword} <count>`")));
        }
        expect_count(ln, &toks, 2)?;
        parse_tok(ln, &toks[1])
    }
}

fn parse_err(line: usize, column: usize, message: String) -> MeshError {
    MeshError::Parse { line, column, message }
}

fn expect_count(ln: usize, toks: &[Token<'_>], n: usize) -> Result<(), MeshError> {
    if toks.len() == n {
        Ok(())
    } else {
        let col = toks.get(n).map_or(1, |t| t.column);
        Err(parse_err(ln, col, format!("expected {n} fields, found {}", toks.len())))
    }
}

fn parse_tok<T: std::str::FromStr>(ln: usize, tok: &Token<'_>) -> Result<T, MeshError> {
    tok.text
        .parse()
        .map_err(|_| parse_err(ln, tok.column, format!("cannot parse `{}` as {}", tok.text, std::any::type_name::<T>())))
}

fn parse_index(ln: usize, tok: &Token<'_>, n: usize) -> Result<usize, MeshError> {
    let v: usize = parse_tok(ln, tok)?;
    if v >= n {
        return Err(parse_err(ln, tok.column, format!("index {v} out of range (have {n})")));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rectangle_coupled_mesh, DiagonalPattern, RectangleTags, Rule};

    fn sample() -> CoupledMesh {
        build_rectangle_coupled_mesh([0.0, 1.0, -1.0, 1.0], 0.0, 3, 3, 2, RectangleTags::mms(), DiagonalPattern::Alternating)
            .unwrap()
            .uniform_refine()
            .unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = sample();
        let text = write_mesh_string(&m);
        let r = read_mesh_str(&text).unwrap();
        for (a, b) in [(&m.fluid, &r.fluid), (&m.poro, &r.poro)] {
            assert_eq!(a.vertices.len(), b.vertices.len());
            for (p, q) in a.vertices.iter().zip(&b.vertices) {
                assert_eq!(p.x.to_bits(), q.x.to_bits());
                assert_eq!(p.y.to_bits(), q.y.to_bits());
            }
            assert_eq!(a.triangles, b.triangles);
            assert_eq!(a.boundary_edges, b.boundary_edges);
        }
        assert_eq!(m.interface_pairs(), r.interface_pairs());
        assert_eq!(write_mesh_string(&r), text);
    }

    #[test]
    fn negative_orientation_is_rejected() {
        let m = sample();
        let text = write_mesh_string(&m);
        let t0 = m.fluid.triangles[0];
        let needle = format!("\n{} {} {}\n", t0[0], t0[1], t0[2]);
        let swapped = format!("\n{} {} {}\n", t0[0], t0[2], t0[1]);
        let bad = text.replacen(&needle, &swapped, 1);
        match read_mesh_str(&bad) {
            Err(MeshError::Invalid(v)) => assert!(v.iter().any(|v| v.rule == Rule::PositiveOrientation)),
            other => panic!("expected orientation error, got {other:?}"),
        }
    }

    #[test]
    fn offset_interface_vertex_is_rejected() {
        let mut m = sample();
        let (_, p) = m.interface_pairs()[0];
        let mut poro = (*m.poro).clone();
        let v = p[0];
        poro.vertices[v].x += 1e-6;
        let poro = SubMesh::new(poro.vertices, poro.triangles, poro.boundary_edges, Subdomain::Poroelastic).unwrap();
        m = CoupledMesh::new((*m.fluid).clone(), poro, m.interface_pairs().to_vec()).unwrap();
        match read_mesh_str(&write_mesh_string(&m)) {
            Err(MeshError::Invalid(v)) => assert!(v.iter().any(|v| v.rule == Rule::InterfaceMatching)),
            other => panic!("expected matching-trace error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_position() {
        let text = "fpsi-mesh v1\nvertices 1\n0.0 zz\n";
        match read_mesh_str(text) {
            Err(MeshError::Parse { line, column, .. }) => assert_eq!((line, column), (3, 5)),
            other => panic!("expected parse error, got {other:?}"),
        }
        match read_mesh_str("fpsi-mesh v2\n") {
            Err(MeshError::Parse { line: 1, .. }) => {}
            other => panic!("expected header error, got {other:?}"),
        }
    }
}
