use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::reference::*;
use super::*;
use crate::mesh::{build_rectangle_coupled_mesh, CoupledMesh, DiagonalPattern, RectangleTags};

const ALL: [ElementKind; 7] = [
    ElementKind::P0,
    ElementKind::P1,
    ElementKind::P1Bubble,
    ElementKind::P2,
    ElementKind::P1dc,
    ElementKind::RT0,
    ElementKind::RT1,
];

fn unit_square_pair(n: usize) -> CoupledMesh {
    build_rectangle_coupled_mesh([0.0, 1.0, -1.0, 1.0], 0.0, n, n, n, RectangleTags::mms(), DiagonalPattern::Alternating)
        .unwrap()
}

/// Perturbs interior vertices so the mesh is no longer structured.
fn jiggle(mesh: &CoupledMesh, amount: f64, seed: u64) -> Arc<SubMesh> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = &mesh.fluid;
    let mut verts = f.vertices.clone();
    for v in verts.iter_mut() {
        let inside = v.x > 1e-12 && v.x < 1.0 - 1e-12 && v.y > 1e-12 && v.y < 1.0 - 1e-12;
        if inside {
            v.x += amount * (rng.gen::<f64>() - 0.5);
            v.y += amount * (rng.gen::<f64>() - 0.5);
        }
    }
    Arc::new(SubMesh::new(verts, f.triangles.clone(), f.boundary_edges.clone(), f.subdomain).unwrap())
}

fn scalar_reference_dofs(kind: ElementKind, f: &dyn Fn([f64; 2]) -> f64) -> Vec<f64> {
    let v = REF_VERTICES;
    match kind {
        ElementKind::P0 => {
            let r = crate::quadrature::triangle_rule(4).unwrap();
            vec![2.0 * r.integrate(f)]
        }
        ElementKind::P1 | ElementKind::P1dc => v.iter().map(|&p| f(p)).collect(),
        ElementKind::P1Bubble => {
            let mut d: Vec<f64> = v.iter().map(|&p| f(p)).collect();
            let avg = (d[0] + d[1] + d[2]) / 3.0;
            d.push(f([1.0 / 3.0, 1.0 / 3.0]) - avg);
            d
        }
        ElementKind::P2 => {
            let mut d: Vec<f64> = v.iter().map(|&p| f(p)).collect();
            for [a, b] in crate::mesh::LOCAL_EDGES {
                d.push(f([0.5 * (v[a][0] + v[b][0]), 0.5 * (v[a][1] + v[b][1])]));
            }
            d
        }
        _ => unreachable!(),
    }
}

#[test]
fn duality_is_identity_for_every_kind() {
    for kind in ALL {
        let n = kind.local_dofs();
        for k in 0..n {
            let dofs = if kind.is_rt() {
                rt_reference_dofs(kind, &|p| {
                    let t = Tabulation::at_point(kind, p);
                    t.vvals[k]
                })
            } else {
                scalar_reference_dofs(kind, &|p| Tabulation::at_point(kind, p).vals[k])
            };
            for (i, d) in dofs.iter().enumerate() {
                let expect = if i == k { 1.0 } else { 0.0 };
                assert!((d - expect).abs() < 1e-12, "{kind:?}: dof {i} of basis {k} = {d}");
            }
        }
    }
}

#[test]
fn partition_of_unity_for_vertex_bases() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for kind in [ElementKind::P1, ElementKind::P2, ElementKind::P1dc] {
        for _ in 0..20 {
            let (a, b): (f64, f64) = (rng.gen(), rng.gen());
            let p = if a + b <= 1.0 { [a, b] } else { [1.0 - a, 1.0 - b] };
            let s: f64 = Tabulation::at_point(kind, p).vals.iter().sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }
}

#[test]
fn reference_gradients_match_finite_differences() {
    let p = [0.21, 0.33];
    let h = 1e-6;
    for kind in ALL {
        let t0 = Tabulation::at_point(kind, p);
        let tx = Tabulation::at_point(kind, [p[0] + h, p[1]]);
        let ty = Tabulation::at_point(kind, [p[0], p[1] + h]);
        let mx = Tabulation::at_point(kind, [p[0] - h, p[1]]);
        let my = Tabulation::at_point(kind, [p[0], p[1] - h]);
        for i in 0..kind.local_dofs() {
            if kind.is_rt() {
                for c in 0..2 {
                    let gx = (tx.vvals[i][c] - mx.vvals[i][c]) / (2.0 * h);
                    let gy = (ty.vvals[i][c] - my.vvals[i][c]) / (2.0 * h);
                    assert!((gx - t0.vgrads[i][c][0]).abs() < 1e-7);
                    assert!((gy - t0.vgrads[i][c][1]).abs() < 1e-7);
                }
                assert!((t0.divs[i] - t0.vgrads[i][0][0] - t0.vgrads[i][1][1]).abs() < 1e-12);
            } else {
                let gx = (tx.vals[i] - mx.vals[i]) / (2.0 * h);
                let gy = (ty.vals[i] - my.vals[i]) / (2.0 * h);
                assert!((gx - t0.grads[i][0]).abs() < 1e-7);
                assert!((gy - t0.grads[i][1]).abs() < 1e-7);
            }
        }
    }
}

#[test]
fn space_dimensions_on_two_triangle_square() {
    let m = build_rectangle_coupled_mesh([0.0, 1.0, -1.0, 1.0], 0.0, 1, 1, 1, RectangleTags::mms(), DiagonalPattern::Uniform)
        .unwrap();
    let f = &m.fluid;
    assert_eq!(build_space(f, ElementKind::P1, false).unwrap().n_dofs(), 4);
    assert_eq!(build_space(f, ElementKind::RT0, true).unwrap().n_dofs(), 5);
    assert_eq!(build_space(f, ElementKind::P2, false).unwrap().n_dofs(), 9);
    assert_eq!(build_space(f, ElementKind::P1Bubble, false).unwrap().n_dofs(), 6);
    assert_eq!(build_space(f, ElementKind::P1Bubble, true).unwrap().n_dofs(), 12);
    assert_eq!(build_space(f, ElementKind::RT1, true).unwrap().n_dofs(), 14);
    assert!(matches!(build_space(f, ElementKind::RT0, false), Err(FemError::Incompatible { .. })));
    assert!(matches!(build_space(f, ElementKind::P0, true), Err(FemError::Incompatible { .. })));
}

#[test]
fn space_dimensions_on_refinements() {
    let mut m = unit_square_pair(1);
    for _ in 0..3 {
        m = m.uniform_refine().unwrap();
        let f = &m.fluid;
        let (nv, ne, nc) = (f.n_vertices(), f.n_edges(), f.n_cells());
        assert_eq!(nv + nc, ne + 1, "Euler characteristic");
        assert_eq!(build_space(f, ElementKind::P2, true).unwrap().n_dofs(), 2 * (nv + ne));
        assert_eq!(build_space(f, ElementKind::RT1, true).unwrap().n_dofs(), 2 * ne + 2 * nc);
        assert_eq!(build_space(f, ElementKind::P1dc, false).unwrap().n_dofs(), 3 * nc);
        assert_eq!(build_space(f, ElementKind::P0, false).unwrap().n_dofs(), nc);
    }
}

#[test]
fn piola_examples() {
    let id = CellGeometry::new(0, [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)]).unwrap();
    assert_eq!(piola_map(&id, [0.3, -0.7]), [0.3, -0.7]);
    assert_eq!(piola_div(&id, 1.5), 1.5);
    let twice = CellGeometry::new(0, [Point2::new(0.0, 0.0), Point2::new(2.0, 0.0), Point2::new(0.0, 2.0)]).unwrap();
    assert_eq!(twice.det, 4.0);
    assert_eq!(piola_map(&twice, [1.0, 2.0]), [0.5, 1.0]);
    assert_eq!(piola_div(&twice, 1.0), 0.25);
    let flat = CellGeometry::new(3, [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(2.0, 0.0)]);
    assert!(matches!(flat, Err(FemError::Degenerate { cell: 3, .. })));
}

fn sample_points(mesh: &SubMesh, rng: &mut ChaCha8Rng, per_cell: usize) -> Vec<(usize, Point2)> {
    let mut out = Vec::new();
    for c in 0..mesh.n_cells() {
        let g = CellGeometry::of_cell(mesh, c).unwrap();
        for _ in 0..per_cell {
            let (a, b): (f64, f64) = (rng.gen(), rng.gen());
            let r = if a + b <= 1.0 { [a, b] } else { [1.0 - a, 1.0 - b] };
            out.push((c, g.map(r)));
        }
    }
    out
}

#[test]
fn rt_interpolants_reproduce_their_spaces_on_distorted_meshes() {
    let m = unit_square_pair(4);
    let mesh = jiggle(&m, 0.08, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts = sample_points(&mesh, &mut rng, 3);
    let rt0 = build_space(&mesh, ElementKind::RT0, true).unwrap();
    let f0 = |p: Point2| [1.0 + 0.5 * p.x, -2.0 + 0.5 * p.y];
    let c0 = interpolate(&rt0, f0).unwrap();
    let constant = interpolate(&rt0, |_| [1.0, 0.0]).unwrap();
    let rt1 = build_space(&mesh, ElementKind::RT1, true).unwrap();
    let f1 = |p: Point2| [p.x * p.y - 3.0 * p.y, p.y * p.y + 2.0 * p.x + 0.3];
    let c1 = interpolate(&rt1, f1).unwrap();
    for &(c, p) in &pts {
        let v = eval_field(&rt0, &constant, c, p).unwrap().value;
        assert!((v[0] - 1.0).abs() < 1e-12 && v[1].abs() < 1e-12);
        let v = eval_field(&rt0, &c0, c, p).unwrap();
        let e = f0(p);
        assert!((v.value[0] - e[0]).abs() < 1e-12 && (v.value[1] - e[1]).abs() < 1e-12);
        assert!((v.div - 1.0).abs() < 1e-12);
        let v = eval_field(&rt1, &c1, c, p).unwrap();
        let e = f1(p);
        assert!((v.value[0] - e[0]).abs() < 1e-11 && (v.value[1] - e[1]).abs() < 1e-11);
        assert!((v.div - 3.0 * p.y).abs() < 1e-10);
    }
}

#[test]
fn rt_normal_traces_agree_across_interior_edges() {
    let m = unit_square_pair(3);
    let mesh = jiggle(&m, 0.1, 11);
    let topo = mesh.topology();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for kind in [ElementKind::RT0, ElementKind::RT1] {
        let dm = build_space(&mesh, kind, true).unwrap();
        let coeffs: Vec<f64> = (0..dm.n_dofs()).map(|_| rng.gen::<f64>() - 0.5).collect();
        for e in 0..topo.n_edges() {
            let cells: Vec<usize> = topo.edge_cells(e).collect();
            if cells.len() != 2 {
                continue;
            }
            let [a, b] = topo.edges[e];
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            let n = [pb.y - pa.y, -(pb.x - pa.x)];
            for s in [0.1, 0.5, 0.77] {
                let p = Point2::new(pa.x + s * (pb.x - pa.x), pa.y + s * (pb.y - pa.y));
                let u0 = eval_field(&dm, &coeffs, cells[0], p).unwrap().value;
                let u1 = eval_field(&dm, &coeffs, cells[1], p).unwrap().value;
                let t0 = u0[0] * n[0] + u0[1] * n[1];
                let t1 = u1[0] * n[0] + u1[1] * n[1];
                assert!((t0 - t1).abs() < 1e-12, "{kind:?} edge {e}: {t0} vs {t1}");
            }
        }
    }
}

#[test]
fn lagrange_interpolation_examples() {
    let m = unit_square_pair(4);
    let mesh = jiggle(&m, 0.08, 9);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let pts = sample_points(&mesh, &mut rng, 2);
    let p1 = build_space(&mesh, ElementKind::P1, false).unwrap();
    let zero = vec![0.0; p1.n_dofs()];
    let cx = interpolate(&p1, |p| [p.x, 0.0]).unwrap();
    let p2 = build_space(&mesh, ElementKind::P2, true).unwrap();
    let c2 = interpolate(&p2, |p| [p.x * p.x, p.x * p.y]).unwrap();
    let pb = build_space(&mesh, ElementKind::P1Bubble, true).unwrap();
    let cb = interpolate(&pb, |p| [2.0 * p.x - p.y, 1.0]).unwrap();
    for &(c, p) in &pts {
        assert_eq!(eval_field(&p1, &zero, c, p).unwrap().value, [0.0, 0.0]);
        let v = eval_field(&p1, &cx, c, p).unwrap();
        assert!((v.value[0] - p.x).abs() < 1e-14);
        let v = eval_field(&p2, &c2, c, p).unwrap();
        assert!((v.value[0] - p.x * p.x).abs() < 1e-13);
        assert!((v.value[1] - p.x * p.y).abs() < 1e-13);
        assert!((v.div - 3.0 * p.x).abs() < 1e-11);
        let v = eval_field(&pb, &cb, c, p).unwrap();
        assert!((v.value[0] - (2.0 * p.x - p.y)).abs() < 1e-13 && (v.value[1] - 1.0).abs() < 1e-13);
    }
    let far = Point2::new(5.0, 5.0);
    assert!(matches!(eval_field(&p1, &cx, 0, far), Err(FemError::OutsideElement { .. })));
    let inside = CellGeometry::of_cell(&mesh, 0).unwrap().map([0.25, 0.25]);
    assert!(matches!(eval_field(&p1, &cx[1..], 0, inside), Err(FemError::Dimension { .. })));
}

#[test]
fn l2_projection_reproduces_discontinuous_polynomials() {
    let m = unit_square_pair(3);
    let dc = build_space(&m.poro, ElementKind::P1dc, false).unwrap();
    let c = l2_project_discontinuous(&dc, |p| 3.0 * p.x - p.y + 0.25).unwrap();
    let g = CellGeometry::of_cell(&m.poro, 4).unwrap();
    let p = g.map([0.2, 0.3]);
    let v = eval_field(&dc, &c, 4, p).unwrap().value[0];
    assert!((v - (3.0 * p.x - p.y + 0.25)).abs() < 1e-12);
    let p0 = build_space(&m.poro, ElementKind::P0, false).unwrap();
    let c = l2_project_discontinuous(&p0, |p| p.x).unwrap();
    let centroid = g.map([1.0 / 3.0, 1.0 / 3.0]);
    assert!((c[4] - centroid.x).abs() < 1e-13);
}

#[test]
fn essential_bc_examples() {
    let m = build_rectangle_coupled_mesh([0.0, 1.0, -1.0, 1.0], 0.0, 1, 1, 1, RectangleTags::mms(), DiagonalPattern::Uniform)
        .unwrap();
    let f = &m.fluid;
    let vel = build_space(f, ElementKind::P1, true).unwrap();
    let mut bc = EssentialBc::new(vel.n_dofs());
    essential_bc_mask(&vel, &[BoundaryTag::GammaF], Components::Both, |_, _| [0.0, 0.0], 0.0, &mut bc).unwrap();
    assert_eq!(bc.count(), 8);
    assert!(bc.values.iter().all(|&v| v == 0.0));

    // One edge: the right side of the fluid square.
    let right = f.tagged_edges(&[BoundaryTag::GammaF]).into_iter().find(|&(e, _, _)| {
        let [a, b] = f.topology().edges[e];
        f.vertices[a].x == 1.0 && f.vertices[b].x == 1.0
    });
    let (e, _, _) = right.unwrap();
    let mut one = f.boundary_edges.clone();
    let [a, b] = f.topology().edges[e];
    for be in one.iter_mut() {
        if be.vertices == [a, b] || be.vertices == [b, a] {
            be.tag = BoundaryTag::FOutlet;
        }
    }
    let f2 = Arc::new(SubMesh::new(f.vertices.clone(), f.triangles.clone(), one, f.subdomain).unwrap());
    let vel = build_space(&f2, ElementKind::P1, true).unwrap();
    let mut bc = EssentialBc::new(vel.n_dofs());
    essential_bc_mask(&vel, &[BoundaryTag::FOutlet], Components::Both, |_, _| [1.0, 0.0], 0.0, &mut bc).unwrap();
    let xs: Vec<usize> = (0..vel.n_scalar()).filter(|&i| bc.mask[i]).collect();
    assert_eq!(xs.len(), 2);
    assert!(xs.iter().all(|&i| bc.values[i] == 1.0));
    assert_eq!(bc.count(), 4);

    // RT0 flux with u.n = x on the top edge y = 1 (outward and global normal both +y or opposite).
    let rt = build_space(&f2, ElementKind::RT0, true).unwrap();
    let mut bc = EssentialBc::new(rt.n_dofs());
    essential_bc_mask(&rt, &[BoundaryTag::GammaF], Components::Both, |p, _| [0.0, p.x], 0.0, &mut bc).unwrap();
    let top = f2.topology().edges.iter().position(|&[a, b]| f2.vertices[a].y == 1.0 && f2.vertices[b].y == 1.0).unwrap();
    let [a, b] = f2.topology().edges[top];
    let (pa, pb) = (f2.vertices[a], f2.vertices[b]);
    let global_ny = -(pb.x - pa.x);
    // Integral of x over [0, 1] is 1/2; sign follows the global normal.
    assert!(bc.mask[top]);
    assert!((bc.values[top] - 0.5 * global_ny.signum()).abs() < 1e-14);

    let p0 = build_space(f, ElementKind::P0, false).unwrap();
    let mut bc = EssentialBc::new(p0.n_dofs());
    assert_eq!(
        essential_bc_mask(&p0, &[BoundaryTag::GammaF], Components::Both, |_, _| [0.0; 2], 0.0, &mut bc),
        Err(FemError::NoTraceDofs(ElementKind::P0))
    );
}

#[test]
fn multiplier_space_dimension_and_projection() {
    let m = unit_square_pair(4);
    for k in 0..=1 {
        let ms = MultiplierSpace::new(k, m.interface.len());
        assert_eq!(ms.n_dofs(), 4 * (k + 1));
        let c = ms.project(|e, s| 1.0 + e as f64 + if k == 1 { 2.0 * s } else { 0.0 });
        for e in 0..4 {
            for s in [0.0, 0.3, 1.0] {
                let exact = 1.0 + e as f64 + if k == 1 { 2.0 * s } else { 0.0 };
                assert!((ms.eval(&c, e, s) - exact).abs() < 1e-13);
            }
        }
    }
}
