use std::sync::Arc;

use super::*;
use crate::fem::{interpolate, l2_project_discontinuous, EssentialBc};
use crate::linalg::SparseMatrix;
use crate::mesh::{build_rectangle_coupled_mesh, BoundaryEdge, DiagonalPattern, RectangleTags, SubMesh, Subdomain};

/// Tensor 5-point Gauss-Legendre on a rectangle, split into `m x m` panels.
fn oracle_rect(f: impl Fn(f64, f64) -> f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let a = (245.0f64 - 14.0 * (70.0f64).sqrt()).sqrt() / 21.0;
    let b = (245.0f64 + 14.0 * (70.0f64).sqrt()).sqrt() / 21.0;
    let wa = (322.0 + 13.0 * 70.0f64.sqrt()) / 900.0;
    let wb = (322.0 - 13.0 * 70.0f64.sqrt()) / 900.0;
    let nodes = [(-b, wb), (-a, wa), (0.0, 128.0 / 225.0), (a, wa), (b, wb)];
    let m = 4;
    let (hx, hy) = ((x1 - x0) / m as f64, (y1 - y0) / m as f64);
    let mut s = 0.0;
    for i in 0..m {
        for j in 0..m {
            let (cx, cy) = (x0 + (i as f64 + 0.5) * hx, y0 + (j as f64 + 0.5) * hy);
            for &(u, wu) in &nodes {
                for &(v, wv) in &nodes {
                    s += wu * wv * f(cx + 0.5 * hx * u, cy + 0.5 * hy * v) * 0.25 * hx * hy;
                }
            }
        }
    }
    s
}

fn unit_mesh(n: usize) -> Arc<CoupledMesh> {
    Arc::new(
        build_rectangle_coupled_mesh([0.0, 1.0, -1.0, 1.0], 0.0, n, n, n, RectangleTags::mms(), DiagonalPattern::Alternating)
            .unwrap(),
    )
}

fn spaces(family: Family, n: usize) -> Spaces {
    Spaces::of_family(unit_mesh(n), family).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

const FAMILIES: [Family; 2] = [Family::Lower, Family::Higher];

#[test]
fn af_values() {
    for fam in FAMILIES {
        let s = spaces(fam, 3);
        let a = assemble_af(&s.uf, 1.0).unwrap();
        // 2 mu |D|^2 with D = diag(1, 0)
        let want = oracle_rect(|_, _| 2.0, 0.0, 1.0, 0.0, 1.0);
        let u = interpolate(&s.uf, |p| [p.x, 0.0]).unwrap();
        assert!(close(a.bilinear(&u, &u), want, 1e-10), "{fam:?}");
        for f in [|_: Point2| [1.0, 0.0], |p: Point2| [-p.y, p.x]] {
            let u = interpolate(&s.uf, f).unwrap();
            assert!(a.bilinear(&u, &u).abs() < 1e-12);
        }
        assert!(a.symmetry_defect() < 1e-12);
    }
}

#[test]
fn apd_values_and_rayleigh_bounds() {
    for fam in FAMILIES {
        let s = spaces(fam, 3);
        let u = interpolate(&s.up, |_| [1.0, 0.0]).unwrap();
        let want = oracle_rect(|_, _| 1.0, 0.0, 1.0, -1.0, 0.0);
        let a = assemble_apd(&s.up, 1.0, [[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(close(a.bilinear(&u, &u), want, 1e-10));
        let a2 = assemble_apd(&s.up, 1.0, [[0.5, 0.0], [0.0, 0.5]]).unwrap();
        assert!(close(a2.bilinear(&u, &u), 0.5 * want, 1e-10));
        assert!(a.bilinear(&vec![0.0; u.len()], &vec![0.0; u.len()]) == 0.0);

        let mut c = ProblemCoefficients::unit();
        c.mu_f = 0.7;
        c.permeability = [[2.0, 0.5], [0.5, 1.0]];
        let a = assemble_apd(&s.up, c.mu_f, c.k_inverse()).unwrap();
        let m = assemble_mass(&s.up, 1.0).unwrap();
        assert!(a.symmetry_defect() < 1e-12);
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let v: Vec<f64> = (0..u.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r = a.bilinear(&v, &v) / m.bilinear(&v, &v);
            assert!(r >= c.mu_f / c.k_max() * (1.0 - 1e-12) && r <= c.mu_f / c.k_min() * (1.0 + 1e-12));
        }
    }
}

#[test]
fn ape_values() {
    for fam in FAMILIES {
        let s = spaces(fam, 3);
        let a = assemble_ape(&s.eta, 1.0, 1.0, 0.0).unwrap();
        let u = interpolate(&s.eta, |p| [p.x, 0.0]).unwrap();
        // 2 |D|^2 + (div)^2 = 2 + 1
        let want = oracle_rect(|_, _| 2.0 + 1.0, 0.0, 1.0, -1.0, 0.0);
        assert!(close(a.bilinear(&u, &u), want, 1e-10));
        let rot = interpolate(&s.eta, |p| [-p.y, p.x]).unwrap();
        assert!(a.bilinear(&rot, &rot).abs() < 1e-12);
        let a5 = assemble_ape(&s.eta, 1.0, 1.0, 5.0).unwrap();
        let one = interpolate(&s.eta, |_| [1.0, 0.0]).unwrap();
        let want = oracle_rect(|_, _| 5.0, 0.0, 1.0, -1.0, 0.0);
        assert!(close(a5.bilinear(&one, &one), want, 1e-10));
        assert!(a5.symmetry_defect() < 1e-12);
    }
}

#[test]
fn b_values() {
    for fam in FAMILIES {
        let s = spaces(fam, 3);
        let want = oracle_rect(|_, _| -2.0, 0.0, 1.0, 0.0, 1.0);
        let bf = assemble_b(&s.uf, &s.pf).unwrap();
        let v = interpolate(&s.uf, |p| [p.x, p.y]).unwrap();
        let w = interpolate(&s.pf, |_| [1.0, 0.0]).unwrap();
        assert!(close(bf.bilinear(&w, &v), want, 1e-10));
        let rot = interpolate(&s.uf, |p| [-p.y, p.x]).unwrap();
        assert!(bf.matvec(&rot).iter().all(|x| x.abs() < 1e-12));

        let want_p = oracle_rect(|_, _| -2.0, 0.0, 1.0, -1.0, 0.0);
        let bp = assemble_b(&s.up, &s.pp).unwrap();
        let v = interpolate(&s.up, |p| [p.x, p.y]).unwrap();
        let w = l2_project_discontinuous(&s.pp, |_| 1.0).unwrap();
        assert!(close(bp.bilinear(&w, &v), want_p, 1e-10));
        assert_eq!(bp.bilinear(&vec![0.0; w.len()], &v), 0.0);
        let be = assemble_b(&s.eta, &s.pp).unwrap();
        let v = interpolate(&s.eta, |p| [p.x, p.y]).unwrap();
        assert!(close(be.bilinear(&w, &v), want_p, 1e-10));
    }
}

#[test]
fn p1_reference_mass() {
    let verts = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
    let bedges = vec![
        BoundaryEdge { vertices: [0, 1], tag: BoundaryTag::GammaF },
        BoundaryEdge { vertices: [1, 2], tag: BoundaryTag::GammaF },
        BoundaryEdge { vertices: [2, 0], tag: BoundaryTag::GammaF },
    ];
    let mesh = Arc::new(SubMesh::new(verts, vec![[0, 1, 2]], bedges, Subdomain::Fluid).unwrap());
    let dm = crate::fem::build_space(&mesh, crate::fem::ElementKind::P1, false).unwrap();
    let rho = 3.0;
    let m = assemble_mass(&dm, rho).unwrap();
    // int lambda_i lambda_j = |T| (1 + delta_ij) / 12
    let area = 0.5;
    for i in 0..3 {
        for j in 0..3 {
            let want = rho * area * (1.0 + if i == j { 1.0 } else { 0.0 }) / 12.0;
            assert!(close(m.get(i, j), want, 1e-12));
        }
    }
    assert!(close(m.get(0, 0), rho * 2.0 / 24.0, 1e-14));
    let zero = assemble_mass(&dm, 0.0).unwrap();
    assert!(zero.values().iter().all(|&v| v == 0.0));
}

#[test]
fn mass_partition_of_unity() {
    for fam in FAMILIES {
        let s = spaces(fam, 2);
        for dm in [&s.pf, &s.pp] {
            let one = if dm.kind().is_continuous() {
                interpolate(dm, |_| [1.0, 0.0]).unwrap()
            } else {
                l2_project_discontinuous(dm, |_| 1.0).unwrap()
            };
            let m = assemble_mass(dm, 2.5).unwrap();
            assert!(close(m.bilinear(&one, &one), 2.5, 1e-12));
            assert!(m.symmetry_defect() < 1e-12);
        }
    }
}

#[test]
fn convection_values() {
    for fam in FAMILIES {
        let s = spaces(fam, 3);
        let w = interpolate(&s.uf, |_| [1.0, 0.0]).unwrap();
        let u = interpolate(&s.uf, |p| [p.x, 0.0]).unwrap();
        let n = assemble_convection(&s.uf, &w, 1.0).unwrap();
        // (w . grad u) . v = 1 * x
        let want = oracle_rect(|x, _| x, 0.0, 1.0, 0.0, 1.0);
        assert!(close(n.bilinear(&u, &u), want, 1e-10));
        let w2: Vec<f64> = w.iter().map(|x| 2.0 * x).collect();
        let n2 = assemble_convection(&s.uf, &w2, 1.0).unwrap();
        assert!(close(n2.bilinear(&u, &u), 2.0 * want, 1e-10));
        let z = assemble_convection(&s.uf, &vec![0.0; w.len()], 1.0).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
        assert!(assemble_convection(&s.uf, &w[1..], 1.0).is_err());
        // pattern of the mass block covers the convection block
        let mut m = assemble_mass(&s.uf, 1.0).unwrap();
        m.add_in_pattern(&n, 0, 0, 1.0).unwrap();
    }
}

fn bjs_joint(b: &BjsBlocks) -> SparseMatrix {
    let nf = b.ff.nrows();
    let ne = b.ee.nrows();
    let mut t = crate::linalg::Triplets::new(nf + ne, nf + ne);
    t.push_matrix(&b.ff, 0, 0, 1.0);
    t.push_matrix(&b.fe, 0, nf, 1.0);
    t.push_matrix(&b.ef, nf, 0, 1.0);
    t.push_matrix(&b.ee, nf, nf, 1.0);
    t.into_csr()
}

#[test]
fn bjs_values() {
    for fam in FAMILIES {
        let s = spaces(fam, 3);
        let mut c = ProblemCoefficients::unit();
        c.mu_f = 2.0;
        c.alpha_bjs = 1.5;
        c.permeability = [[4.0, 0.0], [0.0, 4.0]];
        let gamma = c.mu_f * c.alpha_bjs / 4.0f64.sqrt();
        let rule = interface_edge_rule(s.uf.kind(), s.eta.kind(), s.lambda.degree);
        let b = assemble_bjs(&s.uf, &s.eta, &c, &s.mesh, &rule).unwrap();
        let joint = bjs_joint(&b);
        assert!(joint.symmetry_defect() < 1e-12);
        let tau = s.mesh.interface[0].tangent_f;
        let uf = interpolate(&s.uf, |_| tau).unwrap();
        let eta0 = vec![0.0; s.eta.n_dofs()];
        let x: Vec<f64> = uf.iter().chain(&eta0).copied().collect();
        assert!(close(joint.bilinear(&x, &x), gamma * s.mesh.interface_length(), 1e-12));
        // equal traces
        let f = |p: Point2| [p.x * p.x + 1.0, p.x];
        let x: Vec<f64> =
            interpolate(&s.uf, f).unwrap().into_iter().chain(interpolate(&s.eta, f).unwrap()).collect();
        assert!(joint.bilinear(&x, &x).abs() < 1e-12);
        // purely normal
        let n = s.mesh.interface[0].normal_f;
        let x: Vec<f64> = interpolate(&s.uf, |p| [n[0] * p.x, n[1] * p.x]).unwrap().into_iter().chain(eta0).collect();
        assert!(joint.bilinear(&x, &x).abs() < 1e-12);
    }
}

#[test]
fn bjs_rejects_degenerate_permeability() {
    let s = spaces(Family::Lower, 2);
    let mut c = ProblemCoefficients::unit();
    c.permeability = [[0.0, 0.0], [0.0, 1.0]];
    let rule = interface_edge_rule(s.uf.kind(), s.eta.kind(), 0);
    assert!(assemble_bjs(&s.uf, &s.eta, &c, &s.mesh, &rule).is_err());
    assert!(c.validate().is_err());
}

#[test]
fn bgamma_values() {
    for fam in FAMILIES {
        let s = spaces(fam, 4);
        let rule = interface_edge_rule(s.uf.kind(), s.eta.kind(), s.lambda.degree);
        let b = assemble_bgamma(&s.uf, &s.up, &s.eta, &s.lambda, &s.mesh, &rule).unwrap();
        let ones = vec![1.0; s.lambda.n_dofs()];
        let nf = s.mesh.interface[0].normal_f;
        let uf = interpolate(&s.uf, |_| nf).unwrap();
        assert!(close(b.l_f.bilinear(&ones, &uf), s.mesh.interface_length(), 1e-12));
        // v_f . n_f + xi . n_p = 0 with v_p = 0
        let g = |p: Point2| [p.x, 1.0 + p.x * p.x];
        let uf = interpolate(&s.uf, g).unwrap();
        let eta = interpolate(&s.eta, g).unwrap();
        let r: Vec<f64> = b.l_f.matvec(&uf).iter().zip(b.l_e.matvec(&eta)).map(|(a, b)| a + b).collect();
        assert!(r.iter().all(|v| v.abs() < 1e-12));
        assert_eq!(b.l_f.bilinear(&vec![0.0; ones.len()], &uf), 0.0);
        // Darcy block: exact pairing with the normal flux
        let up = interpolate(&s.up, |p| [0.0, 1.0 + p.x]).unwrap();
        let want = oracle_rect(|x, _| 1.0 + x, 0.0, 1.0, 0.0, 1.0);
        assert!(close(b.l_p.bilinear(&ones, &up), want, 1e-12));
        let bad = crate::fem::MultiplierSpace::new(s.lambda.degree, 1);
        assert!(assemble_bgamma(&s.uf, &s.up, &s.eta, &bad, &s.mesh, &rule).is_err());
    }
}

struct Inlet {
    p: f64,
}

impl Sources for Inlet {
    fn fluid_traction(&self, _tag: BoundaryTag, _x: Point2, n: [f64; 2], _t: f64) -> [f64; 2] {
        [-self.p * n[0], -self.p * n[1]]
    }
    fn fluid_force(&self, _p: Point2, _t: f64) -> [f64; 2] {
        [1.0, 0.0]
    }
}

#[test]
fn rhs_values() {
    let h = 0.8;
    let tags = RectangleTags { fluid_left: BoundaryTag::FInlet, ..RectangleTags::mms() };
    let mesh = Arc::new(
        build_rectangle_coupled_mesh([0.0, 2.0, -0.5, h], 0.0, 4, 3, 2, tags, DiagonalPattern::Alternating).unwrap(),
    );
    for fam in FAMILIES {
        let s = Spaces::of_family(mesh.clone(), fam).unwrap();
        let bcs = BoundaryConditions { fluid_traction: vec![BoundaryTag::FInlet], ..BoundaryConditions::default() };
        let p = 13.0;
        let r = assemble_rhs(&s, &bcs, &Inlet { p }, 0.0).unwrap();
        let mut traction_only = r.uf.clone();
        let body = assemble_rhs(&s, &BoundaryConditions::default(), &Inlet { p }, 0.0).unwrap();
        for (a, b) in traction_only.iter_mut().zip(&body.uf) {
            *a -= b;
        }
        // v_f . n_f = 1 on the inlet, whose outward normal is (-1, 0)
        let v = interpolate(&s.uf, |_| [-1.0, 0.0]).unwrap();
        assert!(close(crate::linalg::dot(&traction_only, &v), -p * h, 1e-12));
        // body force (1, 0): x-component Lagrange dofs sum to the fluid area
        let ex = interpolate(&s.uf, |_| [1.0, 0.0]).unwrap();
        assert!(close(crate::linalg::dot(&body.uf, &ex), 2.0 * h, 1e-12));
        let z = assemble_rhs(&s, &BoundaryConditions::default(), &ZeroSources, 0.3).unwrap();
        assert!(z.uf.iter().chain(&z.pf).chain(&z.up).chain(&z.pp).chain(&z.eta).all(|&v| v == 0.0));
    }
}

struct DarcyP;

impl Sources for DarcyP {
    fn darcy_pressure(&self, _tag: BoundaryTag, p: Point2, _t: f64) -> f64 {
        1.0 + p.y
    }
}

#[test]
fn natural_darcy_pressure_load() {
    for fam in FAMILIES {
        let s = spaces(fam, 3);
        let bcs = BoundaryConditions::mms();
        let r = assemble_rhs(&s, &bcs, &DarcyP, 0.0).unwrap();
        // v = (x, 0): v . n = 1 on x = 1, 0 on x = 0 and on the bottom
        let v = interpolate(&s.up, |p| [p.x, 0.0]).unwrap();
        let want = -oracle_rect(|_, y| 1.0 + y, 0.0, 1.0, -1.0, 0.0);
        assert!(close(crate::linalg::dot(&r.up, &v), want, 1e-12));
    }
}

fn zero_inputs<'a>(rhs: &'a RhsVectors, zeros: &'a [Vec<f64>; 3], dt: f64) -> StepInputs<'a> {
    StepInputs {
        dt,
        u_prev: &zeros[0],
        p_prev: &zeros[1],
        eta_prev: &zeros[2],
        eta_prev2: &zeros[2],
        rhs,
        convection: None,
    }
}

#[test]
fn compose_scaling_and_zero_rhs() {
    let s = spaces(Family::Lower, 2);
    let c = ProblemCoefficients::unit();
    let blocks = FormBlocks::assemble(&s, &c).unwrap();
    let rhs = assemble_rhs(&s, &BoundaryConditions::mms(), &ZeroSources, 0.1).unwrap();
    let zeros = [vec![0.0; s.uf.n_dofs()], vec![0.0; s.pp.n_dofs()], vec![0.0; s.eta.n_dofs()]];
    let l = s.layout();
    let (a1, a2) = (
        compose_step_system(&blocks, &c, &zero_inputs(&rhs, &zeros, 0.1)).unwrap(),
        compose_step_system(&blocks, &c, &zero_inputs(&rhs, &zeros, 0.05)).unwrap(),
    );
    assert!(a1.rhs.iter().all(|&v| v == 0.0));
    let (uf, eta, pp) = (l.offset(Field::Uf), l.offset(Field::Eta), l.offset(Field::Pp));
    // difference of mass entries scales as 1/dt and 1/dt^2
    let dm_f = a2.matrix.get(uf, uf) - a1.matrix.get(uf, uf);
    assert!(close(dm_f, blocks.mass_f.get(0, 0) * (20.0 - 10.0), 1e-12));
    let dm_p = a2.matrix.get(pp, pp) - a1.matrix.get(pp, pp);
    assert!(close(dm_p, blocks.mass_p.get(0, 0) * (20.0 - 10.0), 1e-12));
    let i = eta + 3;
    let ee = blocks.bjs.ee.get(3, 3);
    let dm_s = a2.matrix.get(i, i) - a1.matrix.get(i, i);
    assert!(close(dm_s, blocks.mass_s.get(3, 3) * (400.0 - 100.0) + ee * (20.0 - 10.0), 1e-12));
    assert_eq!(l.total(), a1.matrix.nrows());
    // pattern symmetric
    let m = &a1.matrix;
    for r in 0..m.nrows() {
        for (col, _) in m.row(r) {
            assert!(m.find(col, r).is_some(), "pattern not symmetric at ({r}, {col})");
        }
    }
}

#[test]
fn dirichlet_keeps_pattern_and_imposes_values() {
    let a = SparseMatrix::from_dense(&[vec![4.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 2.0]]);
    let mut m = a.clone();
    let mut b = vec![1.0, 2.0, 3.0];
    let mut bc = EssentialBc::new(3);
    bc.mask[2] = true;
    bc.values[2] = 5.0;
    apply_dirichlet(&mut m, &mut b, &bc.mask, &bc.values).unwrap();
    assert_eq!(m.nnz(), a.nnz());
    assert_eq!(b, vec![1.0, 2.0 - 5.0, 5.0]);
    assert_eq!(m.get(2, 2), 1.0);
    assert_eq!(m.get(1, 2), 0.0);
    assert_eq!(m.get(2, 1), 0.0);
    let (x, _) = crate::linalg::lu_solve(&m, &b).unwrap();
    assert!((x[2] - 5.0).abs() < 1e-14);
    let r = a.matvec(&x);
    assert!((r[0] - 1.0).abs() < 1e-12 && (r[1] - 2.0).abs() < 1e-12);
}

#[test]
fn stokes_projection_reproduces_discrete_fields() {
    for (family, u) in [
        (Family::Lower, (|p: Point2| [1.0 + 2.0 * p.x - p.y, 3.0 * p.x - 2.0 * p.y]) as fn(Point2) -> [f64; 2]),
        (Family::Higher, |p: Point2| [p.x * p.x - p.y, 2.0 * p.x * p.y + p.y]),
    ] {
        let s = spaces(family, 3);
        let grad = |p: Point2| {
            let h = 1e-6;
            let (a, b) = (u(Point2::new(p.x + h, p.y)), u(Point2::new(p.x - h, p.y)));
            let (c, d) = (u(Point2::new(p.x, p.y + h)), u(Point2::new(p.x, p.y - h)));
            [[(a[0] - b[0]) / (2.0 * h), (c[0] - d[0]) / (2.0 * h)], [(a[1] - b[1]) / (2.0 * h), (c[1] - d[1]) / (2.0 * h)]]
        };
        let x = stokes_projection(&s.uf, &s.pf, 1.0, &[BoundaryTag::GammaF], u, grad).unwrap();
        let iu = interpolate(&s.uf, u).unwrap();
        let err = x.iter().zip(&iu).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-8, "{family:?}: {err}");
    }
}

#[test]
fn stokes_projection_preserves_divergence() {
    let u = |p: Point2| [p.x.sin() * p.y.cos(), p.x.exp() * p.y];
    let grad = |p: Point2| [[p.x.cos() * p.y.cos(), -p.x.sin() * p.y.sin()], [p.x.exp() * p.y, p.x.exp()]];
    let div = |x: f64, y: f64| x.cos() * y.cos() + x.exp();
    let exact = -oracle_rect(div, 0.0, 1.0, 0.0, 1.0);
    for family in [Family::Lower, Family::Higher] {
        let s = spaces(family, 4);
        let x = stokes_projection(&s.uf, &s.pf, 2.0, &[BoundaryTag::GammaF], u, grad).unwrap();
        let b = assemble_b(&s.uf, &s.pf).unwrap();
        let total: f64 = b.matvec(&x).iter().sum();
        assert!(close(total, exact, 1e-10), "{family:?}: {total} vs {exact}");
        let mut bc = EssentialBc::new(s.uf.n_dofs());
        crate::fem::essential_bc_mask(&s.uf, &[BoundaryTag::GammaF], crate::fem::Components::Both, |p, _| u(p), 0.0, &mut bc)
            .unwrap();
        for i in (0..x.len()).filter(|&i| bc.mask[i]) {
            assert!((x[i] - bc.values[i]).abs() < 1e-14);
        }
    }
}
