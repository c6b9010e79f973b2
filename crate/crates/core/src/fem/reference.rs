//! Reference-triangle bases.
//!
//! Reference vertices are `(0,0)`, `(1,0)`, `(0,1)` with barycentric
//! coordinates `l0 = 1 - x - y`, `l1 = x`, `l2 = y`.

use std::sync::OnceLock;

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;

use super::ElementKind;
use crate::mesh::LOCAL_EDGES;
use crate::quadrature::{edge_rule, triangle_rule};

pub const REF_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
const GRAD_L: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

fn barycentric(p: [f64; 2]) -> [f64; 3] {
    [1.0 - p[0] - p[1], p[0], p[1]]
}

/// Values and gradients of a scalar basis at a reference point.
pub fn scalar_basis(kind: ElementKind, p: [f64; 2], vals: &mut [f64], grads: &mut [[f64; 2]]) {
    let l = barycentric(p);
    match kind {
        ElementKind::P0 => {
            vals[0] = 1.0;
            grads[0] = [0.0, 0.0];
        }
        ElementKind::P1 | ElementKind::P1dc => {
            vals[..3].copy_from_slice(&l);
            grads[..3].copy_from_slice(&GRAD_L);
        }
        ElementKind::P1Bubble => {
            vals[..3].copy_from_slice(&l);
            grads[..3].copy_from_slice(&GRAD_L);
            vals[3] = 27.0 * l[0] * l[1] * l[2];
            for d in 0..2 {
                grads[3][d] =
                    27.0 * (l[1] * l[2] * GRAD_L[0][d] + l[0] * l[2] * GRAD_L[1][d] + l[0] * l[1] * GRAD_L[2][d]);
            }
        }
        ElementKind::P2 => {
            for i in 0..3 {
                vals[i] = l[i] * (2.0 * l[i] - 1.0);
                let s = 4.0 * l[i] - 1.0;
                grads[i] = [s * GRAD_L[i][0], s * GRAD_L[i][1]];
            }
            for (e, [j, k]) in LOCAL_EDGES.iter().copied().enumerate() {
                vals[3 + e] = 4.0 * l[j] * l[k];
                for d in 0..2 {
                    grads[3 + e][d] = 4.0 * (l[k] * GRAD_L[j][d] + l[j] * GRAD_L[k][d]);
                }
            }
        }
        ElementKind::RT0 | ElementKind::RT1 => unreachable!("vector kind in scalar_basis"),
    }
}

/// A vector monomial `(m_x, m_y)` of the Raviart-Thomas spanning sets.
#[derive(Clone, Copy)]
enum VMono {
    X1,
    Xx,
    Xy,
    Y1,
    Yx,
    Yy,
    /// `(x, y)`
    Radial,
    /// `x (x, y)`
    XRadial,
    /// `y (x, y)`
    YRadial,
}

impl VMono {
    fn eval(self, p: [f64; 2]) -> [f64; 2] {
        let [x, y] = p;
        match self {
            VMono::X1 => [1.0, 0.0],
            VMono::Xx => [x, 0.0],
            VMono::Xy => [y, 0.0],
            VMono::Y1 => [0.0, 1.0],
            VMono::Yx => [0.0, x],
            VMono::Yy => [0.0, y],
            VMono::Radial => [x, y],
            VMono::XRadial => [x * x, x * y],
            VMono::YRadial => [x * y, y * y],
        }
    }

    /// `grad[c][d] = d m_c / d x_d`
    fn grad(self, p: [f64; 2]) -> [[f64; 2]; 2] {
        let [x, y] = p;
        match self {
            VMono::X1 | VMono::Y1 => [[0.0, 0.0], [0.0, 0.0]],
            VMono::Xx => [[1.0, 0.0], [0.0, 0.0]],
            VMono::Xy => [[0.0, 1.0], [0.0, 0.0]],
            VMono::Yx => [[0.0, 0.0], [1.0, 0.0]],
            VMono::Yy => [[0.0, 0.0], [0.0, 1.0]],
            VMono::Radial => [[1.0, 0.0], [0.0, 1.0]],
            VMono::XRadial => [[2.0 * x, 0.0], [y, x]],
            VMono::YRadial => [[y, x], [0.0, 2.0 * y]],
        }
    }

    fn div(self, p: [f64; 2]) -> f64 {
        let g = self.grad(p);
        g[0][0] + g[1][1]
    }
}

const RT0_MONOS: [VMono; 3] = [VMono::X1, VMono::Y1, VMono::Radial];
const RT1_MONOS: [VMono; 8] =
    [VMono::X1, VMono::Xx, VMono::Xy, VMono::Y1, VMono::Yx, VMono::Yy, VMono::XRadial, VMono::YRadial];

/// Outward unit normal and length of local reference edge `l`.
pub fn reference_edge(l: usize) -> ([f64; 2], f64) {
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    match l {
        0 => ([s2, s2], std::f64::consts::SQRT_2),
        1 => ([-1.0, 0.0], 1.0),
        _ => ([0.0, -1.0], 1.0),
    }
}

/// Point on local reference edge `l` at parameter `s`, running from the
/// lower to the higher local vertex.
pub fn reference_edge_point(l: usize, s: f64) -> [f64; 2] {
    let [a, b] = LOCAL_EDGES[l];
    let (pa, pb) = (REF_VERTICES[a], REF_VERTICES[b]);
    [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]
}

/// Edge weight functions used by the Raviart-Thomas edge moments.
pub fn edge_moment_weight(k: usize, s: f64) -> f64 {
    if k == 0 {
        1.0
    } else {
        2.0 * s - 1.0
    }
}

/// Applies the reference degrees of freedom of `kind` to a vector field.
/// Edge moments `2l + k` (or `l` for RT0) are followed by interior moments.
pub fn rt_reference_dofs(kind: ElementKind, f: &dyn Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
    let per_edge = if kind == ElementKind::RT0 { 1 } else { 2 };
    let er = edge_rule(6).unwrap();
    let mut out = Vec::with_capacity(kind.local_dofs());
    for l in 0..3 {
        let (n, len) = reference_edge(l);
        for k in 0..per_edge {
            let m = er.integrate(|s| {
                let v = f(reference_edge_point(l, s[0]));
                (v[0] * n[0] + v[1] * n[1]) * edge_moment_weight(k, s[0]) * len
            });
            out.push(m);
        }
    }
    if kind == ElementKind::RT1 {
        let tr = triangle_rule(6).unwrap();
        out.push(tr.integrate(|p| f(p)[0]));
        out.push(tr.integrate(|p| f(p)[1]));
    }
    out
}

struct RtBasis {
    monos: &'static [VMono],
    /// `coef[(j, k)]`: coefficient of monomial `j` in basis function `k`.
    coef: Mat<f64>,
}

fn build_rt(kind: ElementKind) -> RtBasis {
    let monos: &'static [VMono] = if kind == ElementKind::RT0 { &RT0_MONOS } else { &RT1_MONOS };
    let n = monos.len();
    let mut d = Mat::<f64>::zeros(n, n);
    for (j, m) in monos.iter().enumerate() {
        let col = rt_reference_dofs(kind, &|p| m.eval(p));
        for i in 0..n {
            d[(i, j)] = col[i];
        }
    }
    let coef = d.partial_piv_lu().inverse();
    RtBasis { monos, coef }
}

fn rt_basis(kind: ElementKind) -> &'static RtBasis {
    static RT0: OnceLock<RtBasis> = OnceLock::new();
    static RT1: OnceLock<RtBasis> = OnceLock::new();
    match kind {
        ElementKind::RT0 => RT0.get_or_init(|| build_rt(kind)),
        ElementKind::RT1 => RT1.get_or_init(|| build_rt(kind)),
        _ => unreachable!("scalar kind in rt_basis"),
    }
}

/// Reference Raviart-Thomas basis values, gradients and divergences.
pub fn rt_reference_basis(
    kind: ElementKind,
    p: [f64; 2],
    vals: &mut [[f64; 2]],
    grads: &mut [[[f64; 2]; 2]],
    divs: &mut [f64],
) {
    let b = rt_basis(kind);
    let n = b.monos.len();
    for k in 0..n {
        vals[k] = [0.0; 2];
        grads[k] = [[0.0; 2]; 2];
        divs[k] = 0.0;
    }
    for (j, m) in b.monos.iter().enumerate() {
        let v = m.eval(p);
        let g = m.grad(p);
        let dv = m.div(p);
        for k in 0..n {
            let c = b.coef[(j, k)];
            if c == 0.0 {
                continue;
            }
            vals[k][0] += c * v[0];
            vals[k][1] += c * v[1];
            for r in 0..2 {
                grads[k][r][0] += c * g[r][0];
                grads[k][r][1] += c * g[r][1];
            }
            divs[k] += c * dv;
        }
    }
}
