//! Quadrature on the reference triangle `{x, y >= 0, x + y <= 1}` and the unit interval.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("no quadrature rule of degree {0} (supported: 1..=10)")]
pub struct UnsupportedDegree(pub usize);

pub const MAX_DEGREE: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<const D: usize> {
    pub points: Vec<[f64; D]>,
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

impl<const D: usize> QuadratureRule<D> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn([f64; D]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(*p)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; D], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

pub type TriangleRule = QuadratureRule<2>;
pub type EdgeRule = QuadratureRule<1>;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for k in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Tensor Gauss-Legendre rule on the unit square collapsed onto the
/// triangle by `(u, v) -> (u, v (1 - u))`.
fn collapsed_rule(n: usize) -> TriangleRule {
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        let u = 0.5 * (x[i] + 1.0);
        let wu = 0.5 * w[i];
        for j in 0..n {
            let v = 0.5 * (x[j] + 1.0);
            let wv = 0.5 * w[j];
            points.push([u, v * (1.0 - u)]);
            weights.push(wu * wv * (1.0 - u));
        }
    }
    TriangleRule { points, weights, exact_degree: 2 * n - 2 }
}

pub fn triangle_rule(degree: usize) -> Result<TriangleRule, UnsupportedDegree> {
    match degree {
        1 => Ok(TriangleRule { points: vec![[1.0 / 3.0, 1.0 / 3.0]], weights: vec![0.5], exact_degree: 1 }),
        2 => {
            let (a, b) = (1.0 / 6.0, 2.0 / 3.0);
            Ok(TriangleRule {
                points: vec![[a, a], [b, a], [a, b]],
                weights: vec![1.0 / 6.0; 3],
                exact_degree: 2,
            })
        }
        3..=MAX_DEGREE => Ok(collapsed_rule(degree.div_ceil(2) + 1)),
        _ => Err(UnsupportedDegree(degree)),
    }
}

pub fn edge_rule(degree: usize) -> Result<EdgeRule, UnsupportedDegree> {
    if !(1..=MAX_DEGREE).contains(&degree) {
        return Err(UnsupportedDegree(degree));
    }
    let n = (degree + 2) / 2;
    let (x, w) = gauss_legendre(n);
    Ok(EdgeRule {
        points: x.iter().map(|&z| [0.5 * (z + 1.0)]).collect(),
        weights: w.iter().map(|&v| 0.5 * v).collect(),
        exact_degree: 2 * n - 1,
    })
}
