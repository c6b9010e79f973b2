//! Manufactured solution on `(0,1) x (-1,1)` with the fluid above `y = 0`.

use std::f64::consts::PI;

use crate::assembly::{stokes_projection, AssemblyError, ProblemCoefficients, Sources, Spaces};
use crate::fem::{interpolate, l2_project_discontinuous};
use crate::mesh::{BoundaryTag, Point2};
use crate::stepper::TimeState;

/// Closed-form fields and the sources that make them a solution.
///
/// The fields satisfy the interface conditions and Darcy's law only for
/// `mu_f K^{-1} = I` and the unit elastic moduli; the sources are written
/// for general densities, `s0`, `alpha` and `xi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedSolution {
    pub coefficients: ProblemCoefficients,
}

impl Default for ManufacturedSolution {
    fn default() -> Self {
        Self { coefficients: ProblemCoefficients::unit() }
    }
}

/// Common spatial profile of the fluid velocity and the displacement.
fn w(p: Point2) -> [f64; 2] {
    [-3.0 * p.x + p.y.cos(), p.y + 1.0]
}

fn grad_w(p: Point2) -> [[f64; 2]; 2] {
    [[-3.0, -p.y.sin()], [0.0, 1.0]]
}

impl ManufacturedSolution {
    pub fn new(coefficients: ProblemCoefficients) -> Self {
        Self { coefficients }
    }

    pub fn fluid_velocity(&self, p: Point2, t: f64) -> [f64; 2] {
        let a = PI * (PI * t).cos();
        let v = w(p);
        [a * v[0], a * v[1]]
    }

    /// `grad[c][d] = d u_c / d x_d`
    pub fn fluid_velocity_grad(&self, p: Point2, t: f64) -> [[f64; 2]; 2] {
        let a = PI * (PI * t).cos();
        let g = grad_w(p);
        [[a * g[0][0], a * g[0][1]], [a * g[1][0], a * g[1][1]]]
    }

    pub fn fluid_pressure(&self, p: Point2, t: f64) -> f64 {
        self.darcy_pressure(p, t) + 2.0 * PI * (PI * t).cos()
    }

    pub fn darcy_velocity(&self, p: Point2, t: f64) -> [f64; 2] {
        let a = PI * t.exp();
        [
            -a * (PI * p.x).cos() * (0.5 * PI * p.y).cos(),
            0.5 * a * (PI * p.x).sin() * (0.5 * PI * p.y).sin(),
        ]
    }

    pub fn darcy_velocity_div(&self, p: Point2, t: f64) -> f64 {
        1.25 * PI * PI * self.darcy_pressure(p, t)
    }

    pub fn darcy_pressure(&self, p: Point2, t: f64) -> f64 {
        t.exp() * (PI * p.x).sin() * (0.5 * PI * p.y).cos()
    }

    fn darcy_pressure_grad(&self, p: Point2, t: f64) -> [f64; 2] {
        let e = t.exp();
        [
            e * PI * (PI * p.x).cos() * (0.5 * PI * p.y).cos(),
            -0.5 * e * PI * (PI * p.x).sin() * (0.5 * PI * p.y).sin(),
        ]
    }

    pub fn fluid_pressure_grad(&self, p: Point2, t: f64) -> [f64; 2] {
        self.darcy_pressure_grad(p, t)
    }

    pub fn displacement(&self, p: Point2, t: f64) -> [f64; 2] {
        let a = (PI * t).sin();
        let v = w(p);
        [a * v[0], a * v[1]]
    }

    pub fn displacement_grad(&self, p: Point2, t: f64) -> [[f64; 2]; 2] {
        let a = (PI * t).sin();
        let g = grad_w(p);
        [[a * g[0][0], a * g[0][1]], [a * g[1][0], a * g[1][1]]]
    }

    /// Interface multiplier: the Darcy pressure on `y = 0`.
    pub fn multiplier(&self, x: f64, t: f64) -> f64 {
        self.darcy_pressure(Point2::new(x, 0.0), t)
    }

    /// `sigma_f = -p_f I + 2 mu_f D(u_f)`
    pub fn fluid_stress(&self, p: Point2, t: f64) -> [[f64; 2]; 2] {
        let g = self.fluid_velocity_grad(p, t);
        let pf = self.fluid_pressure(p, t);
        let mu = self.coefficients.mu_f;
        let off = mu * (g[0][1] + g[1][0]);
        [[-pf + 2.0 * mu * g[0][0], off], [off, -pf + 2.0 * mu * g[1][1]]]
    }

    /// `sigma_p = 2 mu_p D(eta) + lambda_p div(eta) I - alpha p_p I`
    pub fn poroelastic_stress(&self, p: Point2, t: f64) -> [[f64; 2]; 2] {
        let c = &self.coefficients;
        let g = self.displacement_grad(p, t);
        let iso = c.lambda_p * (g[0][0] + g[1][1]) - c.alpha * self.darcy_pressure(p, t);
        let off = c.mu_p * (g[0][1] + g[1][0]);
        [[2.0 * c.mu_p * g[0][0] + iso, off], [off, 2.0 * c.mu_p * g[1][1] + iso]]
    }

    /// Residuals of mass conservation, stress balance, normal stress and
    /// BJS at a point `(x, 0)` of the interface.
    pub fn interface_residuals(&self, x: f64, t: f64) -> [f64; 4] {
        let p = Point2::new(x, 0.0);
        let (nf, np, tau) = ([0.0, -1.0], [0.0, 1.0], [1.0, 0.0]);
        let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
        let mul = |m: [[f64; 2]; 2], v: [f64; 2]| [dot(m[0], v), dot(m[1], v)];
        let uf = self.fluid_velocity(p, t);
        let up = self.darcy_velocity(p, t);
        let a = PI * (PI * t).cos();
        let wv = w(p);
        let eta_t = [a * wv[0], a * wv[1]];
        let sf_n = mul(self.fluid_stress(p, t), nf);
        let sp_n = mul(self.poroelastic_stress(p, t), np);
        let c = &self.coefficients;
        let gamma = c.mu_f * c.alpha_bjs / c.k_tangential(tau).sqrt();
        let slip = [uf[0] - eta_t[0], uf[1] - eta_t[1]];
        [
            dot(uf, nf) + dot([eta_t[0] + up[0], eta_t[1] + up[1]], np),
            (sf_n[0] + sp_n[0]).abs() + (sf_n[1] + sp_n[1]).abs(),
            -dot(sf_n, nf) - self.darcy_pressure(p, t),
            -dot(sf_n, tau) - gamma * dot(slip, tau),
        ]
    }

    /// Fluid momentum source `rho_f d_t u + rho_f (u . grad) u - div sigma_f`.
    pub fn fluid_force(&self, p: Point2, t: f64) -> [f64; 2] {
        let c = &self.coefficients;
        let (ct, st) = ((PI * t).cos(), (PI * t).sin());
        let wv = w(p);
        let g = grad_w(p);
        let conv = [wv[0] * g[0][0] + wv[1] * g[0][1], wv[0] * g[1][0] + wv[1] * g[1][1]];
        let gp = self.fluid_pressure_grad(p, t);
        let lap = [-PI * ct * p.y.cos(), 0.0];
        let mut out = [0.0; 2];
        for k in 0..2 {
            out[k] = -c.rho_f * PI * PI * st * wv[k] + c.rho_f * PI * PI * ct * ct * conv[k] + gp[k] - c.mu_f * lap[k];
        }
        out
    }

    /// `div u_f`
    pub fn fluid_mass(&self, _p: Point2, t: f64) -> f64 {
        -2.0 * PI * (PI * t).cos()
    }

    /// `rho_p d_tt eta - div sigma_p + xi eta`
    pub fn solid_force(&self, p: Point2, t: f64) -> [f64; 2] {
        let c = &self.coefficients;
        let st = (PI * t).sin();
        let wv = w(p);
        let gp = self.darcy_pressure_grad(p, t);
        let eta = self.displacement(p, t);
        let lap = [-st * p.y.cos(), 0.0];
        let mut out = [0.0; 2];
        for k in 0..2 {
            out[k] = -c.rho_p * PI * PI * st * wv[k] - c.mu_p * lap[k] + c.alpha * gp[k] + c.xi * eta[k];
        }
        out
    }

    /// `d_t (s0 p_p + alpha div eta) + div u_p`
    pub fn darcy_source(&self, p: Point2, t: f64) -> f64 {
        let c = &self.coefficients;
        let pp = self.darcy_pressure(p, t);
        c.s0 * pp - 2.0 * PI * c.alpha * (PI * t).cos() + self.darcy_velocity_div(p, t)
    }

    /// Discrete initial data: [`ManufacturedSolution::discrete_state`] at `t = 0`.
    pub fn initial_state(&self, spaces: &Spaces, dt: f64) -> Result<TimeState, AssemblyError> {
        self.discrete_state(spaces, 0.0, dt)
    }

    /// Stokes-like projection of `u_f` (velocity fixed on `GammaF`),
    /// interpolants of `u_p`, `eta` at `t` and of `eta` at `t - dt`, L2
    /// projections of `p_p` and of the multiplier. `p_f` is left zero.
    pub fn discrete_state(&self, spaces: &Spaces, t: f64, dt: f64) -> Result<TimeState, AssemblyError> {
        let mut s = TimeState::zeros(spaces);
        s.t = t;
        s.uf = stokes_projection(
            &spaces.uf,
            &spaces.pf,
            self.coefficients.mu_f,
            &[BoundaryTag::GammaF],
            |p| self.fluid_velocity(p, t),
            |p| self.fluid_velocity_grad(p, t),
        )?;
        s.up = interpolate(&spaces.up, |p| self.darcy_velocity(p, t))?;
        s.pp = l2_project_discontinuous(&spaces.pp, |p| self.darcy_pressure(p, t))?;
        s.eta = interpolate(&spaces.eta, |p| self.displacement(p, t))?;
        s.eta_prev = interpolate(&spaces.eta, |p| self.displacement(p, t - dt))?;
        let fluid = &spaces.mesh.fluid;
        let edges = &spaces.mesh.interface;
        s.lambda = spaces.lambda.project(|e, u| {
            let [a, b] = edges[e].fluid_vertices.map(|v| fluid.vertices[v]);
            self.multiplier(a.x + u * (b.x - a.x), t)
        });
        Ok(s)
    }
}

impl Sources for ManufacturedSolution {
    fn fluid_force(&self, p: Point2, t: f64) -> [f64; 2] {
        ManufacturedSolution::fluid_force(self, p, t)
    }
    fn fluid_mass(&self, p: Point2, t: f64) -> f64 {
        ManufacturedSolution::fluid_mass(self, p, t)
    }
    fn solid_force(&self, p: Point2, t: f64) -> [f64; 2] {
        ManufacturedSolution::solid_force(self, p, t)
    }
    fn darcy_source(&self, p: Point2, t: f64) -> f64 {
        ManufacturedSolution::darcy_source(self, p, t)
    }
    fn fluid_velocity(&self, _tag: BoundaryTag, p: Point2, t: f64) -> [f64; 2] {
        ManufacturedSolution::fluid_velocity(self, p, t)
    }
    fn displacement(&self, _tag: BoundaryTag, p: Point2, t: f64) -> [f64; 2] {
        ManufacturedSolution::displacement(self, p, t)
    }
    fn darcy_velocity(&self, _tag: BoundaryTag, p: Point2, t: f64) -> [f64; 2] {
        ManufacturedSolution::darcy_velocity(self, p, t)
    }
    fn darcy_pressure(&self, _tag: BoundaryTag, p: Point2, t: f64) -> f64 {
        ManufacturedSolution::darcy_pressure(self, p, t)
    }
}
