//! Space and space-time error norms against the manufactured solution.

use serde::Serialize;

use crate::assembly::Spaces;
use crate::fem::{CellValues, DofMap, FieldValue, Tabulation};
use crate::mesh::Point2;
use crate::quadrature::{edge_rule, triangle_rule, MAX_DEGREE};
use crate::stepper::{FpsiSolver, Observer, SolverError, StepReport, TimeState};

use super::ManufacturedSolution;

/// The seven reported norms, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Norm {
    /// `l2(H1)` of the fluid velocity.
    FluidVelocity,
    /// `l2(L2)` of the fluid pressure.
    FluidPressure,
    /// `l2(L2)` of the Darcy velocity.
    DarcyVelocity,
    /// `l2(L2)` of the Darcy velocity divergence.
    DarcyDivergence,
    /// `linf(L2)` of the Darcy pressure.
    DarcyPressure,
    /// `linf(H1)` of the displacement.
    Displacement,
    /// `l2(L2(Gamma))` of the multiplier.
    Multiplier,
}

impl Norm {
    pub const ALL: [Norm; 7] = [
        Norm::FluidVelocity,
        Norm::FluidPressure,
        Norm::DarcyVelocity,
        Norm::DarcyDivergence,
        Norm::DarcyPressure,
        Norm::Displacement,
        Norm::Multiplier,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// CSV column name.
    pub fn column(self) -> &'static str {
        match self {
            Norm::FluidVelocity => "e_uf_l2H1",
            Norm::FluidPressure => "e_pf_l2L2",
            Norm::DarcyVelocity => "e_up_l2L2",
            Norm::DarcyDivergence => "e_divup_l2L2",
            Norm::DarcyPressure => "e_pp_linfL2",
            Norm::Displacement => "e_eta_linfH1",
            Norm::Multiplier => "e_lambda_l2L2",
        }
    }

    /// `true` for the max-in-time norms.
    pub fn is_linf(self) -> bool {
        matches!(self, Norm::DarcyPressure | Norm::Displacement)
    }
}

/// Squared norms of the error and of the exact field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SquaredNorms {
    pub error: f64,
    pub exact: f64,
}

/// Which parts of a field enter a norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceNorm {
    L2,
    H1,
    Div,
}

/// Values of a discrete field at the quadrature points of one cell.
pub(crate) fn cell_field_values(dm: &DofMap, coeffs: &[f64], cell: usize, cv: &CellValues, out: &mut Vec<FieldValue>) {
    let nq = cv.n_points();
    let n = cv.ndof;
    out.clear();
    out.resize(nq, FieldValue::default());
    if dm.kind().is_rt() {
        for (q, fv) in out.iter_mut().enumerate() {
            for i in 0..n {
                let u = coeffs[dm.global(cell, i, 0)];
                let k = q * n + i;
                for c in 0..2 {
                    fv.value[c] += u * cv.vvals[k][c];
                    for d in 0..2 {
                        fv.grad[c][d] += u * cv.vgrads[k][c][d];
                    }
                }
                fv.div += u * cv.divs[k];
            }
        }
    } else {
        for (q, fv) in out.iter_mut().enumerate() {
            for comp in 0..dm.components() {
                for i in 0..n {
                    let u = coeffs[dm.global(cell, i, comp)];
                    let k = q * n + i;
                    fv.value[comp] += u * cv.vals[k];
                    fv.grad[comp][0] += u * cv.grads[k][0];
                    fv.grad[comp][1] += u * cv.grads[k][1];
                }
            }
            if dm.components() == 2 {
                fv.div = fv.grad[0][0] + fv.grad[1][1];
            }
        }
    }
}

fn part_sq(v: &FieldValue, norm: SpaceNorm) -> f64 {
    let l2 = v.value[0] * v.value[0] + v.value[1] * v.value[1];
    match norm {
        SpaceNorm::L2 => l2,
        SpaceNorm::H1 => l2 + v.grad.iter().flatten().map(|g| g * g).sum::<f64>(),
        SpaceNorm::Div => v.div * v.div,
    }
}

/// `|u - u_h|^2` and `|u|^2` in the chosen norm. Scalar fields put their
/// value in component 0. Quadrature of degree `2 k + 4` (at most the
/// largest supported rule).
pub fn field_error(
    dm: &DofMap,
    coeffs: &[f64],
    norm: SpaceNorm,
    exact: impl Fn(Point2) -> FieldValue,
) -> Result<SquaredNorms, SolverError> {
    let degree = (2 * dm.kind().degree() + 4).min(MAX_DEGREE);
    let rule = triangle_rule(degree).expect("supported degree");
    let tab = Tabulation::from_rule(dm.kind(), &rule);
    let mut cv = CellValues::default();
    let mut vals = Vec::new();
    let mut out = SquaredNorms::default();
    for cell in 0..dm.mesh().n_cells() {
        let geom = dm.geometry(cell)?;
        cv.reinit(&tab, &geom, dm.cell_signs(cell));
        cell_field_values(dm, coeffs, cell, &cv, &mut vals);
        for (q, vh) in vals.iter().enumerate() {
            let ex = exact(geom.map(tab.points[q]));
            let mut e = ex;
            for c in 0..2 {
                e.value[c] -= vh.value[c];
                for d in 0..2 {
                    e.grad[c][d] -= vh.grad[c][d];
                }
            }
            e.div -= vh.div;
            out.error += cv.jxw[q] * part_sq(&e, norm);
            out.exact += cv.jxw[q] * part_sq(&ex, norm);
        }
    }
    Ok(out)
}

/// Per-norm squared space norms of one state at its time.
pub fn state_errors(spaces: &Spaces, sol: &ManufacturedSolution, state: &TimeState) -> Result<[SquaredNorms; 7], SolverError> {
    let t = state.t;
    let vector = |value: [f64; 2], grad: [[f64; 2]; 2]| FieldValue { value, grad, div: grad[0][0] + grad[1][1] };
    let scalar = |v: f64| FieldValue { value: [v, 0.0], ..FieldValue::default() };
    let uf = field_error(&spaces.uf, &state.uf, SpaceNorm::H1, |p| {
        vector(sol.fluid_velocity(p, t), sol.fluid_velocity_grad(p, t))
    })?;
    let pf = field_error(&spaces.pf, &state.pf, SpaceNorm::L2, |p| scalar(sol.fluid_pressure(p, t)))?;
    let up = field_error(&spaces.up, &state.up, SpaceNorm::L2, |p| FieldValue {
        value: sol.darcy_velocity(p, t),
        ..FieldValue::default()
    })?;
    let div = field_error(&spaces.up, &state.up, SpaceNorm::Div, |p| FieldValue {
        div: sol.darcy_velocity_div(p, t),
        ..FieldValue::default()
    })?;
    let pp = field_error(&spaces.pp, &state.pp, SpaceNorm::L2, |p| scalar(sol.darcy_pressure(p, t)))?;
    let eta =
        field_error(&spaces.eta, &state.eta, SpaceNorm::H1, |p| vector(sol.displacement(p, t), sol.displacement_grad(p, t)))?;
    let lambda = multiplier_error(spaces, &state.lambda, |x| sol.multiplier(x, t));
    Ok([uf, pf, up, div, pp, eta, lambda])
}

/// `|lambda - lambda_h|^2_{L2(Gamma)}` for an interface function of `x`.
pub fn multiplier_error(spaces: &Spaces, coeffs: &[f64], exact: impl Fn(f64) -> f64) -> SquaredNorms {
    let rule = edge_rule(8).expect("supported degree");
    let fluid = &spaces.mesh.fluid;
    let mut out = SquaredNorms::default();
    for (e, edge) in spaces.mesh.interface.iter().enumerate() {
        let [a, b] = edge.fluid_vertices.map(|v| fluid.vertices[v]);
        for (s, w) in rule.iter() {
            let ex = exact(a.x + s[0] * (b.x - a.x));
            let d = ex - spaces.lambda.eval(coeffs, e, s[0]);
            out.error += w * edge.length * d * d;
            out.exact += w * edge.length * ex * ex;
        }
    }
    out
}

/// Composed space-time errors of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorNorms {
    pub absolute: [f64; 7],
    pub exact: [f64; 7],
    /// `absolute / exact`, or `absolute` where the exact norm vanishes.
    pub relative: [f64; 7],
    /// Norms that fell back to absolute values.
    pub absolute_fallback: [bool; 7],
}

impl ErrorNorms {
    pub fn get(&self, n: Norm) -> f64 {
        self.relative[n.index()]
    }
}

/// Observer composing the errors over all completed steps: `dt`-weighted
/// sums for the `l2` norms and maxima for the `linf` norms.
pub struct ErrorObserver {
    solution: ManufacturedSolution,
    dt: f64,
    error: [f64; 7],
    exact: [f64; 7],
}

impl ErrorObserver {
    pub fn new(solution: ManufacturedSolution, dt: f64) -> Self {
        Self { solution, dt, error: [0.0; 7], exact: [0.0; 7] }
    }

    pub fn add(&mut self, spaces: &Spaces, state: &TimeState) -> Result<(), SolverError> {
        let sq = state_errors(spaces, &self.solution, state)?;
        for n in Norm::ALL {
            let k = n.index();
            if n.is_linf() {
                self.error[k] = self.error[k].max(sq[k].error);
                self.exact[k] = self.exact[k].max(sq[k].exact);
            } else {
                self.error[k] += self.dt * sq[k].error;
                self.exact[k] += self.dt * sq[k].exact;
            }
        }
        Ok(())
    }

    pub fn norms(&self) -> ErrorNorms {
        let absolute = self.error.map(f64::sqrt);
        let exact = self.exact.map(f64::sqrt);
        let mut relative = [0.0; 7];
        let mut absolute_fallback = [false; 7];
        for k in 0..7 {
            if exact[k] > 0.0 {
                relative[k] = absolute[k] / exact[k];
            } else {
                relative[k] = absolute[k];
                absolute_fallback[k] = true;
            }
        }
        ErrorNorms { absolute, exact, relative, absolute_fallback }
    }
}

impl Observer for ErrorObserver {
    fn observe(&mut self, solver: &FpsiSolver, report: Option<&StepReport>) -> Result<(), SolverError> {
        if report.is_some() {
            self.add(&solver.problem().spaces, solver.state())?;
        }
        Ok(())
    }
}
