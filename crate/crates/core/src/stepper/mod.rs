//! Backward Euler time integration with one-step-lagged convection.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{
    apply_dirichlet, assemble_convection, assemble_rhs, AssemblyError, BoundaryConditions, Field, FormBlocks,
    ProblemCoefficients, RhsVectors, Sources, Spaces, StepInputs, SystemLayout,
};
use crate::fem::{essential_bc_mask, Components, EssentialBc, FemError};
use crate::linalg::{norm2, DirectSolver, LinalgError, LinearSolveReport, SparseMatrix};

mod energy;

pub use energy::{
    small_data_check, EnergyConstants, EnergyReport, EnergyTerms, EnergyTracker, SmallDataReport, StepDiagnostics,
};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("step {step} (t = {t}): {source}")]
    Step {
        step: usize,
        t: f64,
        #[source]
        source: Box<SolverError>,
    },
    #[error("observer failed: {0}")]
    Observer(String),
}

/// Everything that defines one coupled problem.
#[derive(Clone)]
pub struct Problem {
    pub spaces: Spaces,
    pub coefficients: ProblemCoefficients,
    pub bcs: BoundaryConditions,
    pub sources: Arc<dyn Sources>,
}

fn default_residual_tol() -> f64 {
    1e-8
}

fn default_output_every() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Bound on every per-block relative residual.
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    /// Observers that write files act every this many steps.
    #[serde(default = "default_output_every")]
    pub output_every: usize,
}

impl SolverConfig {
    pub fn new(dt: f64, t_final: f64) -> Self {
        Self { dt, t_final, residual_tol: default_residual_tol(), output_every: default_output_every() }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            return Err(SolverError::Config(format!("dt must lie in (0, 1], got {}", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(SolverError::Config(format!("t_final must be nonnegative, got {}", self.t_final)));
        }
        if !(self.residual_tol > 0.0) {
            return Err(SolverError::Config(format!("residual_tol must be positive, got {}", self.residual_tol)));
        }
        if self.output_every == 0 {
            return Err(SolverError::Config("output_every must be at least 1".into()));
        }
        self.n_steps().map(|_| ())
    }

    /// `N = T / dt`, required to be an integer up to rounding.
    pub fn n_steps(&self) -> Result<usize, SolverError> {
        let r = self.t_final / self.dt;
        let n = r.round();
        if (r - n).abs() > 1e-9 * r.max(1.0) {
            return Err(SolverError::Config(format!(
                "t_final = {} is not an integer multiple of dt = {}",
                self.t_final, self.dt
            )));
        }
        Ok(n as usize)
    }
}

/// Discrete unknowns at `t_n` together with `eta` at `t_{n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeState {
    pub t: f64,
    pub step: usize,
    pub uf: Vec<f64>,
    pub pf: Vec<f64>,
    pub up: Vec<f64>,
    pub pp: Vec<f64>,
    pub eta: Vec<f64>,
    pub lambda: Vec<f64>,
    pub eta_prev: Vec<f64>,
}

impl TimeState {
    pub fn zeros(spaces: &Spaces) -> Self {
        Self {
            t: 0.0,
            step: 0,
            uf: vec![0.0; spaces.uf.n_dofs()],
            pf: vec![0.0; spaces.pf.n_dofs()],
            up: vec![0.0; spaces.up.n_dofs()],
            pp: vec![0.0; spaces.pp.n_dofs()],
            eta: vec![0.0; spaces.eta.n_dofs()],
            lambda: vec![0.0; spaces.lambda.n_dofs()],
            eta_prev: vec![0.0; spaces.eta.n_dofs()],
        }
    }

    pub fn field(&self, f: Field) -> &[f64] {
        match f {
            Field::Uf => &self.uf,
            Field::Pf => &self.pf,
            Field::Up => &self.up,
            Field::Pp => &self.pp,
            Field::Eta => &self.eta,
            Field::Lambda => &self.lambda,
        }
    }

    fn field_mut(&mut self, f: Field) -> &mut Vec<f64> {
        match f {
            Field::Uf => &mut self.uf,
            Field::Pf => &mut self.pf,
            Field::Up => &mut self.up,
            Field::Pp => &mut self.pp,
            Field::Eta => &mut self.eta,
            Field::Lambda => &mut self.lambda,
        }
    }

    /// `d_t eta` at `t_n`.
    pub fn eta_rate(&self, dt: f64) -> Vec<f64> {
        self.eta.iter().zip(&self.eta_prev).map(|(a, b)| (a - b) / dt).collect()
    }

    pub fn check(&self, layout: &SystemLayout) -> Result<(), SolverError> {
        for f in Field::ALL {
            if self.field(f).len() != layout.size(f) {
                return Err(SolverError::Config(format!(
                    "state field {} has length {}, expected {}",
                    f.name(),
                    self.field(f).len(),
                    layout.size(f)
                )));
            }
        }
        if self.eta_prev.len() != layout.size(Field::Eta) {
            return Err(SolverError::Config("eta_prev has the wrong length".into()));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        Field::ALL.iter().flat_map(|&f| self.field(f).iter()).chain(&self.eta_prev).fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Outcome of one step.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub step: usize,
    pub t: f64,
    /// Per field: `|r_B| / max(|b_B|, | |A_B| |x| |)`.
    pub residuals: [f64; 6],
    pub solve: LinearSolveReport,
    /// Loads at `t` (volume sources and natural boundary data).
    pub loads: RhsVectors,
}

impl StepReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, &r| m.max(r))
    }
}

/// Called with the initial state (`report = None`) and after every step.
pub trait Observer {
    fn observe(&mut self, solver: &FpsiSolver, report: Option<&StepReport>) -> Result<(), SolverError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepSummary {
    pub step: usize,
    pub t: f64,
    pub residuals: [f64; 6],
    pub relative_residual: f64,
    pub pivot_growth: f64,
    pub factor_seconds: f64,
    pub solve_seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunSummary {
    pub steps: Vec<StepSummary>,
    pub max_residuals: [f64; 6],
}

impl RunSummary {
    pub fn max_residual(&self, f: Field) -> f64 {
        self.max_residuals[f.index()]
    }
}

/// Per-block residual of `A x = b` relative to the block scale.
pub fn block_residuals(a: &SparseMatrix, x: &[f64], b: &[f64], layout: &SystemLayout) -> [f64; 6] {
    let ax = a.matvec(x);
    let mut abs_ax = vec![0.0; x.len()];
    for (i, out) in abs_ax.iter_mut().enumerate() {
        *out = a.row(i).map(|(j, v)| (v * x[j]).abs()).sum();
    }
    let mut out = [0.0; 6];
    for f in Field::ALL {
        let rg = layout.range(f);
        let r: Vec<f64> = rg.clone().map(|i| b[i] - ax[i]).collect();
        let scale = norm2(&b[rg.clone()]).max(norm2(&abs_ax[rg]));
        let rn = norm2(&r);
        out[f.index()] = if scale > 0.0 { rn / scale } else { rn };
    }
    out
}

/// Time integrator for the fully discrete scheme.
pub struct FpsiSolver {
    problem: Problem,
    config: SolverConfig,
    blocks: FormBlocks,
    static_matrix: SparseMatrix,
    direct: DirectSolver,
    state: TimeState,
    t0: f64,
}

impl FpsiSolver {
    pub fn new(problem: Problem, config: SolverConfig, initial: TimeState) -> Result<Self, SolverError> {
        config.validate()?;
        let blocks = FormBlocks::assemble(&problem.spaces, &problem.coefficients)?;
        initial.check(&blocks.layout)?;
        let static_matrix = blocks.static_matrix(&problem.coefficients, config.dt);
        let t0 = initial.t - initial.step as f64 * config.dt;
        Ok(Self { problem, config, blocks, static_matrix, direct: DirectSolver::new(), state: initial, t0 })
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn blocks(&self) -> &FormBlocks {
        &self.blocks
    }

    pub fn layout(&self) -> SystemLayout {
        self.blocks.layout
    }

    pub fn state(&self) -> &TimeState {
        &self.state
    }

    pub fn into_state(self) -> TimeState {
        self.state
    }

    /// Essential data of every field at time `t`, in global numbering.
    pub fn essential_bcs(&self, t: f64) -> Result<EssentialBc, SolverError> {
        let s = &self.problem.spaces;
        let src = &self.problem.sources;
        let bcs = &self.problem.bcs;
        let layout = self.layout();
        let mut global = EssentialBc::new(layout.total());
        let mut merge = |f: Field, bc: &EssentialBc| {
            let off = layout.offset(f);
            for (i, (&m, &v)) in bc.mask.iter().zip(&bc.values).enumerate() {
                if m {
                    global.mask[off + i] = true;
                    global.values[off + i] = v;
                }
            }
        };
        let mut uf = EssentialBc::new(s.uf.n_dofs());
        for &tag in &bcs.fluid_dirichlet {
            essential_bc_mask(&s.uf, &[tag], Components::Both, |p, t| src.fluid_velocity(tag, p, t), t, &mut uf)?;
        }
        merge(Field::Uf, &uf);
        let mut eta = EssentialBc::new(s.eta.n_dofs());
        for &(tag, comps) in &bcs.displacement {
            essential_bc_mask(&s.eta, &[tag], comps, |p, t| src.displacement(tag, p, t), t, &mut eta)?;
        }
        merge(Field::Eta, &eta);
        let mut up = EssentialBc::new(s.up.n_dofs());
        for &tag in &bcs.darcy_flux {
            essential_bc_mask(&s.up, &[tag], Components::Both, |p, t| src.darcy_velocity(tag, p, t), t, &mut up)?;
        }
        merge(Field::Up, &up);
        Ok(global)
    }

    /// Advances from `t_n` to `t_{n+1}`.
    pub fn step(&mut self) -> Result<StepReport, SolverError> {
        let n = self.state.step;
        let t1 = self.t0 + (n + 1) as f64 * self.config.dt;
        self.step_inner(t1).map_err(|e| SolverError::Step { step: n + 1, t: t1, source: Box::new(e) })
    }

    fn step_inner(&mut self, t1: f64) -> Result<StepReport, SolverError> {
        let p = &self.problem;
        let dt = self.config.dt;
        let conv = assemble_convection(&p.spaces.uf, &self.state.uf, p.coefficients.rho_f)?;
        let loads = assemble_rhs(&p.spaces, &p.bcs, p.sources.as_ref(), t1)?;
        let inputs = StepInputs {
            dt,
            u_prev: &self.state.uf,
            p_prev: &self.state.pp,
            eta_prev: &self.state.eta,
            eta_prev2: &self.state.eta_prev,
            rhs: &loads,
            convection: None,
        };
        let mut b = self.blocks.step_rhs(&p.coefficients, &inputs)?;
        let mut a = self.static_matrix.clone();
        let off = self.layout().offset(Field::Uf);
        a.add_in_pattern(&conv, off, off, 1.0)?;
        let bc = self.essential_bcs(t1)?;
        apply_dirichlet(&mut a, &mut b, &bc.mask, &bc.values)?;
        let (x, solve) = self.direct.solve(&a, &b)?;
        let layout = self.layout();
        let residuals = block_residuals(&a, &x, &b, &layout);
        let old_eta = std::mem::take(&mut self.state.eta);
        self.state.eta_prev = old_eta;
        for f in Field::ALL {
            *self.state.field_mut(f) = layout.field(&x, f).to_vec();
        }
        self.state.step += 1;
        self.state.t = t1;
        Ok(StepReport { step: self.state.step, t: t1, residuals, solve, loads })
    }

    /// Runs the remaining steps up to `t_final`, calling every observer on
    /// the initial state and after each step.
    pub fn run(&mut self, observers: &mut [&mut dyn Observer]) -> Result<RunSummary, SolverError> {
        let n_total = self.config.n_steps()?;
        let mut summary = RunSummary::default();
        if self.state.step == 0 {
            for o in observers.iter_mut() {
                o.observe(self, None)?;
            }
        }
        while self.state.step < n_total {
            let report = self.step()?;
            for (k, r) in report.residuals.iter().enumerate() {
                summary.max_residuals[k] = summary.max_residuals[k].max(*r);
            }
            summary.steps.push(StepSummary {
                step: report.step,
                t: report.t,
                residuals: report.residuals,
                relative_residual: report.solve.relative_residual(),
                pivot_growth: report.solve.pivot_growth,
                factor_seconds: report.solve.factor_time.as_secs_f64(),
                solve_seconds: report.solve.solve_time.as_secs_f64(),
            });
            log::debug!(
                "step {} t={:.6e} max block residual {:.3e}",
                report.step,
                report.t,
                report.max_residual()
            );
            for o in observers.iter_mut() {
                o.observe(self, Some(&report))?;
            }
        }
        Ok(summary)
    }
}

#[cfg(test)]
mod tests;
