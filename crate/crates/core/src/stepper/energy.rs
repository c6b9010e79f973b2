//! Stability diagnostics: the energy bound of the fully discrete scheme and
//! the discrete small data condition.

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_af, assemble_ape, assemble_multiplier_mass, Field, ProblemCoefficients, Sources, Spaces};
use crate::fem::{integrate, EssentialBc};
use crate::linalg::{DirectSolver, Factorization, SparseMatrix};

use super::{FpsiSolver, Observer, SolverError, StepReport, TimeState};

/// Sobolev, Korn and inf-sup constants entering the bounds. The defaults
/// are 1; no values are known for the concrete domains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConstants {
    #[serde(default = "one")]
    pub s_f: f64,
    #[serde(default = "one")]
    pub k_f: f64,
    #[serde(default = "one")]
    pub beta_p: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for EnergyConstants {
    fn default() -> Self {
        Self { s_f: 1.0, k_f: 1.0, beta_p: 1.0 }
    }
}

impl EnergyConstants {
    pub fn validate(&self) -> Result<(), SolverError> {
        for (name, v) in [("s_f", self.s_f), ("k_f", self.k_f), ("beta_p", self.beta_p)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SolverError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Energy quantities of one discrete state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub t: f64,
    /// `rho_f |u_f|^2`
    pub fluid_kinetic: f64,
    /// `rho_p |d_t eta|^2`
    pub solid_kinetic: f64,
    /// `a_p^e(eta, eta)` without the spring term.
    pub elastic: f64,
    /// `s0 |p_p|^2`
    pub storage: f64,
    /// `2 mu_f |D(u_f)|^2`
    pub viscous: f64,
    /// `a_p^d(u_p, u_p)`
    pub darcy: f64,
    /// `|u_f - d_t eta|^2_BJS`
    pub bjs: f64,
    /// `C_1` at this time from the discrete loads.
    pub c1: f64,
}

/// Left-hand side terms of the energy bound, each with its own time norm.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnergyTerms {
    pub fluid_kinetic_linf: f64,
    pub viscous_l2: f64,
    pub bjs_l2: f64,
    pub solid_kinetic_linf: f64,
    pub strain_linf: f64,
    pub divergence_linf: f64,
    pub storage_linf: f64,
    pub darcy_l2: f64,
    pub pressure_l2: f64,
    pub multiplier_l2: f64,
}

impl EnergyTerms {
    pub fn total(&self) -> f64 {
        self.fluid_kinetic_linf
            + self.viscous_l2
            + self.bjs_l2
            + self.solid_kinetic_linf
            + self.strain_linf
            + self.divergence_linf
            + self.storage_linf
            + self.darcy_l2
            + self.pressure_l2
            + self.multiplier_l2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub terms: EnergyTerms,
    pub lhs: f64,
    /// `dt sum_j C_1^{j+1}`
    pub c1_sum: f64,
    /// Energy of the initial data; zero for the homogeneous start.
    pub initial_energy: f64,
    /// `exp(T) (dt sum_j C_1^{j+1} + initial_energy)`
    pub rhs: f64,
    pub holds: bool,
    pub series: Vec<StepDiagnostics>,
}

/// `sqrt(F^T M^{-1} F)` over the dofs not fixed by essential conditions:
/// the L2 norm of the discrete Riesz representative of a load.
struct DualNorm {
    free: Vec<usize>,
    m: SparseMatrix,
    lu: Factorization,
}

impl DualNorm {
    fn new(mass: &SparseMatrix, fixed: &[bool]) -> Result<Self, SolverError> {
        let free: Vec<usize> = (0..mass.nrows()).filter(|&i| !fixed[i]).collect();
        let m = mass.select(&free, &free);
        let lu = DirectSolver::new().factor(&m)?;
        Ok(Self { free, m, lu })
    }

    fn norm_sq(&self, f: &[f64]) -> Result<f64, SolverError> {
        if self.free.is_empty() {
            return Ok(0.0);
        }
        let ff: Vec<f64> = self.free.iter().map(|&i| f[i]).collect();
        let (y, _) = self.lu.solve(&self.m, &ff)?;
        Ok(crate::linalg::dot(&ff, &y).max(0.0))
    }
}

/// Observer accumulating the terms of the energy bound over a run.
///
/// `C_1` is evaluated with discrete dual norms of the assembled loads of
/// the `u_f`, `eta` and `p_p` equations, which bound the corresponding
/// terms of the energy identity and also account for natural boundary data.
pub struct EnergyTracker {
    coeffs: ProblemCoefficients,
    constants: EnergyConstants,
    dt: f64,
    strain: SparseMatrix,
    divergence: SparseMatrix,
    mass_lambda: SparseMatrix,
    dual_f: DualNorm,
    dual_s: DualNorm,
    dual_p: DualNorm,
    terms: EnergyTerms,
    c1_sum: f64,
    initial_energy: f64,
    t_start: f64,
    t_last: f64,
    series: Vec<StepDiagnostics>,
}

impl EnergyTracker {
    pub fn new(solver: &FpsiSolver, constants: EnergyConstants) -> Result<Self, SolverError> {
        constants.validate()?;
        let p = solver.problem();
        let s = &p.spaces;
        let c = p.coefficients;
        let layout = solver.layout();
        let bc: EssentialBc = solver.essential_bcs(solver.state().t)?;
        let fixed = |f: Field| bc.mask[layout.range(f)].to_vec();
        let blocks = solver.blocks();
        Ok(Self {
            coeffs: c,
            constants,
            dt: solver.config().dt,
            strain: assemble_af(&s.eta, c.mu_p)?,
            divergence: assemble_ape(&s.eta, 0.0, c.lambda_p, 0.0)?,
            mass_lambda: assemble_multiplier_mass(&s.lambda, &s.mesh),
            dual_f: DualNorm::new(&blocks.mass_f, &fixed(Field::Uf))?,
            dual_s: DualNorm::new(&blocks.mass_s, &fixed(Field::Eta))?,
            dual_p: DualNorm::new(&blocks.mass_p, &vec![false; layout.size(Field::Pp)])?,
            terms: EnergyTerms::default(),
            c1_sum: 0.0,
            initial_energy: 0.0,
            t_start: solver.state().t,
            t_last: solver.state().t,
            series: Vec::new(),
        })
    }

    fn diagnostics(&self, solver: &FpsiSolver, state: &TimeState) -> StepDiagnostics {
        let b = solver.blocks();
        let c = &self.coeffs;
        let rate = state.eta_rate(self.dt);
        let slip: Vec<f64> = state.uf.iter().chain(&rate).copied().collect();
        let nf = state.uf.len();
        let bjs = b.bjs.ff.bilinear(&slip[..nf], &slip[..nf])
            + b.bjs.fe.bilinear(&slip[..nf], &slip[nf..])
            + b.bjs.ef.bilinear(&slip[nf..], &slip[..nf])
            + b.bjs.ee.bilinear(&slip[nf..], &slip[nf..]);
        StepDiagnostics {
            step: state.step,
            t: state.t,
            fluid_kinetic: c.rho_f * b.mass_f.bilinear(&state.uf, &state.uf),
            solid_kinetic: c.rho_p * b.mass_s.bilinear(&rate, &rate),
            elastic: self.strain.bilinear(&state.eta, &state.eta) + self.divergence.bilinear(&state.eta, &state.eta),
            storage: c.s0 * b.mass_p.bilinear(&state.pp, &state.pp),
            viscous: b.a_f.bilinear(&state.uf, &state.uf),
            darcy: b.a_pd.bilinear(&state.up, &state.up),
            bjs: bjs.max(0.0),
            c1: 0.0,
        }
    }

    fn c1(&self, report: &StepReport) -> Result<f64, SolverError> {
        let c = &self.coeffs;
        let kb = c.k_min() * self.constants.beta_p * self.constants.beta_p;
        Ok(2.0 / c.rho_f * self.dual_f.norm_sq(&report.loads.uf)?
            + 2.0 / c.rho_p * self.dual_s.norm_sq(&report.loads.eta)?
            + 2.0 / kb * self.dual_p.norm_sq(&report.loads.pp)?)
    }

    pub fn report(&self) -> EnergyReport {
        let lhs = self.terms.total();
        let rhs = (self.t_last - self.t_start).exp() * (self.c1_sum + self.initial_energy);
        EnergyReport {
            terms: self.terms,
            lhs,
            c1_sum: self.c1_sum,
            initial_energy: self.initial_energy,
            rhs,
            holds: lhs <= rhs * (1.0 + 1e-12) + f64::MIN_POSITIVE,
            series: self.series.clone(),
        }
    }
}

impl Observer for EnergyTracker {
    fn observe(&mut self, solver: &FpsiSolver, report: Option<&StepReport>) -> Result<(), SolverError> {
        let state = solver.state();
        let mut d = self.diagnostics(solver, state);
        let Some(report) = report else {
            // Twice the natural energy of the initial data, matching the
            // scaling of the elastic terms in the bound.
            self.initial_energy = d.fluid_kinetic + d.solid_kinetic + d.elastic + d.storage;
            self.series.push(d);
            return Ok(());
        };
        let c = &self.coeffs;
        let dt = self.dt;
        let kb = c.k_min() * self.constants.beta_p * self.constants.beta_p;
        d.c1 = self.c1(report)?;
        let t = &mut self.terms;
        t.fluid_kinetic_linf = t.fluid_kinetic_linf.max(0.5 * d.fluid_kinetic);
        t.viscous_l2 += dt * 1.5 * d.viscous;
        t.bjs_l2 += dt * 2.0 * d.bjs;
        t.solid_kinetic_linf = t.solid_kinetic_linf.max(0.5 * d.solid_kinetic);
        t.strain_linf = t.strain_linf.max(self.strain.bilinear(&state.eta, &state.eta));
        t.divergence_linf = t.divergence_linf.max(self.divergence.bilinear(&state.eta, &state.eta));
        t.storage_linf = t.storage_linf.max(d.storage);
        t.darcy_l2 += dt * d.darcy;
        let b = solver.blocks();
        t.pressure_l2 += dt * 0.5 * kb * b.mass_p.bilinear(&state.pp, &state.pp);
        t.multiplier_l2 += dt * kb * self.mass_lambda.bilinear(&state.lambda, &state.lambda);
        self.c1_sum += dt * d.c1;
        self.t_last = state.t;
        self.series.push(d);
        Ok(())
    }
}

/// Evaluation of the discrete small data condition for `n = 0..N-1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallDataReport {
    /// Left-hand side for each `n`.
    pub lhs: Vec<f64>,
    pub threshold: f64,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub c4: f64,
    pub satisfied: bool,
}

impl SmallDataReport {
    pub fn max_lhs(&self) -> f64 {
        self.lhs.iter().fold(0.0, |m, &v| m.max(v))
    }
}

/// Squared L2 norms of `(f_f, f_p, q_p)` at time `t`, or of their backward
/// differences when `prev` is given.
fn data_norms(spaces: &Spaces, sources: &dyn Sources, t: f64, prev: Option<(f64, f64)>) -> [f64; 3] {
    const DEG: usize = 8;
    let diff = |a: f64, b: f64| match prev {
        Some((_, dt)) => (a - b) / dt,
        None => a,
    };
    let tp = prev.map_or(t, |(tp, _)| tp);
    let (fm, pm) = (&spaces.mesh.fluid, &spaces.mesh.poro);
    let ff = integrate(fm, DEG, |x| {
        let (a, b) = (sources.fluid_force(x, t), sources.fluid_force(x, tp));
        diff(a[0], b[0]).powi(2) + diff(a[1], b[1]).powi(2)
    });
    let fp = integrate(pm, DEG, |x| {
        let (a, b) = (sources.solid_force(x, t), sources.solid_force(x, tp));
        diff(a[0], b[0]).powi(2) + diff(a[1], b[1]).powi(2)
    });
    let qp = integrate(pm, DEG, |x| diff(sources.darcy_source(x, t), sources.darcy_source(x, tp)).powi(2));
    [ff, fp, qp]
}

/// Evaluates the discrete small data condition with `C_1`, `C_2`, `C_4`
/// computed from quadrature of the source norms.
pub fn small_data_check(
    spaces: &Spaces,
    sources: &dyn Sources,
    c: &ProblemCoefficients,
    dt: f64,
    n_steps: usize,
    constants: EnergyConstants,
) -> Result<SmallDataReport, SolverError> {
    constants.validate()?;
    c.validate()?;
    if !(dt > 0.0) {
        return Err(SolverError::Config(format!("dt must be positive, got {dt}")));
    }
    let kb = c.k_min() * constants.beta_p * constants.beta_p;
    let weigh = |n: [f64; 3]| 2.0 / c.rho_f * n[0] + 2.0 / c.rho_p * n[1] + 2.0 / kb * n[2];
    let mut c1 = Vec::with_capacity(n_steps);
    let mut c2 = Vec::with_capacity(n_steps);
    for j in 1..=n_steps {
        let t = j as f64 * dt;
        c1.push(weigh(data_norms(spaces, sources, t, None)));
        c2.push(weigh(data_norms(spaces, sources, t, Some((t - dt, dt)))));
    }
    let c4 = if n_steps == 0 {
        0.0
    } else {
        let n1 = data_norms(spaces, sources, dt, None);
        let q = if n1[2] == 0.0 { 0.0 } else { n1[2] / c.s0 };
        n1[0] / c.rho_f + n1[1] / c.rho_p + q
    };
    let threshold =
        c.mu_f.powi(3) / (4.0 * c.rho_f * c.rho_f * constants.s_f.powi(4) * constants.k_f.powi(6));
    let mut lhs = Vec::with_capacity(n_steps);
    let mut acc = 0.0;
    for n in 0..n_steps {
        acc += dt * (4.0 / 3.0 * c1[n] + 2.0 / 3.0 * c2[n]);
        let t = (n + 1) as f64 * dt;
        lhs.push(t.exp() * (acc + 2.0 / 3.0 * c4) + c1[n] / 6.0);
    }
    let satisfied = lhs.iter().all(|&v| v < threshold);
    Ok(SmallDataReport { lhs, threshold, c1, c2, c4, satisfied })
}
