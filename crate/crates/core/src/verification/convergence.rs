//! Spatial convergence studies on the manufactured solution.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{BoundaryConditions, Family, Spaces};
use crate::mesh::{build_rectangle_coupled_mesh, DiagonalPattern, RectangleTags};
use crate::stepper::{EnergyConstants, EnergyReport, EnergyTracker, FpsiSolver, Problem, SolverConfig};

use super::{ErrorNorms, ErrorObserver, ManufacturedSolution, Norm, VerificationError};

/// `log2(e_coarse / e_fine)`
pub fn convergence_rate(e_coarse: f64, e_fine: f64) -> Result<f64, VerificationError> {
    if !(e_coarse > 0.0 && e_fine > 0.0) {
        return Err(VerificationError::Invalid(format!(
            "convergence rate needs positive errors, got {e_coarse} and {e_fine}"
        )));
    }
    Ok((e_coarse / e_fine).log2())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRow {
    pub h: f64,
    pub errors: [f64; 7],
    /// Rate against the previous row; `None` on the first row.
    pub rates: [Option<f64>; 7],
}

/// Errors and rates per mesh size, coarsest first.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    /// Builds the table from `(h, errors)` pairs in refinement order.
    pub fn new(entries: &[(f64, [f64; 7])]) -> Result<Self, VerificationError> {
        let mut rows: Vec<ErrorRow> = Vec::with_capacity(entries.len());
        for &(h, errors) in entries {
            let mut rates = [None; 7];
            if let Some(prev) = rows.last() {
                for k in 0..7 {
                    rates[k] = Some(convergence_rate(prev.errors[k], errors[k])?);
                }
            }
            rows.push(ErrorRow { h, errors, rates });
        }
        Ok(Self { rows })
    }

    /// Rate of `norm` on the last refinement pair.
    pub fn last_rate(&self, norm: Norm) -> Option<f64> {
        self.rows.last().and_then(|r| r.rates[norm.index()])
    }

    /// `h,e_uf_l2H1,rate,...` with empty rate cells on the first row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("h");
        for n in Norm::ALL {
            let _ = write!(s, ",{},rate", n.column());
        }
        s.push('\n');
        for r in &self.rows {
            let _ = write!(s, "{:.6e}", r.h);
            for k in 0..7 {
                let _ = write!(s, ",{:.6e},", r.errors[k]);
                if let Some(rate) = r.rates[k] {
                    let _ = write!(s, "{rate:.4}");
                }
            }
            s.push('\n');
        }
        s
    }
}

fn default_pattern() -> DiagonalPattern {
    DiagonalPattern::Alternating
}

/// One study: meshes with `n_coarse * 2^k` cells per unit length,
/// `k = 0..levels`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub family: Family,
    pub n_coarse: usize,
    pub levels: usize,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_pattern")]
    pub pattern: DiagonalPattern,
}

impl ConvergenceConfig {
    /// Time step and horizon used for each family, with `h` from 1/8.
    pub fn of_family(family: Family) -> Self {
        let (levels, dt, t_final) = match family {
            Family::Lower => (4, 2.5e-4, 0.1),
            Family::Higher => (3, 1e-6, 5e-4),
        };
        Self { family, n_coarse: 8, levels, dt, t_final, pattern: default_pattern() }
    }

    pub fn validate(&self) -> Result<(), VerificationError> {
        if self.n_coarse == 0 || self.levels == 0 {
            return Err(VerificationError::Invalid("n_coarse and levels must be at least 1".into()));
        }
        if self.levels > 12 {
            return Err(VerificationError::Invalid(format!("levels = {} is too many", self.levels)));
        }
        SolverConfig::new(self.dt, self.t_final).validate()?;
        Ok(())
    }

    pub fn mesh_counts(&self) -> Vec<usize> {
        (0..self.levels).map(|k| self.n_coarse << k).collect()
    }
}

/// Everything recorded for one mesh of a study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub n: usize,
    pub h: f64,
    pub dofs: usize,
    pub steps: usize,
    pub errors: ErrorNorms,
    /// Largest per-block relative residual over all steps.
    pub max_residuals: [f64; 6],
    pub energy: EnergyReport,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyResult {
    pub config: ConvergenceConfig,
    pub table: ErrorTable,
    pub runs: Vec<RunRecord>,
}

/// The manufactured problem on a uniform mesh with `n` cells per unit.
pub fn mms_problem(family: Family, n: usize, pattern: DiagonalPattern) -> Result<Problem, VerificationError> {
    let mesh = build_rectangle_coupled_mesh([0.0, 1.0, -1.0, 1.0], 0.0, n, n, n, RectangleTags::mms(), pattern)?;
    let spaces = Spaces::of_family(Arc::new(mesh), family)?;
    let sol = ManufacturedSolution::default();
    Ok(Problem {
        spaces,
        coefficients: sol.coefficients,
        bcs: BoundaryConditions::mms(),
        sources: Arc::new(sol),
    })
}

/// Solves the manufactured problem on one mesh.
pub fn run_mms(family: Family, n: usize, dt: f64, t_final: f64, pattern: DiagonalPattern) -> Result<RunRecord, VerificationError> {
    let start = Instant::now();
    let problem = mms_problem(family, n, pattern)?;
    let sol = ManufacturedSolution::default();
    let initial = sol.initial_state(&problem.spaces, dt)?;
    let dofs = problem.spaces.layout().total();
    let mut solver = FpsiSolver::new(problem, SolverConfig::new(dt, t_final), initial)?;
    let mut errors = ErrorObserver::new(sol, dt);
    let mut energy = EnergyTracker::new(&solver, EnergyConstants::default())?;
    let summary = solver.run(&mut [&mut errors, &mut energy])?;
    let mut energy = energy.report();
    energy.series.clear();
    let record = RunRecord {
        n,
        h: 1.0 / n as f64,
        dofs,
        steps: summary.steps.len(),
        errors: errors.norms(),
        max_residuals: summary.max_residuals,
        energy,
        seconds: start.elapsed().as_secs_f64(),
    };
    log::info!(
        "{family:?} h=1/{n}: {dofs} dofs, {} steps in {:.1} s, max residual {:.2e}",
        record.steps,
        record.seconds,
        record.max_residuals.iter().fold(0.0f64, |m, &r| m.max(r))
    );
    Ok(record)
}

/// Runs every mesh of the study and tabulates the relative errors.
pub fn convergence_study(config: &ConvergenceConfig) -> Result<StudyResult, VerificationError> {
    config.validate()?;
    let mut runs = Vec::new();
    for n in config.mesh_counts() {
        runs.push(run_mms(config.family, n, config.dt, config.t_final, config.pattern)?);
    }
    let entries: Vec<(f64, [f64; 7])> = runs.iter().map(|r| (r.h, r.errors.relative)).collect();
    Ok(StudyResult { config: *config, table: ErrorTable::new(&entries)?, runs })
}
