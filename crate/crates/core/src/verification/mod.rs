//! Manufactured-solution verification: exact fields, error norms,
//! convergence tables and inf-sup estimates.

use thiserror::Error;

use crate::assembly::AssemblyError;
use crate::fem::FemError;
use crate::linalg::LinalgError;
use crate::mesh::MeshError;
use crate::stepper::SolverError;

mod convergence;
mod infsup;
mod mms;
mod norms;

pub use convergence::{
    convergence_rate, convergence_study, mms_problem, run_mms, ConvergenceConfig, ErrorRow, ErrorTable, RunRecord,
    StudyResult,
};
pub use infsup::{darcy_infsup, infsup_check, stokes_infsup, InfSupEstimate};
pub use mms::ManufacturedSolution;
pub use norms::{
    field_error, multiplier_error, state_errors, ErrorNorms, ErrorObserver, Norm, SpaceNorm, SquaredNorms,
};

#[derive(Debug, Error)]
pub enum VerificationError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("{0}")]
    Invalid(String),
    #[error("unstable pairing: {0}")]
    Unstable(String),
}
