//! Finite element solver for fully dynamic Navier-Stokes / Biot
//! fluid-poroelastic structure interaction with a Lagrange multiplier on
//! the interface, discretized by backward Euler in time.

pub mod assembly;
pub mod benchmark;
pub mod config;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod output;
pub mod quadrature;
pub mod stepper;
pub mod verification;
