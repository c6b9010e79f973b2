//! Dense estimates of the discrete inf-sup constants.

use serde::Serialize;

use crate::assembly::{
    assemble_b, assemble_bgamma, assemble_multiplier_mass, assemble_scalar_mass, h1_gram, hdiv_gram,
    interface_edge_rule, Spaces,
};
use crate::fem::{essential_bc_mask, Components, DofMap, EssentialBc};
use crate::linalg::{smallest_singular_estimate, SparseMatrix, Triplets};
use crate::mesh::BoundaryTag;

use super::VerificationError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfSupEstimate {
    /// Fluid velocity-pressure pair in `H1 x L2`.
    pub beta_f: f64,
    /// Darcy velocity against pressure and multiplier in `H(div) x (L2 x L2(Gamma))`.
    pub beta_p: f64,
}

fn free_dofs(dm: &DofMap, tags: &[BoundaryTag]) -> Result<Vec<usize>, VerificationError> {
    let mut bc = EssentialBc::new(dm.n_dofs());
    if !tags.is_empty() {
        essential_bc_mask(dm, tags, Components::Both, |_, _| [0.0; 2], 0.0, &mut bc)?;
    }
    Ok((0..dm.n_dofs()).filter(|&i| !bc.mask[i]).collect())
}

fn all(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// `inf_q sup_v (div v, q) / (|v|_H1 |q|)` over velocities vanishing on
/// `dirichlet`.
pub fn stokes_infsup(velocity: &DofMap, pressure: &DofMap, dirichlet: &[BoundaryTag]) -> Result<f64, VerificationError> {
    let free = free_dofs(velocity, dirichlet)?;
    let np = pressure.n_dofs();
    let b = assemble_b(velocity, pressure)?.select(&all(np), &free);
    let gram = h1_gram(velocity)?.select(&free, &free);
    let mass = assemble_scalar_mass(pressure, 1.0)?;
    Ok(smallest_singular_estimate(&b, &gram, &mass)?)
}

/// `inf_(w, mu) sup_v [(div v, w) + <v . n_p, mu>] / (|v|_div |(w, mu)|)`
/// over Darcy velocities with zero flux on `flux_tags`.
pub fn darcy_infsup(spaces: &Spaces, flux_tags: &[BoundaryTag]) -> Result<f64, VerificationError> {
    let up = &spaces.up;
    let free = free_dofs(up, flux_tags)?;
    let np = spaces.pp.n_dofs();
    let nl = spaces.lambda.n_dofs();
    let rule = interface_edge_rule(spaces.uf.kind(), up.kind(), spaces.lambda.degree);
    let bg = assemble_bgamma(&spaces.uf, up, &spaces.eta, &spaces.lambda, &spaces.mesh, &rule)?;
    let mut t = Triplets::new(np + nl, up.n_dofs());
    t.push_matrix(&assemble_b(up, &spaces.pp)?, 0, 0, 1.0);
    t.push_matrix(&bg.l_p, np, 0, 1.0);
    let b = t.into_csr().select(&all(np + nl), &free);
    let gram = hdiv_gram(up)?.select(&free, &free);
    let mut w = Triplets::new(np + nl, np + nl);
    w.push_matrix(&assemble_scalar_mass(&spaces.pp, 1.0)?, 0, 0, 1.0);
    w.push_matrix(&assemble_multiplier_mass(&spaces.lambda, &spaces.mesh), np, np, 1.0);
    let w: SparseMatrix = w.into_csr();
    Ok(smallest_singular_estimate(&b, &gram, &w)?)
}

/// Both estimates with the essential boundaries of the manufactured
/// problem: fluid velocity fixed on `GammaF`, no Darcy flux constraints.
pub fn infsup_check(spaces: &Spaces) -> Result<InfSupEstimate, VerificationError> {
    let beta_f = stokes_infsup(&spaces.uf, &spaces.pf, &[BoundaryTag::GammaF])?;
    let beta_p = darcy_infsup(spaces, &[])?;
    for (name, v) in [("beta_f", beta_f), ("beta_p", beta_p)] {
        if !(v > 0.0) {
            return Err(VerificationError::Unstable(format!("{name} estimate is {v}")));
        }
    }
    Ok(InfSupEstimate { beta_f, beta_p })
}
