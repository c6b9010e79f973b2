//! Bilinear and linear forms of the coupled problem and the per-step block
//! system.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fem::{build_space, Components, DofMap, ElementKind, FemError, MultiplierSpace};
use crate::linalg::LinalgError;
use crate::mesh::{BoundaryTag, CoupledMesh, Point2};

mod forms;
mod interface;
mod rhs;
mod system;

pub use forms::{
    assemble_af, assemble_ape, assemble_apd, assemble_b, assemble_convection, assemble_mass, assemble_scalar_mass,
    assemble_vector_mass, h1_gram, hdiv_gram, stokes_projection,
};
pub use interface::{assemble_bgamma, assemble_bjs, assemble_multiplier_mass, interface_edge_rule, trace_values, BGammaBlocks, BjsBlocks};
pub use rhs::{assemble_rhs, RhsVectors};
pub use system::{apply_dirichlet, compose_step_system, BlockSystem, Field, FormBlocks, StepInputs, SystemLayout};

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid coefficient: {0}")]
    Coefficient(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Physical parameters. The permeability is a constant SPD tensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemCoefficients {
    pub rho_f: f64,
    pub mu_f: f64,
    pub rho_p: f64,
    pub lambda_p: f64,
    pub mu_p: f64,
    pub alpha: f64,
    pub s0: f64,
    pub permeability: [[f64; 2]; 2],
    pub alpha_bjs: f64,
    #[serde(default)]
    pub xi: f64,
}

impl ProblemCoefficients {
    /// Every coefficient equal to one, no spring term.
    pub fn unit() -> Self {
        Self {
            rho_f: 1.0,
            mu_f: 1.0,
            rho_p: 1.0,
            lambda_p: 1.0,
            mu_p: 1.0,
            alpha: 1.0,
            s0: 1.0,
            permeability: [[1.0, 0.0], [0.0, 1.0]],
            alpha_bjs: 1.0,
            xi: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), AssemblyError> {
        let positive = [("rho_f", self.rho_f), ("mu_f", self.mu_f), ("rho_p", self.rho_p), ("mu_p", self.mu_p)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(AssemblyError::Coefficient(format!("{name} must be positive, got {v}")));
            }
        }
        let nonneg = [("lambda_p", self.lambda_p), ("s0", self.s0), ("xi", self.xi), ("alpha_bjs", self.alpha_bjs)];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(AssemblyError::Coefficient(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(AssemblyError::Coefficient(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        let k = self.permeability;
        if (k[0][1] - k[1][0]).abs() > 1e-14 * (k[0][0].abs() + k[1][1].abs()) {
            return Err(AssemblyError::Coefficient("permeability must be symmetric".into()));
        }
        if !(self.k_min() > 0.0) {
            return Err(AssemblyError::Coefficient("permeability must be positive definite".into()));
        }
        Ok(())
    }

    fn k_eigs(&self) -> (f64, f64) {
        let k = self.permeability;
        let tr = k[0][0] + k[1][1];
        let det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
        let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
        (0.5 * tr - disc, 0.5 * tr + disc)
    }

    pub fn k_min(&self) -> f64 {
        self.k_eigs().0
    }

    pub fn k_max(&self) -> f64 {
        self.k_eigs().1
    }

    pub fn k_inverse(&self) -> [[f64; 2]; 2] {
        let k = self.permeability;
        let det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
        [[k[1][1] / det, -k[0][1] / det], [-k[1][0] / det, k[0][0] / det]]
    }

    /// `tau^T K tau`
    pub fn k_tangential(&self, tau: [f64; 2]) -> f64 {
        let k = self.permeability;
        tau[0] * (k[0][0] * tau[0] + k[0][1] * tau[1]) + tau[1] * (k[1][0] * tau[0] + k[1][1] * tau[1])
    }
}

/// Volume and boundary data of a problem. Defaults are zero.
pub trait Sources: Send + Sync {
    fn fluid_force(&self, _p: Point2, _t: f64) -> [f64; 2] {
        [0.0; 2]
    }
    /// Mass source in the fluid continuity equation.
    fn fluid_mass(&self, _p: Point2, _t: f64) -> f64 {
        0.0
    }
    fn solid_force(&self, _p: Point2, _t: f64) -> [f64; 2] {
        [0.0; 2]
    }
    fn darcy_source(&self, _p: Point2, _t: f64) -> f64 {
        0.0
    }
    fn fluid_velocity(&self, _tag: BoundaryTag, _p: Point2, _t: f64) -> [f64; 2] {
        [0.0; 2]
    }
    fn displacement(&self, _tag: BoundaryTag, _p: Point2, _t: f64) -> [f64; 2] {
        [0.0; 2]
    }
    /// Darcy velocity whose normal component is imposed.
    fn darcy_velocity(&self, _tag: BoundaryTag, _p: Point2, _t: f64) -> [f64; 2] {
        [0.0; 2]
    }
    fn darcy_pressure(&self, _tag: BoundaryTag, _p: Point2, _t: f64) -> f64 {
        0.0
    }
    /// Prescribed fluid traction `sigma_f n` for outward normal `n`.
    fn fluid_traction(&self, _tag: BoundaryTag, _p: Point2, _n: [f64; 2], _t: f64) -> [f64; 2] {
        [0.0; 2]
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroSources;

impl Sources for ZeroSources {}

/// Which boundary portions carry which condition.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundaryConditions {
    pub fluid_dirichlet: Vec<BoundaryTag>,
    pub fluid_traction: Vec<BoundaryTag>,
    pub displacement: Vec<(BoundaryTag, Components)>,
    pub darcy_flux: Vec<BoundaryTag>,
    pub darcy_pressure: Vec<BoundaryTag>,
}

impl BoundaryConditions {
    /// Velocity data on fluid walls, displacement data on the exterior
    /// poroelastic boundary, Darcy pressure imposed weakly.
    pub fn mms() -> Self {
        Self {
            fluid_dirichlet: vec![BoundaryTag::GammaF],
            fluid_traction: Vec::new(),
            displacement: vec![(BoundaryTag::GammaPD, Components::Both)],
            darcy_flux: Vec::new(),
            darcy_pressure: vec![BoundaryTag::GammaPD],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// MINI fluid, RT0-P0 Darcy, P1 displacement, P0 multiplier.
    Lower,
    /// Taylor-Hood fluid, RT1-P1dc Darcy, P2 displacement, P1dc multiplier.
    Higher,
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lower" => Ok(Family::Lower),
            "higher" => Ok(Family::Higher),
            _ => Err(format!("unknown family `{s}` (expected lower or higher)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceChoice {
    pub fluid_velocity: ElementKind,
    pub fluid_pressure: ElementKind,
    pub darcy_velocity: ElementKind,
    pub darcy_pressure: ElementKind,
    pub displacement: ElementKind,
}

impl SpaceChoice {
    pub fn of(family: Family) -> Self {
        match family {
            Family::Lower => Self {
                fluid_velocity: ElementKind::P1Bubble,
                fluid_pressure: ElementKind::P1,
                darcy_velocity: ElementKind::RT0,
                darcy_pressure: ElementKind::P0,
                displacement: ElementKind::P1,
            },
            Family::Higher => Self {
                fluid_velocity: ElementKind::P2,
                fluid_pressure: ElementKind::P1,
                darcy_velocity: ElementKind::RT1,
                darcy_pressure: ElementKind::P1dc,
                displacement: ElementKind::P2,
            },
        }
    }

    /// Multiplier degree: that of the Darcy normal traces.
    pub fn multiplier_degree(&self) -> usize {
        self.darcy_velocity.order()
    }
}

/// The six discrete spaces on a coupled mesh.
#[derive(Debug, Clone)]
pub struct Spaces {
    pub mesh: Arc<CoupledMesh>,
    pub choice: SpaceChoice,
    pub uf: DofMap,
    pub pf: DofMap,
    pub up: DofMap,
    pub pp: DofMap,
    pub eta: DofMap,
    pub lambda: MultiplierSpace,
}

impl Spaces {
    pub fn new(mesh: Arc<CoupledMesh>, choice: SpaceChoice) -> Result<Self, AssemblyError> {
        let uf = build_space(&mesh.fluid, choice.fluid_velocity, true)?;
        let pf = build_space(&mesh.fluid, choice.fluid_pressure, false)?;
        let up = build_space(&mesh.poro, choice.darcy_velocity, true)?;
        let pp = build_space(&mesh.poro, choice.darcy_pressure, false)?;
        let eta = build_space(&mesh.poro, choice.displacement, true)?;
        let lambda = MultiplierSpace::new(choice.multiplier_degree(), mesh.interface.len());
        Ok(Self { mesh, choice, uf, pf, up, pp, eta, lambda })
    }

    pub fn of_family(mesh: Arc<CoupledMesh>, family: Family) -> Result<Self, AssemblyError> {
        Self::new(mesh, SpaceChoice::of(family))
    }

    pub fn layout(&self) -> SystemLayout {
        SystemLayout::new([
            self.uf.n_dofs(),
            self.pf.n_dofs(),
            self.up.n_dofs(),
            self.pp.n_dofs(),
            self.eta.n_dofs(),
            self.lambda.n_dofs(),
        ])
    }
}

/// Default volume quadrature degree for a bilinear form between two kinds.
pub fn volume_degree(a: ElementKind, b: ElementKind) -> usize {
    (2 * a.degree().max(b.degree()) + 1).clamp(1, crate::quadrature::MAX_DEGREE)
}

#[cfg(test)]
mod tests;
