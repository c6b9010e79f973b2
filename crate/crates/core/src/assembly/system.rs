//! Block layout and the backward Euler step system.

use std::ops::Range;

use crate::linalg::{LinalgError, SparseMatrix, Triplets};

use super::forms::{assemble_af, assemble_ape, assemble_apd, assemble_b, assemble_mass};
use super::interface::{assemble_bgamma, assemble_bjs, interface_edge_rule, BGammaBlocks, BjsBlocks};
use super::rhs::RhsVectors;
use super::{AssemblyError, ProblemCoefficients, Spaces};

/// Unknowns in their order within the global vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Uf,
    Pf,
    Up,
    Pp,
    Eta,
    Lambda,
}

impl Field {
    pub const ALL: [Field; 6] = [Field::Uf, Field::Pf, Field::Up, Field::Pp, Field::Eta, Field::Lambda];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Field::Uf => "u_f",
            Field::Pf => "p_f",
            Field::Up => "u_p",
            Field::Pp => "p_p",
            Field::Eta => "eta_p",
            Field::Lambda => "lambda",
        }
    }
}

/// Offsets of the six fields in the global vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemLayout {
    offsets: [usize; 7],
}

impl SystemLayout {
    pub fn new(sizes: [usize; 6]) -> Self {
        let mut offsets = [0; 7];
        for k in 0..6 {
            offsets[k + 1] = offsets[k] + sizes[k];
        }
        Self { offsets }
    }

    pub fn offset(&self, f: Field) -> usize {
        self.offsets[f.index()]
    }

    pub fn size(&self, f: Field) -> usize {
        self.offsets[f.index() + 1] - self.offsets[f.index()]
    }

    pub fn range(&self, f: Field) -> Range<usize> {
        self.offsets[f.index()]..self.offsets[f.index() + 1]
    }

    pub fn total(&self) -> usize {
        self.offsets[6]
    }

    pub fn field<'a>(&self, x: &'a [f64], f: Field) -> &'a [f64] {
        &x[self.range(f)]
    }
}

/// Every time-independent block, assembled once per run.
#[derive(Debug, Clone)]
pub struct FormBlocks {
    pub layout: SystemLayout,
    /// Unit-density masses.
    pub mass_f: SparseMatrix,
    pub mass_s: SparseMatrix,
    pub mass_p: SparseMatrix,
    pub a_f: SparseMatrix,
    pub a_pd: SparseMatrix,
    /// Includes the spring term.
    pub a_e: SparseMatrix,
    /// `p_f` rows, `u_f` columns.
    pub b_f: SparseMatrix,
    /// `p_p` rows, `u_p` columns.
    pub b_p: SparseMatrix,
    /// `p_p` rows, `eta` columns.
    pub b_eta: SparseMatrix,
    pub bjs: BjsBlocks,
    pub bgamma: BGammaBlocks,
}

impl FormBlocks {
    pub fn assemble(spaces: &Spaces, c: &ProblemCoefficients) -> Result<Self, AssemblyError> {
        c.validate()?;
        let rule = interface_edge_rule(spaces.uf.kind(), spaces.eta.kind(), spaces.lambda.degree);
        Ok(Self {
            layout: spaces.layout(),
            mass_f: assemble_mass(&spaces.uf, 1.0)?,
            mass_s: assemble_mass(&spaces.eta, 1.0)?,
            mass_p: assemble_mass(&spaces.pp, 1.0)?,
            a_f: assemble_af(&spaces.uf, c.mu_f)?,
            a_pd: assemble_apd(&spaces.up, c.mu_f, c.k_inverse())?,
            a_e: assemble_ape(&spaces.eta, c.mu_p, c.lambda_p, c.xi)?,
            b_f: assemble_b(&spaces.uf, &spaces.pf)?,
            b_p: assemble_b(&spaces.up, &spaces.pp)?,
            b_eta: assemble_b(&spaces.eta, &spaces.pp)?,
            bjs: assemble_bjs(&spaces.uf, &spaces.eta, c, &spaces.mesh, &rule)?,
            bgamma: assemble_bgamma(&spaces.uf, &spaces.up, &spaces.eta, &spaces.lambda, &spaces.mesh, &rule)?,
        })
    }

    /// Matrix of one step without the convection term. Its pattern contains
    /// every entry of any convection block on the `u_f` space.
    pub fn static_matrix(&self, c: &ProblemCoefficients, dt: f64) -> SparseMatrix {
        let l = &self.layout;
        let (uf, pf, up, pp, eta, lam) = (
            l.offset(Field::Uf),
            l.offset(Field::Pf),
            l.offset(Field::Up),
            l.offset(Field::Pp),
            l.offset(Field::Eta),
            l.offset(Field::Lambda),
        );
        let n = l.total();
        let mut t = Triplets::new(n, n);
        t.push_matrix(&self.mass_f, uf, uf, c.rho_f / dt);
        t.push_matrix(&self.a_f, uf, uf, 1.0);
        t.push_matrix(&self.bjs.ff, uf, uf, 1.0);
        t.push_transpose(&self.b_f, uf, pf, 1.0);
        t.push_matrix(&self.bjs.fe, uf, eta, 1.0 / dt);
        t.push_transpose(&self.bgamma.l_f, uf, lam, 1.0);

        t.push_matrix(&self.b_f, pf, uf, -1.0);

        t.push_matrix(&self.a_pd, up, up, 1.0);
        t.push_transpose(&self.b_p, up, pp, 1.0);
        t.push_transpose(&self.bgamma.l_p, up, lam, 1.0);

        t.push_matrix(&self.b_p, pp, up, -1.0);
        t.push_matrix(&self.mass_p, pp, pp, c.s0 / dt);
        t.push_matrix(&self.b_eta, pp, eta, -c.alpha / dt);

        t.push_matrix(&self.bjs.ef, eta, uf, 1.0);
        t.push_transpose(&self.b_eta, eta, pp, c.alpha);
        t.push_matrix(&self.mass_s, eta, eta, c.rho_p / (dt * dt));
        t.push_matrix(&self.a_e, eta, eta, 1.0);
        t.push_matrix(&self.bjs.ee, eta, eta, 1.0 / dt);
        t.push_transpose(&self.bgamma.l_e, eta, lam, 1.0);

        t.push_matrix(&self.bgamma.l_f, lam, uf, 1.0);
        t.push_matrix(&self.bgamma.l_p, lam, up, 1.0);
        t.push_matrix(&self.bgamma.l_e, lam, eta, 1.0 / dt);
        t.into_csr()
    }

    /// Right-hand side of one step.
    pub fn step_rhs(&self, c: &ProblemCoefficients, inputs: &StepInputs<'_>) -> Result<Vec<f64>, AssemblyError> {
        let l = &self.layout;
        inputs.check(l)?;
        let dt = inputs.dt;
        let mut b = vec![0.0; l.total()];
        let r = inputs.rhs;
        let add = |b: &mut [f64], f: Field, v: &[f64], s: f64| {
            for (x, y) in b[l.range(f)].iter_mut().zip(v) {
                *x += s * y;
            }
        };
        add(&mut b, Field::Uf, &r.uf, 1.0);
        add(&mut b, Field::Uf, &self.mass_f.matvec(inputs.u_prev), c.rho_f / dt);
        add(&mut b, Field::Uf, &self.bjs.fe.matvec(inputs.eta_prev), 1.0 / dt);
        add(&mut b, Field::Pf, &r.pf, 1.0);
        add(&mut b, Field::Up, &r.up, 1.0);
        add(&mut b, Field::Pp, &r.pp, 1.0);
        add(&mut b, Field::Pp, &self.mass_p.matvec(inputs.p_prev), c.s0 / dt);
        add(&mut b, Field::Pp, &self.b_eta.matvec(inputs.eta_prev), -c.alpha / dt);
        let second: Vec<f64> = inputs.eta_prev.iter().zip(inputs.eta_prev2).map(|(a, b)| 2.0 * a - b).collect();
        add(&mut b, Field::Eta, &r.eta, 1.0);
        add(&mut b, Field::Eta, &self.mass_s.matvec(&second), c.rho_p / (dt * dt));
        add(&mut b, Field::Eta, &self.bjs.ee.matvec(inputs.eta_prev), 1.0 / dt);
        add(&mut b, Field::Lambda, &self.bgamma.l_e.matvec(inputs.eta_prev), 1.0 / dt);
        Ok(b)
    }
}

/// Data of one backward Euler step from `t_n` to `t_{n+1}`.
#[derive(Debug, Clone, Copy)]
pub struct StepInputs<'a> {
    pub dt: f64,
    pub u_prev: &'a [f64],
    pub p_prev: &'a [f64],
    pub eta_prev: &'a [f64],
    pub eta_prev2: &'a [f64],
    /// Loads at `t_{n+1}`.
    pub rhs: &'a RhsVectors,
    /// Convection block built from `u_prev`.
    pub convection: Option<&'a SparseMatrix>,
}

impl StepInputs<'_> {
    fn check(&self, l: &SystemLayout) -> Result<(), AssemblyError> {
        let checks = [
            ("u_prev", self.u_prev.len(), l.size(Field::Uf)),
            ("p_prev", self.p_prev.len(), l.size(Field::Pp)),
            ("eta_prev", self.eta_prev.len(), l.size(Field::Eta)),
            ("eta_prev2", self.eta_prev2.len(), l.size(Field::Eta)),
            ("rhs.uf", self.rhs.uf.len(), l.size(Field::Uf)),
            ("rhs.pf", self.rhs.pf.len(), l.size(Field::Pf)),
            ("rhs.up", self.rhs.up.len(), l.size(Field::Up)),
            ("rhs.pp", self.rhs.pp.len(), l.size(Field::Pp)),
            ("rhs.eta", self.rhs.eta.len(), l.size(Field::Eta)),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(AssemblyError::Dimension(format!("{name} has length {got}, expected {want}")));
            }
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(AssemblyError::Coefficient(format!("time step must be positive, got {}", self.dt)));
        }
        Ok(())
    }
}

/// Global matrix and right-hand side of one step.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub layout: SystemLayout,
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
}

/// Builds the full step system. Essential conditions are not applied.
pub fn compose_step_system(
    blocks: &FormBlocks,
    c: &ProblemCoefficients,
    inputs: &StepInputs<'_>,
) -> Result<BlockSystem, AssemblyError> {
    let rhs = blocks.step_rhs(c, inputs)?;
    let mut matrix = blocks.static_matrix(c, inputs.dt);
    if let Some(conv) = inputs.convection {
        let off = blocks.layout.offset(Field::Uf);
        matrix.add_in_pattern(conv, off, off, 1.0)?;
    }
    Ok(BlockSystem { layout: blocks.layout, matrix, rhs })
}

/// Imposes `x[i] = values[i]` where `mask[i]`, keeping the sparsity pattern:
/// lifts the data into the right-hand side, zeroes masked rows and columns
/// and puts one on their diagonal.
pub fn apply_dirichlet(a: &mut SparseMatrix, b: &mut [f64], mask: &[bool], values: &[f64]) -> Result<(), LinalgError> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n || mask.len() != n || values.len() != n {
        return Err(LinalgError::Shape(format!(
            "dirichlet data: matrix {}x{}, rhs {}, mask {}, values {}",
            n,
            a.ncols(),
            b.len(),
            mask.len(),
            values.len()
        )));
    }
    let g: Vec<f64> = (0..n).map(|i| if mask[i] { values[i] } else { 0.0 }).collect();
    let ag = a.matvec(&g);
    for i in 0..n {
        b[i] -= ag[i];
    }
    let row_ptr = a.row_ptr().to_vec();
    let cols = a.col_idx().to_vec();
    let vals = a.values_mut();
    for i in 0..n {
        for k in row_ptr[i]..row_ptr[i + 1] {
            let j = cols[k];
            if mask[i] || mask[j] {
                vals[k] = if i == j && mask[i] { 1.0 } else { 0.0 };
            }
        }
        if mask[i] {
            b[i] = values[i];
        }
    }
    for i in 0..n {
        if mask[i] && a.find(i, i).is_none() {
            return Err(LinalgError::Shape(format!("row {i} has no diagonal entry in the pattern")));
        }
    }
    Ok(())
}
