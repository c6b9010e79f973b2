//! Pulsatile flow in a straight artery with poroelastic walls.

use std::fmt;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{AssemblyError, BoundaryConditions, Family, ProblemCoefficients, Sources, Spaces};
use crate::fem::{eval_field, Components, DofMap, FemError};
use crate::mesh::{build_banded_mesh, Band, BoundaryTag, DiagonalPattern, MeshError, Point2, SubMesh, Subdomain};
use crate::output::{vertex_values, write_vtk, PointData};
use crate::stepper::{FpsiSolver, Observer, Problem, RunSummary, SolverConfig, SolverError, StepReport, TimeState};

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid arterial configuration: {0}")]
    Config(String),
    #[error("unknown trace quantity `{0}` (expected eta_n, up_n, up_t, uf_n or uf_t)")]
    UnknownQuantity(String),
    #[error("point ({x}, {y}) is outside the mesh")]
    Outside { x: f64, y: f64 },
}

/// Geometry, physical parameters, forcing and discretization of the run.
/// Lengths in cm, times in s, pressures in dyne/cm^2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArterialConfig {
    /// Lumen radius `R`.
    pub radius: f64,
    /// Vessel length `L`.
    pub length: f64,
    /// Wall thickness `r_p`.
    pub wall_thickness: f64,
    pub rho_f: f64,
    pub mu_f: f64,
    pub rho_p: f64,
    pub lambda_p: f64,
    pub mu_p: f64,
    pub alpha: f64,
    pub s0: f64,
    /// Isotropic permeability `K = k I`.
    pub permeability: f64,
    pub alpha_bjs: f64,
    /// Spring coefficient of the wall.
    pub xi: f64,
    pub p_max: f64,
    pub t_max: f64,
    pub t_final: f64,
    pub dt: f64,
    pub family: Family,
    /// Cells along the vessel.
    pub nx: usize,
    /// Cell rows across the lumen.
    pub ny_fluid: usize,
    /// Cell rows across each wall.
    pub ny_wall: usize,
    pub pattern: DiagonalPattern,
    /// Output times.
    pub snapshots: Vec<f64>,
    /// Vertical displacement scale applied to the wall geometry in VTK
    /// output only.
    pub magnification: f64,
}

impl Default for ArterialConfig {
    fn default() -> Self {
        Self {
            radius: 0.5,
            length: 6.0,
            wall_thickness: 0.1,
            rho_f: 1.0,
            mu_f: 0.035,
            rho_p: 1.1,
            lambda_p: 1.07e6,
            mu_p: 4.28e6,
            alpha: 1.0,
            s0: 5e-6,
            permeability: 5e-9,
            alpha_bjs: 1.0,
            xi: 5e7,
            p_max: 13334.0,
            t_max: 0.003,
            t_final: 0.006,
            dt: 1e-4,
            family: Family::Lower,
            nx: 60,
            ny_fluid: 10,
            ny_wall: 2,
            pattern: DiagonalPattern::Alternating,
            snapshots: vec![0.0018, 0.0036, 0.0054],
            magnification: 40.0,
        }
    }
}

impl ArterialConfig {
    pub fn coefficients(&self) -> ProblemCoefficients {
        ProblemCoefficients {
            rho_f: self.rho_f,
            mu_f: self.mu_f,
            rho_p: self.rho_p,
            lambda_p: self.lambda_p,
            mu_p: self.mu_p,
            alpha: self.alpha,
            s0: self.s0,
            permeability: [[self.permeability, 0.0], [0.0, self.permeability]],
            alpha_bjs: self.alpha_bjs,
            xi: self.xi,
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig::new(self.dt, self.t_final)
    }

    pub fn validate(&self) -> Result<(), BenchmarkError> {
        let positive = [
            ("radius", self.radius),
            ("length", self.length),
            ("wall_thickness", self.wall_thickness),
            ("t_max", self.t_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(BenchmarkError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("p_max", self.p_max), ("magnification", self.magnification)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(BenchmarkError::Config(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if self.nx == 0 || self.ny_fluid == 0 || self.ny_wall == 0 {
            return Err(BenchmarkError::Config("cell counts must be at least 1".into()));
        }
        if let Some(t) = self.snapshots.iter().find(|&&t| !(t >= 0.0 && t <= self.t_final)) {
            return Err(BenchmarkError::Config(format!("snapshot time {t} outside [0, {}]", self.t_final)));
        }
        self.coefficients().validate()?;
        self.solver_config().validate()?;
        Ok(())
    }

    /// Lumen, with one wall below and one above.
    pub fn mesh(&self) -> Result<crate::mesh::CoupledMesh, BenchmarkError> {
        let (r, rp) = (self.radius, self.wall_thickness);
        let wall = |y0: f64, y1: f64, bottom, top| Band {
            y0,
            y1,
            ny: self.ny_wall,
            subdomain: Subdomain::Poroelastic,
            left: BoundaryTag::PInlet,
            right: BoundaryTag::POutlet,
            bottom,
            top,
        };
        let bands = [
            wall(-r - rp, -r, BoundaryTag::PExt, BoundaryTag::GammaFP),
            Band {
                y0: -r,
                y1: r,
                ny: self.ny_fluid,
                subdomain: Subdomain::Fluid,
                left: BoundaryTag::FInlet,
                right: BoundaryTag::FOutlet,
                bottom: BoundaryTag::GammaFP,
                top: BoundaryTag::GammaFP,
            },
            wall(r, r + rp, BoundaryTag::GammaFP, BoundaryTag::PExt),
        ];
        Ok(build_banded_mesh(0.0, self.length, self.nx, &bands, self.pattern)?)
    }

    pub fn problem(&self) -> Result<Problem, BenchmarkError> {
        self.validate()?;
        let spaces = Spaces::of_family(Arc::new(self.mesh()?), self.family)?;
        Ok(Problem {
            spaces,
            coefficients: self.coefficients(),
            bcs: arterial_bcs(),
            sources: Arc::new(InflowPressure { p_max: self.p_max, t_max: self.t_max }),
        })
    }
}

/// Traction inflow and free outflow; walls clamped at both ends with no
/// Darcy flux there; tangential displacement fixed and drained on the
/// exterior walls.
pub fn arterial_bcs() -> BoundaryConditions {
    BoundaryConditions {
        fluid_dirichlet: Vec::new(),
        fluid_traction: vec![BoundaryTag::FInlet, BoundaryTag::FOutlet],
        displacement: vec![
            (BoundaryTag::PInlet, Components::Both),
            (BoundaryTag::POutlet, Components::Both),
            (BoundaryTag::PExt, Components::X),
        ],
        darcy_flux: vec![BoundaryTag::PInlet, BoundaryTag::POutlet],
        darcy_pressure: vec![BoundaryTag::PExt],
    }
}

/// `P/2 (1 - cos(2 pi t / T_max))` for `t <= T_max`, zero afterwards.
pub fn inflow_pressure(t: f64, p_max: f64, t_max: f64) -> f64 {
    if (0.0..=t_max).contains(&t) {
        0.5 * p_max * (1.0 - (2.0 * std::f64::consts::PI * t / t_max).cos())
    } else {
        0.0
    }
}

/// Inlet normal stress `-p_in n`; every other datum is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InflowPressure {
    pub p_max: f64,
    pub t_max: f64,
}

impl Sources for InflowPressure {
    fn fluid_traction(&self, tag: BoundaryTag, _p: Point2, n: [f64; 2], t: f64) -> [f64; 2] {
        if tag == BoundaryTag::FInlet {
            let p = inflow_pressure(t, self.p_max, self.t_max);
            [-p * n[0], -p * n[1]]
        } else {
            [0.0; 2]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceQuantity {
    EtaN,
    UpN,
    UpT,
    UfN,
    UfT,
}

impl TraceQuantity {
    pub const ALL: [TraceQuantity; 5] =
        [TraceQuantity::EtaN, TraceQuantity::UpN, TraceQuantity::UpT, TraceQuantity::UfN, TraceQuantity::UfT];

    pub fn name(self) -> &'static str {
        match self {
            TraceQuantity::EtaN => "eta_n",
            TraceQuantity::UpN => "up_n",
            TraceQuantity::UpT => "up_t",
            TraceQuantity::UfN => "uf_n",
            TraceQuantity::UfT => "uf_t",
        }
    }
}

impl fmt::Display for TraceQuantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TraceQuantity {
    type Err = BenchmarkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TraceQuantity::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| BenchmarkError::UnknownQuantity(s.to_string()))
    }
}

/// Samples of one quantity at the midpoints of the top interface edges,
/// ordered by `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterfaceTrace {
    pub quantity: TraceQuantity,
    pub t: f64,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
}

impl InterfaceTrace {
    /// `x` of the largest `|value|`.
    pub fn peak_x(&self) -> Option<f64> {
        self.values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| self.x[i])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,value\n");
        for (x, v) in self.x.iter().zip(&self.values) {
            s.push_str(&format!("{x:.9e},{v:.9e}\n"));
        }
        s
    }
}

/// Interface edges on the highest interface line, sorted by midpoint `x`.
fn top_interface_edges(spaces: &Spaces) -> Vec<usize> {
    let fluid = &spaces.mesh.fluid;
    let mid = |e: usize| {
        let [a, b] = spaces.mesh.interface[e].fluid_vertices.map(|v| fluid.vertices[v]);
        a.midpoint(b)
    };
    let y_top = (0..spaces.mesh.interface.len()).map(|e| mid(e).y).fold(f64::NEG_INFINITY, f64::max);
    let mut edges: Vec<usize> = (0..spaces.mesh.interface.len()).filter(|&e| (mid(e).y - y_top).abs() < 1e-9).collect();
    edges.sort_by(|&a, &b| mid(a).x.total_cmp(&mid(b).x));
    edges
}

/// Normal (upward) and tangential (rightward) components of one field along
/// the top interface.
pub fn extract_trace(spaces: &Spaces, state: &TimeState, quantity: TraceQuantity) -> Result<InterfaceTrace, BenchmarkError> {
    let fluid = &spaces.mesh.fluid;
    let (dm, coeffs, on_fluid): (&DofMap, &[f64], bool) = match quantity {
        TraceQuantity::EtaN => (&spaces.eta, &state.eta, false),
        TraceQuantity::UpN | TraceQuantity::UpT => (&spaces.up, &state.up, false),
        TraceQuantity::UfN | TraceQuantity::UfT => (&spaces.uf, &state.uf, true),
    };
    let normal = !matches!(quantity, TraceQuantity::UpT | TraceQuantity::UfT);
    let mut x = Vec::new();
    let mut values = Vec::new();
    for e in top_interface_edges(spaces) {
        let edge = &spaces.mesh.interface[e];
        let [a, b] = edge.fluid_vertices.map(|v| fluid.vertices[v]);
        let m = a.midpoint(b);
        let cell = if on_fluid { edge.fluid_cell } else { edge.poro_cell };
        let v = eval_field(dm, coeffs, cell, m)?.value;
        x.push(m.x);
        values.push(if normal { v[1] } else { v[0] });
    }
    Ok(InterfaceTrace { quantity, t: state.t, x, values })
}

/// Cell containing `p`, by exhaustive search.
pub fn locate(mesh: &SubMesh, p: Point2) -> Option<usize> {
    let tol = 1e-10;
    (0..mesh.n_cells()).find(|&c| {
        let [a, b, d] = mesh.cell_points(c);
        let det = (b.x - a.x) * (d.y - a.y) - (d.x - a.x) * (b.y - a.y);
        let l1 = ((p.x - a.x) * (d.y - a.y) - (d.x - a.x) * (p.y - a.y)) / det;
        let l2 = ((b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y)) / det;
        l1 >= -tol && l2 >= -tol && l1 + l2 <= 1.0 + tol
    })
}

/// Fluid pressure along the vessel axis at the column midpoints.
pub fn axis_pressure(spaces: &Spaces, state: &TimeState, samples: usize) -> Result<(Vec<f64>, Vec<f64>), BenchmarkError> {
    let fluid = &spaces.mesh.fluid;
    let (x0, x1) = fluid.vertices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.x), hi.max(p.x)));
    let (y0, y1) = fluid.vertices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.y), hi.max(p.y)));
    let yc = 0.5 * (y0 + y1);
    let mut xs = Vec::with_capacity(samples);
    let mut ps = Vec::with_capacity(samples);
    for k in 0..samples {
        let p = Point2::new(x0 + (k as f64 + 0.5) * (x1 - x0) / samples as f64, yc);
        let cell = locate(fluid, p).ok_or(BenchmarkError::Outside { x: p.x, y: p.y })?;
        xs.push(p.x);
        ps.push(eval_field(&spaces.pf, &state.pf, cell, p)?.value[0]);
    }
    Ok((xs, ps))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub traces: Vec<InterfaceTrace>,
    pub axis_x: Vec<f64>,
    pub axis_pressure: Vec<f64>,
}

impl Snapshot {
    pub fn trace(&self, q: TraceQuantity) -> &InterfaceTrace {
        self.traces.iter().find(|t| t.quantity == q).expect("all quantities are traced")
    }

    /// `x` of the maximal axis pressure.
    pub fn pressure_peak_x(&self) -> f64 {
        let k = self
            .axis_pressure
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(k, _)| k);
        self.axis_x.get(k).copied().unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArterialResult {
    pub snapshots: Vec<Snapshot>,
    /// Largest fluid pressure dof over all steps.
    pub max_fluid_pressure: f64,
    /// Largest `|eta . n|` on the top interface over all steps.
    pub max_eta_n: f64,
    pub all_finite: bool,
    /// Width of one mesh column.
    pub cell_width: f64,
    pub summary: RunSummary,
    pub seconds: f64,
    /// Files written, in order.
    pub files: Vec<PathBuf>,
}

fn ms_label(t: f64) -> String {
    let ms = (t * 1e3 * 1e6).round() / 1e6;
    format!("{ms}")
}

struct ArterialObserver<'a> {
    config: &'a ArterialConfig,
    out_dir: Option<&'a Path>,
    snapshots: Vec<Snapshot>,
    files: Vec<PathBuf>,
    max_pressure: f64,
    max_eta_n: f64,
    finite: bool,
}

impl ArterialObserver<'_> {
    fn write(&mut self, name: String, f: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<(), BenchmarkError> {
        let Some(dir) = self.out_dir else { return Ok(()) };
        let path = dir.join(name);
        let io = |source| BenchmarkError::Io { path: path.clone(), source };
        let file = fs::File::create(&path).map_err(io)?;
        let mut w = BufWriter::new(file);
        f(&mut w).map_err(io)?;
        std::io::Write::flush(&mut w).map_err(io)?;
        self.files.push(path);
        Ok(())
    }

    fn snapshot(&mut self, spaces: &Spaces, state: &TimeState) -> Result<(), BenchmarkError> {
        let mut traces = Vec::new();
        for q in TraceQuantity::ALL {
            traces.push(extract_trace(spaces, state, q)?);
        }
        let (axis_x, axis_pressure) = axis_pressure(spaces, state, self.config.nx)?;
        let label = ms_label(state.t);
        for tr in &traces {
            let csv = tr.to_csv();
            self.write(format!("trace_{}_{label}.csv", tr.quantity), |w| std::io::Write::write_all(w, csv.as_bytes()))?;
        }
        if self.out_dir.is_some() {
            self.write_vtk(spaces, state, &label)?;
        }
        self.snapshots.push(Snapshot { t: state.t, traces, axis_x, axis_pressure });
        Ok(())
    }

    fn write_vtk(&mut self, spaces: &Spaces, state: &TimeState, label: &str) -> Result<(), BenchmarkError> {
        let uf = vertex_values(&spaces.uf, &state.uf)?;
        let pf: Vec<f64> = vertex_values(&spaces.pf, &state.pf)?.iter().map(|v| v[0]).collect();
        let up = vertex_values(&spaces.up, &state.up)?;
        let pp: Vec<f64> = vertex_values(&spaces.pp, &state.pp)?.iter().map(|v| v[0]).collect();
        let eta = vertex_values(&spaces.eta, &state.eta)?;
        let m = self.config.magnification;
        let offset: Vec<[f64; 2]> = eta.iter().map(|e| [0.0, m * e[1]]).collect();
        let t = state.t;
        let fluid = Arc::clone(&spaces.mesh.fluid);
        let poro = Arc::clone(&spaces.mesh.poro);
        self.write(format!("fluid_{label}.vtk"), |w| {
            write_vtk(
                w,
                &format!("fluid t={t}"),
                &fluid,
                None,
                &[("velocity", PointData::Vector(uf)), ("pressure", PointData::Scalar(pf))],
            )
        })?;
        self.write(format!("wall_{label}.vtk"), |w| {
            write_vtk(
                w,
                &format!("wall t={t} vertical displacement x{m}"),
                &poro,
                Some(&offset),
                &[
                    ("darcy_velocity", PointData::Vector(up)),
                    ("pressure", PointData::Scalar(pp)),
                    ("displacement", PointData::Vector(eta)),
                ],
            )
        })
    }
}

impl Observer for ArterialObserver<'_> {
    fn observe(&mut self, solver: &FpsiSolver, _report: Option<&StepReport>) -> Result<(), SolverError> {
        let state = solver.state();
        let spaces = &solver.problem().spaces;
        let wrap = |e: BenchmarkError| SolverError::Observer(e.to_string());
        self.finite &= [&state.uf, &state.pf, &state.up, &state.pp, &state.eta, &state.lambda]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()));
        self.max_pressure = state.pf.iter().fold(self.max_pressure, |m, &p| m.max(p));
        let eta_n = extract_trace(spaces, state, TraceQuantity::EtaN).map_err(wrap)?;
        self.max_eta_n = self.max_eta_n.max(eta_n.max_abs());
        let dt = solver.config().dt;
        if self.config.snapshots.iter().any(|&ts| (state.t - ts).abs() < 0.5 * dt) {
            self.snapshot(spaces, state).map_err(wrap)?;
        }
        Ok(())
    }
}

/// Runs the benchmark from rest. Trace CSV and VTK files are written to
/// `out_dir` when given.
pub fn run_arterial(config: &ArterialConfig, out_dir: Option<&Path>) -> Result<ArterialResult, BenchmarkError> {
    let start = Instant::now();
    let problem = config.problem()?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|source| BenchmarkError::Io { path: dir.to_path_buf(), source })?;
    }
    let initial = TimeState::zeros(&problem.spaces);
    let mut solver = FpsiSolver::new(problem, config.solver_config(), initial)?;
    let mut obs = ArterialObserver {
        config,
        out_dir,
        snapshots: Vec::new(),
        files: Vec::new(),
        max_pressure: f64::NEG_INFINITY,
        max_eta_n: 0.0,
        finite: true,
    };
    let summary = solver.run(&mut [&mut obs])?;
    Ok(ArterialResult {
        snapshots: obs.snapshots,
        max_fluid_pressure: obs.max_pressure,
        max_eta_n: obs.max_eta_n,
        all_finite: obs.finite,
        cell_width: config.length / config.nx as f64,
        summary,
        seconds: start.elapsed().as_secs_f64(),
        files: obs.files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::interpolate;

    #[test]
    fn inflow_values() {
        assert_eq!(inflow_pressure(0.0, 13334.0, 0.003), 0.0);
        assert!((inflow_pressure(0.0015, 13334.0, 0.003) - 13334.0).abs() < 1e-9);
        assert_eq!(inflow_pressure(0.006, 13334.0, 0.003), 0.0);
        for k in 0..=40 {
            let p = inflow_pressure(k as f64 * 1e-4, 13334.0, 0.003);
            assert!((0.0..=13334.0).contains(&p));
        }
    }

    #[test]
    fn default_config_matches_table_values() {
        let c = ArterialConfig::default();
        assert_eq!((c.rho_p, c.xi, c.rho_f, c.mu_f, c.s0), (1.1, 5e7, 1.0, 0.035, 5e-6));
        assert_eq!((c.permeability, c.mu_p, c.lambda_p, c.alpha_bjs, c.alpha), (5e-9, 4.28e6, 1.07e6, 1.0, 1.0));
        assert_eq!((c.p_max, c.t_max, c.t_final), (13334.0, 0.003, 0.006));
        assert!(c.validate().is_ok());
        let parsed: ArterialConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(parsed, c);
        assert!(serde_json::from_str::<ArterialConfig>(r#"{"radious": 1.0}"#).is_err());
        let bad = ArterialConfig { dt: -1.0, ..c.clone() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn mesh_layout() {
        let c = ArterialConfig { nx: 6, ny_fluid: 2, ny_wall: 1, ..ArterialConfig::default() };
        let m = c.mesh().unwrap();
        assert!(m.validate().is_empty());
        assert_eq!(m.interface.len(), 12);
        assert!((m.interface_length() - 12.0).abs() < 1e-12);
        assert!((m.fluid.total_area() - 6.0).abs() < 1e-12);
        assert!((m.poro.total_area() - 1.2).abs() < 1e-12);
    }

    #[test]
    fn trace_orientation() {
        let c = ArterialConfig { nx: 6, ny_fluid: 2, ny_wall: 1, ..ArterialConfig::default() };
        let p = c.problem().unwrap();
        let mut s = TimeState::zeros(&p.spaces);
        for q in TraceQuantity::ALL {
            let tr = extract_trace(&p.spaces, &s, q).unwrap();
            assert_eq!(tr.x.len(), 6);
            assert!(tr.values.iter().all(|&v| v == 0.0));
            assert!(tr.x.windows(2).all(|w| w[0] < w[1]));
        }
        s.uf = interpolate(&p.spaces.uf, |_| [0.0, 1.0]).unwrap();
        let n = extract_trace(&p.spaces, &s, TraceQuantity::UfN).unwrap();
        let t = extract_trace(&p.spaces, &s, TraceQuantity::UfT).unwrap();
        assert!(n.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(t.values.iter().all(|v| v.abs() < 1e-12));
        s.uf = interpolate(&p.spaces.uf, |_| [1.0, 0.0]).unwrap();
        let t = extract_trace(&p.spaces, &s, TraceQuantity::UfT).unwrap();
        assert!(t.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!("eta_x".parse::<TraceQuantity>().is_err());
        assert_eq!("up_t".parse::<TraceQuantity>().unwrap(), TraceQuantity::UpT);
    }

    #[test]
    fn zero_inflow_gives_zero_solution() {
        let c = ArterialConfig {
            nx: 6,
            ny_fluid: 2,
            ny_wall: 1,
            p_max: 0.0,
            t_final: 5e-4,
            snapshots: vec![3e-4],
            ..ArterialConfig::default()
        };
        let r = run_arterial(&c, None).unwrap();
        assert_eq!(r.summary.steps.len(), 5);
        assert_eq!(r.max_fluid_pressure, 0.0);
        assert_eq!(r.max_eta_n, 0.0);
        assert_eq!(r.snapshots.len(), 1);
        assert!(r.snapshots[0].traces.iter().all(|t| t.max_abs() == 0.0));
    }

    #[test]
    fn ms_labels() {
        assert_eq!(ms_label(0.0018), "1.8");
        assert_eq!(ms_label(0.0054), "5.4");
        assert_eq!(ms_label(0.006), "6");
    }
}
