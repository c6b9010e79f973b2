//! Python bindings: meshes, the time stepper, the manufactured-solution
//! harness and the arterial benchmark. Structured results are returned as
//! plain dicts and lists.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use pythonize::{depythonize, pythonize};
use serde::Serialize;

use nsbiot::assembly::{BoundaryConditions, Family, ProblemCoefficients, Sources, Spaces, ZeroSources};
use nsbiot::benchmark::{self, ArterialConfig, TraceQuantity};
use nsbiot::config::RunConfig;
use nsbiot::mesh::{self, CoupledMesh, DiagonalPattern};
use nsbiot::stepper::{self, EnergyConstants, FpsiSolver, Problem, SolverConfig, TimeState};
use nsbiot::verification::{self, ManufacturedSolution, Norm};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    pythonize(py, v).map_err(err)
}

fn family(s: &str) -> PyResult<Family> {
    s.parse().map_err(PyValueError::new_err)
}

fn pattern(s: &str) -> PyResult<DiagonalPattern> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| PyValueError::new_err(format!("unknown pattern `{s}`")))
}

fn coefficients(d: Option<&Bound<'_, PyDict>>) -> PyResult<ProblemCoefficients> {
    match d {
        None => Ok(ProblemCoefficients::unit()),
        Some(d) => {
            let c: ProblemCoefficients = depythonize(d.as_any()).map_err(|e| PyValueError::new_err(e.to_string()))?;
            c.validate().map_err(|e| PyValueError::new_err(e.to_string()))?;
            Ok(c)
        }
    }
}

/// Coupled fluid / poroelastic triangulation.
#[pyclass(name = "Mesh", frozen)]
struct PyMesh {
    inner: Arc<CoupledMesh>,
}

#[pymethods]
impl PyMesh {
    /// `(0,1) x (-1,1)` with `n x n` squares per subdomain, fluid on top.
    #[staticmethod]
    #[pyo3(signature = (n, pattern = "alternating"))]
    fn rectangle(n: usize, pattern: &str) -> PyResult<Self> {
        let p = verification::mms_problem(Family::Lower, n, self::pattern(pattern)?).map_err(err)?;
        Ok(Self { inner: Arc::clone(&p.spaces.mesh) })
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: Arc::new(mesh::read_mesh(path).map_err(err)?) })
    }

    #[staticmethod]
    fn from_string(text: &str) -> PyResult<Self> {
        Ok(Self { inner: Arc::new(mesh::read_mesh_str(text).map_err(err)?) })
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        mesh::write_mesh(&self.inner, path).map_err(err)
    }

    #[pyo3(name = "to_string")]
    fn to_text(&self) -> String {
        mesh::write_mesh_string(&self.inner)
    }

    /// Violated invariants, empty for a valid mesh.
    fn validate(&self) -> Vec<String> {
        self.inner.validate().iter().map(|v| v.to_string()).collect()
    }

    #[getter]
    fn h_max(&self) -> f64 {
        self.inner.h_max()
    }

    #[getter]
    fn n_fluid_cells(&self) -> usize {
        self.inner.fluid.n_cells()
    }

    #[getter]
    fn n_poro_cells(&self) -> usize {
        self.inner.poro.n_cells()
    }

    #[getter]
    fn n_interface_edges(&self) -> usize {
        self.inner.interface.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(fluid_cells={}, poro_cells={}, interface_edges={})",
            self.inner.fluid.n_cells(),
            self.inner.poro.n_cells(),
            self.inner.interface.len()
        )
    }
}

/// Backward Euler integrator. `sources` is `"mms"` (manufactured data and
/// exact initial state) or `"zero"`.
#[pyclass(name = "Solver", unsendable)]
struct PySolver {
    inner: FpsiSolver,
    errors: Option<verification::ErrorObserver>,
}

#[pymethods]
impl PySolver {
    #[new]
    #[pyo3(signature = (mesh, dt, t_final, family = "lower", sources = "mms", coefficients = None))]
    fn new(
        mesh: &PyMesh,
        dt: f64,
        t_final: f64,
        family: &str,
        sources: &str,
        coefficients: Option<&Bound<'_, PyDict>>,
    ) -> PyResult<Self> {
        let c = self::coefficients(coefficients)?;
        let spaces = Spaces::of_family(Arc::clone(&mesh.inner), self::family(family)?).map_err(err)?;
        let sol = ManufacturedSolution::new(c);
        let (src, initial, errors): (Arc<dyn Sources>, TimeState, _) = match sources {
            "mms" => {
                let init = sol.initial_state(&spaces, dt).map_err(err)?;
                (Arc::new(sol), init, Some(verification::ErrorObserver::new(sol, dt)))
            }
            "zero" => (Arc::new(ZeroSources), TimeState::zeros(&spaces), None),
            other => return Err(PyValueError::new_err(format!("unknown sources `{other}` (expected mms or zero)"))),
        };
        let problem = Problem { spaces, coefficients: c, bcs: BoundaryConditions::mms(), sources: src };
        let inner = FpsiSolver::new(problem, SolverConfig::new(dt, t_final), initial)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner, errors })
    }

    #[getter]
    fn t(&self) -> f64 {
        self.inner.state().t
    }

    #[getter]
    fn step_index(&self) -> usize {
        self.inner.state().step
    }

    /// Advances one step; returns the six relative block residuals.
    fn step(&mut self) -> PyResult<Vec<f64>> {
        let report = self.inner.step().map_err(err)?;
        if let Some(obs) = &mut self.errors {
            obs.add(&self.inner.problem().spaces, self.inner.state()).map_err(err)?;
        }
        Ok(report.residuals.to_vec())
    }

    /// Steps to the final time; returns the largest residual per block.
    fn run(&mut self) -> PyResult<Vec<f64>> {
        let n = self.inner.config().n_steps().map_err(err)?;
        let mut max = vec![0.0f64; 6];
        while self.inner.state().step < n {
            for (m, r) in max.iter_mut().zip(self.step()?) {
                *m = m.max(r);
            }
        }
        Ok(max)
    }

    /// Coefficient vectors keyed by field name.
    fn state<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = self.inner.state();
        let d = PyDict::new(py);
        for (k, v) in [("uf", &s.uf), ("pf", &s.pf), ("up", &s.up), ("pp", &s.pp), ("eta", &s.eta), ("lambda", &s.lambda)] {
            d.set_item(k, v.clone())?;
        }
        d.set_item("t", s.t)?;
        Ok(d)
    }

    /// Relative error norms accumulated so far, for `"mms"` runs.
    fn errors<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let obs = self.errors.as_ref().ok_or_else(|| PyValueError::new_err("errors need sources = \"mms\""))?;
        let norms = obs.norms();
        let d = PyDict::new(py);
        for n in Norm::ALL {
            d.set_item(n.column(), norms.get(n))?;
        }
        Ok(d)
    }
}

/// One manufactured-solution run on the `n x n` rectangle.
#[pyfunction]
#[pyo3(signature = (family, n, dt, t_final, pattern = "alternating"))]
fn run_mms<'py>(py: Python<'py>, family: &str, n: usize, dt: f64, t_final: f64, pattern: &str) -> PyResult<Bound<'py, PyAny>> {
    let (f, p) = (self::family(family)?, self::pattern(pattern)?);
    let r = py.detach(|| verification::run_mms(f, n, dt, t_final, p)).map_err(err)?;
    to_py(py, &r)
}

/// Convergence study; returns the rows, the CSV text and per-mesh records.
#[pyfunction]
#[pyo3(signature = (family, hmax = 0.125, levels = None, dt = None, t_final = None))]
fn converge<'py>(
    py: Python<'py>,
    family: &str,
    hmax: f64,
    levels: Option<usize>,
    dt: Option<f64>,
    t_final: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let run = nsbiot::config::ConvergeRun { family: self::family(family)?, hmax, levels, dt, t_final, ..Default::default() };
    let cfg = run.study().map_err(|e| PyValueError::new_err(e.to_string()))?;
    let r = py.detach(|| verification::convergence_study(&cfg)).map_err(err)?;
    let d = to_py(py, &r)?;
    d.set_item("csv", r.table.to_csv())?;
    Ok(d)
}

/// `log2(e_coarse / e_fine)` for a halved mesh size.
#[pyfunction]
fn convergence_rate(e_coarse: f64, e_fine: f64) -> PyResult<f64> {
    verification::convergence_rate(e_coarse, e_fine).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Discrete inf-sup estimates `(beta_f, beta_p)` on the `n x n` rectangle.
#[pyfunction]
#[pyo3(signature = (family, n, pattern = "alternating"))]
fn infsup(family: &str, n: usize, pattern: &str) -> PyResult<(f64, f64)> {
    let p = verification::mms_problem(self::family(family)?, n, self::pattern(pattern)?).map_err(err)?;
    let e = verification::infsup_check(&p.spaces).map_err(err)?;
    Ok((e.beta_f, e.beta_p))
}

/// Small data condition for manufactured (`"mms"`) or zero data.
#[pyfunction]
#[pyo3(signature = (family, n, dt, t_final, sources = "mms"))]
fn small_data<'py>(py: Python<'py>, family: &str, n: usize, dt: f64, t_final: f64, sources: &str) -> PyResult<Bound<'py, PyAny>> {
    let p = verification::mms_problem(self::family(family)?, n, DiagonalPattern::Alternating).map_err(err)?;
    let c = ProblemCoefficients::unit();
    let src: Box<dyn Sources> = match sources {
        "mms" => Box::new(ManufacturedSolution::new(c)),
        "zero" => Box::new(ZeroSources),
        other => return Err(PyValueError::new_err(format!("unknown sources `{other}`"))),
    };
    let steps = SolverConfig::new(dt, t_final).n_steps().map_err(|e| PyValueError::new_err(e.to_string()))?;
    let r = stepper::small_data_check(&p.spaces, src.as_ref(), &c, dt, steps, EnergyConstants::default()).map_err(err)?;
    let d = to_py(py, &r)?;
    d.set_item("max_lhs", r.max_lhs())?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (t, p_max = 13334.0, t_max = 0.003))]
fn inflow_pressure(t: f64, p_max: f64, t_max: f64) -> f64 {
    benchmark::inflow_pressure(t, p_max, t_max)
}

/// Arterial benchmark. `config` overrides default parameters; files are
/// written to `output_dir` when given.
#[pyfunction]
#[pyo3(signature = (config = None, output_dir = None))]
fn run_arterial<'py>(
    py: Python<'py>,
    config: Option<&Bound<'py, PyDict>>,
    output_dir: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg: ArterialConfig = match config {
        None => ArterialConfig::default(),
        Some(d) => depythonize(d.as_any()).map_err(|e| PyValueError::new_err(e.to_string()))?,
    };
    let r = py.detach(|| benchmark::run_arterial(&cfg, output_dir.as_deref())).map_err(err)?;
    let d = to_py(py, &r)?;
    let peaks = PyDict::new(py);
    for s in &r.snapshots {
        let row = PyDict::new(py);
        row.set_item("pressure", s.pressure_peak_x())?;
        for q in [TraceQuantity::EtaN, TraceQuantity::UpN] {
            row.set_item(q.name(), s.trace(q).peak_x())?;
        }
        peaks.set_item(s.t, row)?;
    }
    d.set_item("peaks", peaks)?;
    Ok(d)
}

/// Parses and validates a JSON run configuration; returns the canonical
/// form as a dict.
#[pyfunction]
fn parse_config<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg = RunConfig::from_json_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &cfg)
}

#[pymodule]
#[pyo3(name = "nsbiot")]
fn nsbiot_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PySolver>()?;
    m.add_function(wrap_pyfunction!(run_mms, m)?)?;
    m.add_function(wrap_pyfunction!(converge, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_rate, m)?)?;
    m.add_function(wrap_pyfunction!(infsup, m)?)?;
    m.add_function(wrap_pyfunction!(small_data, m)?)?;
    m.add_function(wrap_pyfunction!(inflow_pressure, m)?)?;
    m.add_function(wrap_pyfunction!(run_arterial, m)?)?;
    m.add_function(wrap_pyfunction!(parse_config, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
