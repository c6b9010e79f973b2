use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::json;

use nsbiot::assembly::{Family, Sources, Spaces, ZeroSources};
use nsbiot::benchmark::{run_arterial, TraceQuantity};
use nsbiot::config::{
    ArterialRun, CheckMeshRun, ConvergeRun, RunConfig, SmallDataRun, SolveRun, SourceSpec,
};
use nsbiot::mesh::{read_mesh_str, write_mesh, CoupledMesh, DiagonalPattern, MeshError};
use nsbiot::output::{vertex_values, write_vtk, PointData};
use nsbiot::stepper::{small_data_check, EnergyConstants, EnergyTracker, FpsiSolver, Observer, Problem, TimeState};
use nsbiot::verification::{convergence_study, mms_problem, ErrorObserver, ManufacturedSolution, Norm};

type CliResult = Result<ExitCode, Box<dyn Error>>;

#[derive(Debug, Parser)]
#[command(name = "nsbiot", version, about = "Navier-Stokes / Biot FPSI solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Manufactured-solution convergence study; CSV error table on stdout.
    Converge(ConvergeArgs),
    /// Pulsatile arterial flow; trace CSV and VTK files.
    Arterial(ArterialArgs),
    /// Validates a mesh file and lists every violation.
    CheckMesh(CheckMeshArgs),
    /// Evaluates the discrete small data condition.
    SmallData(SmallDataArgs),
    /// Time integration on a mesh file.
    Solve(SolveArgs),
    /// Writes the structured manufactured-solution mesh.
    Mesh(MeshArgs),
}

#[derive(Debug, Args)]
struct ConvergeArgs {
    /// JSON configuration; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    family: Option<Family>,
    /// Coarsest mesh size, `1/n` or a decimal.
    #[arg(long, value_parser = parse_fraction)]
    hmax: Option<f64>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "T")]
    t_final: Option<f64>,
    #[arg(long, value_parser = parse_pattern)]
    pattern: Option<DiagonalPattern>,
    /// CSV file; defaults to `convergence_<family>.csv`.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ArterialArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "T")]
    t_final: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    p_max: Option<f64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckMeshArgs {
    path: PathBuf,
}

#[derive(Debug, Args)]
struct SmallDataArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    family: Option<Family>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "T")]
    t_final: Option<f64>,
    #[arg(long, value_parser = parse_sources)]
    sources: Option<SourceSpec>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long)]
    family: Option<Family>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "T")]
    t_final: Option<f64>,
    #[arg(long, value_parser = parse_sources)]
    sources: Option<SourceSpec>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MeshArgs {
    /// Cells per unit length.
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, value_parser = parse_pattern, default_value = "alternating")]
    pattern: DiagonalPattern,
    output: PathBuf,
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
            let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
            a / b
        }
        None => s.trim().parse().map_err(|e| format!("{e}"))?,
    };
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not a positive number"))
    }
}

fn parse_pattern(s: &str) -> Result<DiagonalPattern, String> {
    serde_json::from_value(json!(s)).map_err(|_| format!("unknown pattern `{s}`"))
}

fn parse_sources(s: &str) -> Result<SourceSpec, String> {
    s.parse()
}

/// Payload of the file at `path`, which must be for `command`.
fn load<T>(path: Option<&Path>, command: &str, pick: impl FnOnce(RunConfig) -> Option<T>) -> Result<Option<T>, Box<dyn Error>> {
    let Some(path) = path else { return Ok(None) };
    let cfg = RunConfig::from_path(path)?;
    let found = cfg.command();
    pick(cfg)
        .map(Some)
        .ok_or_else(|| format!("{}: configuration is for `{found}`, not `{command}`", path.display()).into())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Converge(a) => converge(a),
        Command::Arterial(a) => arterial(a),
        Command::CheckMesh(a) => check_mesh(a),
        Command::SmallData(a) => small_data(a),
        Command::Solve(a) => solve(a),
        Command::Mesh(a) => mesh(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn converge(a: ConvergeArgs) -> CliResult {
    let mut run = load(a.config.as_deref(), "converge", |c| match c {
        RunConfig::Converge(r) => Some(r),
        _ => None,
    })?
    .unwrap_or_default();
    if let Some(f) = a.family {
        if f != run.family {
            run.levels = None;
            run.dt = None;
            run.t_final = None;
        }
        run.family = f;
    }
    run.hmax = a.hmax.unwrap_or(run.hmax);
    run.levels = a.levels.or(run.levels);
    run.dt = a.dt.or(run.dt);
    run.t_final = a.t_final.or(run.t_final);
    run.pattern = a.pattern.unwrap_or(run.pattern);
    run.output = a.output.or(run.output);
    let cfg = ConvergeRun::study(&run)?;
    info!("convergence study: {cfg:?}");
    let result = convergence_study(&cfg)?;
    for r in &result.runs {
        info!(
            "n = {}: {} dofs, {} steps, {:.1} s, max residual {:.2e}, energy bound {}",
            r.n,
            r.dofs,
            r.steps,
            r.seconds,
            r.max_residuals.iter().fold(0.0f64, |m, &v| m.max(v)),
            if r.energy.holds { "holds" } else { "VIOLATED" }
        );
    }
    let csv = result.table.to_csv();
    let out = run.output_path();
    fs::write(&out, &csv).map_err(|e| format!("{}: {e}", out.display()))?;
    print!("{csv}");
    info!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn arterial(a: ArterialArgs) -> CliResult {
    let mut run: ArterialRun = load(a.config.as_deref(), "arterial", |c| match c {
        RunConfig::Arterial(r) => Some(r),
        _ => None,
    })?
    .unwrap_or_default();
    let p = &mut run.parameters;
    p.t_final = a.t_final.unwrap_or(p.t_final);
    p.dt = a.dt.unwrap_or(p.dt);
    p.nx = a.nx.unwrap_or(p.nx);
    p.p_max = a.p_max.unwrap_or(p.p_max);
    p.snapshots.retain(|&t| t <= p.t_final);
    run.output_dir = a.output_dir.unwrap_or(run.output_dir);
    let r = run_arterial(&run.parameters, Some(&run.output_dir))?;
    info!("arterial run: {} steps in {:.1} s", r.summary.steps.len(), r.seconds);
    println!("t,pressure_peak_x,eta_n_peak_x,up_n_peak_x,max_up_t,max_uf_t");
    for s in &r.snapshots {
        let peak = |q| s.trace(q).peak_x().unwrap_or(f64::NAN);
        println!(
            "{},{},{},{},{:.6e},{:.6e}",
            s.t,
            s.pressure_peak_x(),
            peak(TraceQuantity::EtaN),
            peak(TraceQuantity::UpN),
            s.trace(TraceQuantity::UpT).max_abs(),
            s.trace(TraceQuantity::UfT).max_abs()
        );
    }
    for f in &r.files {
        info!("wrote {}", f.display());
    }
    if !r.all_finite {
        return Err("non-finite values in the solution".into());
    }
    Ok(ExitCode::SUCCESS)
}

fn check_mesh(a: CheckMeshArgs) -> CliResult {
    let run = CheckMeshRun { path: a.path };
    let text = fs::read_to_string(&run.path).map_err(|e| format!("{}: {e}", run.path.display()))?;
    match read_mesh_str(&text) {
        Ok(m) => {
            println!(
                "ok: {} fluid cells, {} poroelastic cells, {} interface edges, h = {:.6}",
                m.fluid.n_cells(),
                m.poro.n_cells(),
                m.interface.len(),
                m.h_max()
            );
            Ok(ExitCode::SUCCESS)
        }
        Err(MeshError::Invalid(violations)) => {
            for v in &violations {
                println!("{v}");
            }
            eprintln!("error: {} violation(s) in {}", violations.len(), run.path.display());
            Ok(ExitCode::FAILURE)
        }
        Err(e) => Err(format!("{}: {e}", run.path.display()).into()),
    }
}

fn small_data(a: SmallDataArgs) -> CliResult {
    let mut run: SmallDataRun = load(a.config.as_deref(), "small-data", |c| match c {
        RunConfig::SmallData(r) => Some(r),
        _ => None,
    })?
    .unwrap_or_default();
    run.family = a.family.unwrap_or(run.family);
    run.n = a.n.unwrap_or(run.n);
    run.dt = a.dt.unwrap_or(run.dt);
    run.t_final = a.t_final.unwrap_or(run.t_final);
    run.sources = a.sources.unwrap_or(run.sources);
    run.validate()?;
    let problem = mms_problem(run.family, run.n, run.pattern)?;
    let sources: Box<dyn Sources> = match run.sources {
        SourceSpec::Zero => Box::new(ZeroSources),
        SourceSpec::Mms => Box::new(ManufacturedSolution::new(run.coefficients)),
    };
    let n_steps = nsbiot::stepper::SolverConfig::new(run.dt, run.t_final).n_steps()?;
    let r = small_data_check(&problem.spaces, sources.as_ref(), &run.coefficients, run.dt, n_steps, run.constants)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "max_lhs": r.max_lhs(),
            "threshold": r.threshold,
            "satisfied": r.satisfied,
        }))?
    );
    Ok(ExitCode::SUCCESS)
}

fn solve(a: SolveArgs) -> CliResult {
    let mut run: Option<SolveRun> = load(a.config.as_deref(), "solve", |c| match c {
        RunConfig::Solve(r) => Some(r),
        _ => None,
    })?;
    if run.is_none() {
        let (Some(mesh), Some(dt), Some(t_final)) = (a.mesh.clone(), a.dt, a.t_final) else {
            return Err("solve needs --config or all of --mesh, --dt and --T".into());
        };
        let text = json!({"command": "solve", "mesh": mesh, "dt": dt, "t_final": t_final}).to_string();
        run = match RunConfig::from_json_str(&text)? {
            RunConfig::Solve(r) => Some(r),
            _ => unreachable!(),
        };
    }
    let mut run = run.expect("set above");
    run.mesh = a.mesh.unwrap_or(run.mesh);
    run.family = a.family.unwrap_or(run.family);
    run.dt = a.dt.unwrap_or(run.dt);
    run.t_final = a.t_final.unwrap_or(run.t_final);
    run.sources = a.sources.unwrap_or(run.sources);
    run.output_dir = a.output_dir.or(run.output_dir);
    run.validate()?;

    let text = fs::read_to_string(&run.mesh).map_err(|e| format!("{}: {e}", run.mesh.display()))?;
    let mesh: CoupledMesh = read_mesh_str(&text).map_err(|e| format!("{}: {e}", run.mesh.display()))?;
    let spaces = Spaces::of_family(Arc::new(mesh), run.family)?;
    let sol = ManufacturedSolution::new(run.coefficients);
    let (sources, initial): (Arc<dyn Sources>, TimeState) = match run.sources {
        SourceSpec::Zero => (Arc::new(ZeroSources), TimeState::zeros(&spaces)),
        SourceSpec::Mms => (Arc::new(sol.clone()), sol.initial_state(&spaces, run.dt)?),
    };
    let problem = Problem { spaces, coefficients: run.coefficients, bcs: run.bcs.clone(), sources };
    let mut solver = FpsiSolver::new(problem, nsbiot::stepper::SolverConfig::new(run.dt, run.t_final), initial)?;
    let mut energy = EnergyTracker::new(&solver, EnergyConstants::default())?;
    let mut errors = ErrorObserver::new(sol, run.dt);
    let summary = {
        let mut observers: Vec<&mut dyn Observer> = vec![&mut energy];
        if run.sources == SourceSpec::Mms {
            observers.push(&mut errors);
        }
        solver.run(&mut observers)?
    };
    let mut report = energy.report();
    report.series.clear();
    let mut out = json!({
        "steps": summary.steps.len(),
        "t": solver.state().t,
        "max_residuals": summary.max_residuals,
        "energy": report,
    });
    if run.sources == SourceSpec::Mms {
        let norms = errors.norms();
        let rel: serde_json::Map<String, serde_json::Value> =
            Norm::ALL.iter().map(|&n| (n.column().to_string(), json!(norms.get(n)))).collect();
        out["relative_errors"] = serde_json::Value::Object(rel);
    }
    if let Some(dir) = &run.output_dir {
        write_state(dir, &solver)?;
        info!("wrote fluid.vtk and poro.vtk to {}", dir.display());
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(ExitCode::SUCCESS)
}

fn write_state(dir: &Path, solver: &FpsiSolver) -> Result<(), Box<dyn Error>> {
    fs::create_dir_all(dir)?;
    let s = &solver.problem().spaces;
    let st = solver.state();
    let scalar = |v: Vec<[f64; 2]>| PointData::Scalar(v.into_iter().map(|x| x[0]).collect());
    let mut f = std::io::BufWriter::new(fs::File::create(dir.join("fluid.vtk"))?);
    write_vtk(
        &mut f,
        &format!("fluid t={}", st.t),
        &s.mesh.fluid,
        None,
        &[
            ("velocity", PointData::Vector(vertex_values(&s.uf, &st.uf)?)),
            ("pressure", scalar(vertex_values(&s.pf, &st.pf)?)),
        ],
    )?;
    let mut f = std::io::BufWriter::new(fs::File::create(dir.join("poro.vtk"))?);
    write_vtk(
        &mut f,
        &format!("poroelastic t={}", st.t),
        &s.mesh.poro,
        None,
        &[
            ("darcy_velocity", PointData::Vector(vertex_values(&s.up, &st.up)?)),
            ("pressure", scalar(vertex_values(&s.pp, &st.pp)?)),
            ("displacement", PointData::Vector(vertex_values(&s.eta, &st.eta)?)),
        ],
    )?;
    Ok(())
}

fn mesh(a: MeshArgs) -> CliResult {
    let problem = mms_problem(Family::Lower, a.n, a.pattern)?;
    write_mesh(&problem.spaces.mesh, &a.output)?;
    info!("wrote {}", a.output.display());
    Ok(ExitCode::SUCCESS)
}
