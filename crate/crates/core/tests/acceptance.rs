//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::sync::Arc;

use nsbiot::assembly::{
    assemble_af, assemble_b, assemble_mass, assemble_scalar_mass, h1_gram, Family, Spaces, ZeroSources,
};
use nsbiot::assembly::{BoundaryConditions, ProblemCoefficients};
use nsbiot::benchmark::{run_arterial, ArterialConfig, TraceQuantity};
use nsbiot::fem::{build_space, essential_bc_mask, interpolate, Components, ElementKind, EssentialBc};
use nsbiot::linalg::{dot, SparseMatrix};
use nsbiot::mesh::{build_rectangle_coupled_mesh, BoundaryTag, CoupledMesh, DiagonalPattern, RectangleTags};
use nsbiot::quadrature::{triangle_rule, MAX_DEGREE};
use nsbiot::stepper::{FpsiSolver, Problem, SolverConfig, TimeState};
use nsbiot::verification::{convergence_study, infsup_check, stokes_infsup, ConvergenceConfig, Norm, StudyResult};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }

    fn error(e: impl std::fmt::Display) -> Self {
        Self::new(false, format!("error: {e}"))
    }
}

fn mesh(n: usize, pattern: DiagonalPattern) -> CoupledMesh {
    build_rectangle_coupled_mesh([0.0, 1.0, -1.0, 1.0], 0.0, n, n, n, RectangleTags::mms(), pattern).unwrap()
}

fn within(x: Option<f64>, target: f64, tol: f64) -> bool {
    x.is_some_and(|r| (r - target).abs() <= tol)
}

fn fmt_rate(x: Option<f64>) -> String {
    x.map_or("n/a".into(), |r| format!("{r:.3}"))
}

fn rates_detail(study: &StudyResult) -> String {
    Norm::ALL
        .iter()
        .map(|&n| format!("{}={}", n.column(), fmt_rate(study.table.last_rate(n))))
        .collect::<Vec<_>>()
        .join(" ")
}

fn criterion_lower(study: &Result<StudyResult, String>) -> Outcome {
    let study = match study {
        Ok(s) => s,
        Err(e) => return Outcome::error(e),
    };
    let t = &study.table;
    let pass = [Norm::FluidVelocity, Norm::FluidPressure, Norm::DarcyVelocity, Norm::DarcyPressure, Norm::Multiplier]
        .iter()
        .all(|&n| within(t.last_rate(n), 1.0, 0.15))
        && within(t.last_rate(Norm::DarcyDivergence), 1.0, 0.25)
        && t.last_rate(Norm::Displacement).is_some_and(|r| r >= 0.85);
    Outcome::new(pass, rates_detail(study))
}

fn criterion_higher(study: &Result<StudyResult, String>) -> Outcome {
    let study = match study {
        Ok(s) => s,
        Err(e) => return Outcome::error(e),
    };
    let pass = Norm::ALL.iter().all(|&n| within(study.table.last_rate(n), 2.0, 0.25));
    Outcome::new(pass, rates_detail(study))
}

fn criterion_residuals(studies: &[&Result<StudyResult, String>], arterial: &Result<f64, String>) -> Outcome {
    let mut worst = 0.0f64;
    for study in studies {
        match study {
            Ok(s) => {
                for r in &s.runs {
                    worst = r.max_residuals.iter().fold(worst, |m, &x| m.max(x));
                }
            }
            Err(e) => return Outcome::error(e),
        }
    }
    match arterial {
        Ok(r) => worst = worst.max(*r),
        Err(e) => return Outcome::error(e),
    }
    Outcome::new(worst <= 1e-8, format!("max relative block residual {worst:.3e} (limit 1e-8)"))
}

fn criterion_energy(studies: &[&Result<StudyResult, String>]) -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for study in studies {
        match study {
            Ok(s) => {
                for r in &s.runs {
                    pass &= r.energy.holds;
                    lines.push(format!("{:?} h=1/{}: {:.3e} <= {:.3e}", s.config.family, r.n, r.energy.lhs, r.energy.rhs));
                }
            }
            Err(e) => return Outcome::error(e),
        }
    }
    Outcome::new(pass, lines.join("; "))
}

fn zero_run(family: Family) -> Result<f64, String> {
    let spaces = Spaces::of_family(Arc::new(mesh(4, DiagonalPattern::Alternating)), family).map_err(|e| e.to_string())?;
    let init = TimeState::zeros(&spaces);
    let problem = Problem {
        spaces,
        coefficients: ProblemCoefficients::unit(),
        bcs: BoundaryConditions::mms(),
        sources: Arc::new(ZeroSources),
    };
    let mut solver = FpsiSolver::new(problem, SolverConfig::new(1e-3, 2e-2), init).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        solver.step().map_err(|e| e.to_string())?;
        worst = worst.max(solver.state().max_abs());
    }
    Ok(worst)
}

fn criterion_zero_data() -> Outcome {
    let mut pass = true;
    let mut lines = Vec::new();
    for family in [Family::Lower, Family::Higher] {
        match zero_run(family) {
            Ok(m) => {
                pass &= m <= 1e-12;
                lines.push(format!("{family:?}: max |x| = {m:.1e} over 20 steps"));
            }
            Err(e) => return Outcome::error(e),
        }
    }
    Outcome::new(pass, lines.join("; "))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Largest mismatch of every rule against `a! b! / (a + b + 2)!` for all
/// monomials `x^a y^b` within the rule's degree.
fn quadrature_mismatch() -> f64 {
    let mut worst = 0.0f64;
    for degree in 1..=MAX_DEGREE {
        let rule = triangle_rule(degree).unwrap();
        for a in 0..=degree {
            for b in 0..=degree - a {
                let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                let got = rule.integrate(|p| p[0].powi(a as i32) * p[1].powi(b as i32));
                worst = worst.max((got - exact).abs());
            }
        }
    }
    worst
}

fn dense(m: &SparseMatrix) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; m.ncols()]; m.nrows()];
    for (i, row) in d.iter_mut().enumerate() {
        for (j, v) in m.row(i) {
            row[j] += v;
        }
    }
    d
}

fn cholesky(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            l[i][j] = if i == j { (a[i][i] - s).sqrt() } else { (a[i][j] - s) / l[j][j] };
        }
    }
    l
}

/// Solves `L X = B` for a lower triangular `L`.
fn forward(l: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, m) = (l.len(), b[0].len());
    let mut x = vec![vec![0.0; m]; n];
    for c in 0..m {
        for i in 0..n {
            let s: f64 = (0..i).map(|k| l[i][k] * x[k][c]).sum();
            x[i][c] = (b[i][c] - s) / l[i][i];
        }
    }
    x
}

/// Singular values of `a` by one-sided Jacobi rotations on its columns.
fn singular_values(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let (m, n) = (a.len(), a[0].len());
    for _ in 0..200 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut app, mut aqq, mut apq) = (0.0, 0.0, 0.0);
                for row in a.iter() {
                    app += row[p] * row[p];
                    aqq += row[q] * row[q];
                    apq += row[p] * row[q];
                }
                if apq.abs() <= 1e-15 * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for row in a.iter_mut() {
                    let (xp, xq) = (row[p], row[q]);
                    row[p] = c * xp - s * xq;
                    row[q] = s * xp + c * xq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (0..n).map(|j| (0..m).map(|i| a[i][j] * a[i][j]).sum::<f64>().sqrt()).collect()
}

/// Smallest singular value of `Lw^{-1} B Lv^{-T}`, where `Gv = Lv Lv^T`
/// and `Gw = Lw Lw^T`.
fn dense_infsup(b: &SparseMatrix, gv: &SparseMatrix, gw: &SparseMatrix) -> f64 {
    let lv = cholesky(&dense(gv));
    let lw = cholesky(&dense(gw));
    let d = dense(b);
    let bt: Vec<Vec<f64>> = (0..b.ncols()).map(|j| (0..b.nrows()).map(|i| d[i][j]).collect()).collect();
    let y = forward(&lv, &bt);
    let yt: Vec<Vec<f64>> = (0..b.nrows()).map(|i| (0..b.ncols()).map(|j| y[j][i]).collect()).collect();
    // Columns of the transpose keep the row count at least the column count.
    let z = forward(&lw, &yt);
    let zt: Vec<Vec<f64>> = (0..b.ncols()).map(|j| (0..b.nrows()).map(|i| z[i][j]).collect()).collect();
    singular_values(zt).into_iter().fold(f64::INFINITY, f64::min)
}

fn oracle_suite() -> Result<Vec<(&'static str, f64)>, String> {
    let mut checks = vec![("quadrature monomials", quadrature_mismatch())];
    let m = Arc::new(mesh(4, DiagonalPattern::Alternating));
    for family in [Family::Lower, Family::Higher] {
        let spaces = Spaces::of_family(m.clone(), family).map_err(|e| e.to_string())?;
        // Fluid region is the unit square.
        let ones = vec![1.0; spaces.pf.n_dofs()];
        let mass = assemble_scalar_mass(&spaces.pf, 1.0).map_err(|e| e.to_string())?;
        checks.push(("pressure mass total", (dot(&ones, &mass.matvec(&ones)) - 1.0).abs()));

        let unit_x = interpolate(&spaces.uf, |_| [1.0, 0.0]).map_err(|e| e.to_string())?;
        let vmass = assemble_mass(&spaces.uf, 3.0).map_err(|e| e.to_string())?;
        checks.push(("velocity mass of (1, 0)", (dot(&unit_x, &vmass.matvec(&unit_x)) - 3.0).abs()));

        // u = (x + 2y, 3x - y): D(u) = [[1, 5/2], [5/2, -1]], |D|^2 = 29/2,
        // a_f(u, u) = 2 mu |D|^2 and div u = 0.
        let u = interpolate(&spaces.uf, |p| [p.x + 2.0 * p.y, 3.0 * p.x - p.y]).map_err(|e| e.to_string())?;
        let af = assemble_af(&spaces.uf, 0.5).map_err(|e| e.to_string())?;
        checks.push(("a_f of a linear field", (dot(&u, &af.matvec(&u)) - 14.5).abs()));

        // u = (x^2, x y): div u = 3x, so b_f(u, 1) = -3/2.
        let u = interpolate(&spaces.uf, |p| [p.x * p.x, p.x * p.y]).map_err(|e| e.to_string())?;
        let b = assemble_b(&spaces.uf, &spaces.pf).map_err(|e| e.to_string())?;
        let quadratic_exact = family == Family::Higher;
        let value = dot(&ones, &b.matvec(&u));
        if quadratic_exact {
            checks.push(("b_f of a quadratic field", (value + 1.5).abs()));
        }
        let u = interpolate(&spaces.uf, |p| [2.0 * p.x, -p.y + p.x]).map_err(|e| e.to_string())?;
        checks.push(("b_f of a linear field", (dot(&ones, &b.matvec(&u)) + 1.0).abs()));
    }

    let small = Spaces::of_family(Arc::new(mesh(2, DiagonalPattern::Alternating)), Family::Lower).map_err(|e| e.to_string())?;
    let est = infsup_check(&small).map_err(|e| e.to_string())?;
    let uf = &small.uf;
    let mut bc = EssentialBc::new(uf.n_dofs());
    essential_bc_mask(uf, &[BoundaryTag::GammaF], Components::Both, |_, _| [0.0; 2], 0.0, &mut bc).map_err(|e| e.to_string())?;
    let free: Vec<usize> = (0..uf.n_dofs()).filter(|&i| !bc.mask[i]).collect();
    let rows: Vec<usize> = (0..small.pf.n_dofs()).collect();
    let b = assemble_b(uf, &small.pf).map_err(|e| e.to_string())?.select(&rows, &free);
    let gv = h1_gram(uf).map_err(|e| e.to_string())?.select(&free, &free);
    let gw = assemble_scalar_mass(&small.pf, 1.0).map_err(|e| e.to_string())?;
    checks.push(("inf-sup against dense SVD", (est.beta_f - dense_infsup(&b, &gv, &gw)).abs()));
    Ok(checks)
}

fn criterion_oracles() -> Outcome {
    match oracle_suite() {
        Ok(checks) => {
            let worst = checks.iter().fold(0.0f64, |m, c| m.max(c.1));
            let failed: Vec<String> =
                checks.iter().filter(|c| !(c.1 <= 1e-10)).map(|c| format!("{} off by {:.2e}", c.0, c.1)).collect();
            let detail = if failed.is_empty() {
                format!("{} checks, worst mismatch {worst:.2e} (limit 1e-10)", checks.len())
            } else {
                failed.join("; ")
            };
            Outcome::new(failed.is_empty(), detail)
        }
        Err(e) => Outcome::error(e),
    }
}

fn p1p1_infsup(n: usize) -> Result<f64, String> {
    let m = mesh(n, DiagonalPattern::Uniform);
    let v = build_space(&m.fluid, ElementKind::P1, true).map_err(|e| e.to_string())?;
    let q = build_space(&m.fluid, ElementKind::P1, false).map_err(|e| e.to_string())?;
    stokes_infsup(&v, &q, &[BoundaryTag::GammaF]).map_err(|e| e.to_string())
}

fn criterion_infsup() -> Outcome {
    let run = || -> Result<Outcome, String> {
        let est = |n: usize| {
            let spaces = Spaces::of_family(Arc::new(mesh(n, DiagonalPattern::Alternating)), Family::Lower).map_err(|e| e.to_string())?;
            infsup_check(&spaces).map_err(|e| e.to_string())
        };
        let (a, b) = (est(4)?, est(8)?);
        let (c, d) = (p1p1_infsup(4)?, p1p1_infsup(8)?);
        let stable = |x: f64, y: f64| x > 0.0 && y > 0.0 && (y / x - 1.0).abs() <= 0.25;
        let pass = stable(a.beta_f, b.beta_f) && stable(a.beta_p, b.beta_p) && d < 1e-6 * b.beta_f;
        Ok(Outcome::new(
            pass,
            format!(
                "P1b-P1 {:.4} -> {:.4}; RT0-P0+Lambda {:.4} -> {:.4}; P1-P1 {c:.1e} -> {d:.1e}",
                a.beta_f, b.beta_f, a.beta_p, b.beta_p
            ),
        ))
    };
    run().unwrap_or_else(Outcome::error)
}

struct ArterialChecks {
    outcome: Outcome,
    max_residual: Result<f64, String>,
}

fn criterion_arterial() -> ArterialChecks {
    let config = ArterialConfig::default();
    let result = match run_arterial(&config, None) {
        Ok(r) => r,
        Err(e) => return ArterialChecks { outcome: Outcome::error(&e), max_residual: Err(e.to_string()) },
    };
    let cell = result.cell_width;
    let peaks: Vec<f64> = result.snapshots.iter().map(|s| s.pressure_peak_x()).collect();
    let rightward = peaks.len() >= 3 && peaks.windows(2).all(|w| w[1] > w[0]);
    let mut colocated = !result.snapshots.is_empty();
    let mut ratio_ok = !result.snapshots.is_empty();
    let mut lines = Vec::new();
    for s in &result.snapshots {
        let eta = s.trace(TraceQuantity::EtaN).peak_x();
        let up = s.trace(TraceQuantity::UpN).peak_x();
        let close = matches!((eta, up), (Some(a), Some(b)) if (a - b).abs() <= cell);
        colocated &= close;
        let tangential = |q| s.trace(q).max_abs();
        let ratio = tangential(TraceQuantity::UpT) / tangential(TraceQuantity::UfT);
        ratio_ok &= ratio < 0.1;
        lines.push(format!(
            "t={:.1}ms p_f peak x={:.3} eta.n peak x={} u_p.n peak x={} ratio={ratio:.3}",
            s.t * 1e3,
            s.pressure_peak_x(),
            fmt_rate(eta),
            fmt_rate(up),
        ));
    }
    let fast = result.seconds < 600.0;
    let pass = rightward && colocated && ratio_ok && fast && result.all_finite;
    let detail = format!(
        "rightward={rightward} colocated(cell {cell:.3})={colocated} ratio<0.1={ratio_ok} time={:.1}s finite={}; {}",
        result.seconds,
        result.all_finite,
        lines.join("; ")
    );
    let max_residual = result.summary.max_residuals.iter().fold(0.0f64, |m, &r| m.max(r));
    ArterialChecks { outcome: Outcome::new(pass, detail), max_residual: Ok(max_residual) }
}

fn study(family: Family) -> Result<StudyResult, String> {
    let result = convergence_study(&ConvergenceConfig::of_family(family)).map_err(|e| e.to_string());
    if let Ok(s) = &result {
        print!("{}", s.table.to_csv());
    }
    result
}

fn main() -> ExitCode {
    let mut outcomes: Vec<(&str, Outcome)> = Vec::new();
    // The oracle suite runs first: later criteria trust the assembled forms.
    let oracles = criterion_oracles();
    let zero = criterion_zero_data();
    let infsup = criterion_infsup();
    let lower = study(Family::Lower);
    let higher = study(Family::Higher);
    let arterial = criterion_arterial();

    outcomes.push(("lower-order convergence", criterion_lower(&lower)));
    outcomes.push(("higher-order convergence", criterion_higher(&higher)));
    outcomes.push(("discrete conservation", criterion_residuals(&[&lower, &higher], &arterial.max_residual)));
    outcomes.push(("energy stability", criterion_energy(&[&lower, &higher])));
    outcomes.push(("zero-data null test", zero));
    outcomes.push(("oracle suite", oracles));
    outcomes.push(("inf-sup sanity", infsup));
    outcomes.push(("arterial benchmark", arterial.outcome));

    let mut failed = 0;
    for (k, (name, o)) in outcomes.iter().enumerate() {
        println!("criterion {} {name}: {} ({})", k + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} of {} criteria failed", outcomes.len());
        ExitCode::FAILURE
    }
}
