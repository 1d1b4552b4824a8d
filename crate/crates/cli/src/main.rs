//! `dcpm`: solve, flow, check, gen and converge.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dcpm_core::geometry::{
    acuteness_margin, all_corner_angles, curvature_from_angles, gauss_bonnet_defect, max_length, scale_lengths,
};
use dcpm_core::io::{fmt_f64, parse_conformal_factor, parse_curvature, write_conformal_factor};
use dcpm_core::solver::{continuation_solve, newton_solve, ContinuationConfig, SolveConfig, SolveResult};
use dcpm_core::surfaces::{convergence_study, octagon_at_level, KappaSpec, CONVERGENCE_HEADER};
use dcpm_core::{calculus, load_mesh, validate_topology, write_mesh, ConformalFactor, Error, FaceCurvature, MeshFile};

#[derive(Parser)]
#[command(name = "dcpm", version, about = "Discrete prescribed negative curvature on closed surfaces")]
struct Cli {
    /// Worker threads for per-face assembly (falls back to DCPM_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Newton solve for K(u) = 0.
    Solve(SolveArgs),
    /// Continuation flow K(u(t)) = (1 − t)·K(u₀).
    Flow(FlowArgs),
    /// Topology, feasibility and acuteness diagnostics.
    Check(CheckArgs),
    /// Write a fixture mesh.
    Gen(GenArgs),
    /// Refinement convergence study on the octagon fixture, as CSV.
    Converge(ConvergeArgs),
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// `const:<negative>` or a file of `k <face_id> <value>` lines.
    #[arg(long, default_value = "const:-1")]
    kappa: String,
    /// Initial conformal factor file (`u <vertex_id> <value>` lines).
    #[arg(long)]
    init: Option<PathBuf>,
    /// Output conformal factor file.
    #[arg(long, default_value = "u.txt")]
    out: PathBuf,
    /// Key-value report file.
    #[arg(long, default_value = "report.txt")]
    report: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
}

#[derive(Args)]
struct FlowArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    /// Skip the Newton polish of the endpoint.
    #[arg(long)]
    no_polish: bool,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// CSV trace: t, ‖K(u(t))‖_∞, ‖K(u(t)) − (1−t)K(u₀)‖_∞.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long, default_value = "const:-1")]
    kappa: String,
    /// Exact isoperimetric constant by enumeration (at most 24 vertices).
    #[arg(long)]
    isoperimetric: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fixture {
    Octagon,
}

#[derive(Args)]
struct GenArgs {
    fixture: Fixture,
    #[arg(long, default_value_t = 0)]
    refine: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConvergeArgs {
    /// Number of refinement levels.
    #[arg(long, default_value_t = 4)]
    levels: usize,
    /// First refinement level.
    #[arg(long, default_value_t = 0)]
    from: usize,
    /// `const:<negative>` or `dual:<amplitude>` (κ = −1 + amplitude·normalized dual distance).
    #[arg(long, default_value = "const:-1")]
    kappa: String,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// CSV output; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InfeasibleFace { .. } | Error::CotSingularity { .. } | Error::ContinuationInfeasible { .. } => 3,
            Error::NotPositiveDefinite | Error::LinearSolve(_) => 4,
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> CliResult {
    std::fs::write(path, contents).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

fn load_kappa(spec: &str, faces: usize) -> CliResult<FaceCurvature> {
    let text = if spec.trim_start().starts_with("const:") {
        spec.to_owned()
    } else {
        read(Path::new(spec))?
    };
    Ok(parse_curvature(&text, faces)?)
}

/// Key-value report with every number at 17 significant digits.
#[derive(Default)]
struct Report(String);

impl Report {
    fn text(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.0, "{key} = {value}");
    }

    fn num(&mut self, key: &str, value: f64) {
        self.text(key, fmt_f64(value));
    }
}

fn describe_input(report: &mut Report, file: &MeshFile, mesh_path: &Path) {
    let topo = validate_topology(&file.mesh);
    report.text("mesh", mesh_path.display());
    report.text("vertices", file.mesh.vertex_count());
    report.text("edges", file.mesh.edge_count());
    report.text("faces", file.mesh.face_count());
    report.text("chi", topo.chi);
    report.text("genus", topo.genus);
    report.text("simplicial", topo.is_simplicial);
    report.num("max_length", max_length(&file.lengths));
}

/// Recomputes K, Gauss–Bonnet and margin at the final u.
fn describe_solution(
    report: &mut Report,
    file: &MeshFile,
    kappa: &FaceCurvature,
    result: &SolveResult,
) -> CliResult<f64> {
    let scaled = scale_lengths(&file.mesh, &result.u, &file.lengths);
    let angles = all_corner_angles(&file.mesh, kappa, &scaled)?;
    let k = curvature_from_angles(&file.mesh, &angles);
    let residual = k.max_abs();
    report.text("converged", result.converged);
    report.text("iterations", result.iterations);
    report.num("residual_inf", residual);
    report.num("solver_residual_inf", result.residual_inf);
    report.num("gauss_bonnet_residual", gauss_bonnet_defect(&file.mesh, &angles, &k));
    report.num("acuteness_margin", acuteness_margin(&file.mesh, kappa, &scaled)?);
    report.num("u_max_abs", result.u.max_abs());
    Ok(residual)
}

fn load_problem(p: &ProblemArgs) -> CliResult<(MeshFile, FaceCurvature, Option<ConformalFactor>)> {
    let file = load_mesh(&read(&p.mesh)?)?;
    let kappa = load_kappa(&p.kappa, file.mesh.face_count())?;
    let init = match &p.init {
        Some(path) => Some(parse_conformal_factor(&read(path)?, file.mesh.vertex_count())?),
        None => None,
    };
    Ok((file, kappa, init))
}

fn finish(report: Report, p: &ProblemArgs, result: &SolveResult, residual: f64, started: Instant) -> CliResult<ExitCode> {
    let mut report = report;
    report.num("elapsed_seconds", started.elapsed().as_secs_f64());
    write(&p.out, &write_conformal_factor(&result.u))?;
    write(&p.report, &report.0)?;
    println!(
        "{} after {} iterations: |K|_inf = {:.3e}, |u|_inf = {:.6}",
        if result.converged { "converged" } else { "NOT converged" },
        result.iterations,
        residual,
        result.u.max_abs()
    );
    println!("wrote {} and {}", p.out.display(), p.report.display());
    Ok(if result.converged { ExitCode::SUCCESS } else { ExitCode::from(4) })
}

fn cmd_solve(args: &SolveArgs) -> CliResult<ExitCode> {
    let started = Instant::now();
    let p = &args.problem;
    let (file, kappa, init) = load_problem(p)?;
    let cfg = SolveConfig {
        tolerance: args.tol,
        max_iterations: args.max_iter,
        initial_u: init,
        ..SolveConfig::default()
    };
    let result = newton_solve(&file.mesh, &kappa, &file.lengths, &cfg)?;

    let mut report = Report::default();
    report.text("command", "solve");
    describe_input(&mut report, &file, &p.mesh);
    report.num("tolerance", args.tol);
    let residual = describe_solution(&mut report, &file, &kappa, &result)?;
    let fallbacks = result.step_log.iter().filter(|s| s.gradient_fallback).count();
    report.text("gradient_fallback_steps", fallbacks);
    finish(report, p, &result, residual, started)
}

fn cmd_flow(args: &FlowArgs) -> CliResult<ExitCode> {
    let started = Instant::now();
    let p = &args.problem;
    let (file, kappa, init) = load_problem(p)?;
    let u0 = init.unwrap_or_else(|| ConformalFactor::zeros(file.mesh.vertex_count()));
    let cfg = ContinuationConfig {
        steps: args.steps,
        newton_polish: !args.no_polish,
        tolerance: args.tol,
        ..ContinuationConfig::default()
    };
    let out = continuation_solve(&file.mesh, &kappa, &file.lengths, &u0, &cfg)?;

    if let Some(path) = &args.trace {
        let mut csv = String::from("t,residual_inf,linearity_defect\n");
        for pt in &out.trace {
            let _ = writeln!(csv, "{},{},{}", fmt_f64(pt.t), fmt_f64(pt.residual_inf), fmt_f64(pt.linearity_defect));
        }
        write(path, &csv)?;
    }

    let mut report = Report::default();
    report.text("command", "flow");
    describe_input(&mut report, &file, &p.mesh);
    report.text("steps", args.steps);
    report.text("newton_polish", !args.no_polish);
    report.num("linearity_defect", out.linearity_defect);
    let residual = describe_solution(&mut report, &file, &kappa, &out.result)?;
    finish(report, p, &out.result, residual, started)
}

fn cmd_check(args: &CheckArgs) -> CliResult<ExitCode> {
    let file = load_mesh(&read(&args.mesh)?)?;
    let kappa = load_kappa(&args.kappa, file.mesh.face_count())?;
    let topo = validate_topology(&file.mesh);

    let mut report = Report::default();
    report.text("command", "check");
    describe_input(&mut report, &file, &args.mesh);
    report.text("max_vertex_degree", topo.max_vertex_degree);
    report.text("solver_eligible", topo.solver_eligible());
    for v in &topo.violations {
        report.text("violation", v);
    }
    if !topo.is_valid() {
        print!("{}", report.0);
        return Ok(ExitCode::from(2));
    }
    if topo.genus < 2 {
        report.text("note", format!("genus {} < 2: not solver-eligible", topo.genus));
    }

    let mut code = ExitCode::SUCCESS;
    match all_corner_angles(&file.mesh, &kappa, &file.lengths) {
        Ok(angles) => {
            let k = curvature_from_angles(&file.mesh, &angles);
            report.text("feasible", true);
            report.num("acuteness_margin", acuteness_margin(&file.mesh, &kappa, &file.lengths)?);
            report.num("residual_inf_at_zero", k.max_abs());
            report.num("gauss_bonnet_residual", gauss_bonnet_defect(&file.mesh, &angles, &k));
        }
        Err(e) => {
            report.text("feasible", false);
            report.text("infeasibility", e);
            code = ExitCode::from(3);
        }
    }
    if args.isoperimetric {
        let graph = calculus::Graph::skeleton(&file.mesh);
        match calculus::isoperimetric_constant(&graph, &file.lengths) {
            Ok(c) => report.num("isoperimetric_constant", c),
            Err(e) => report.text("isoperimetric_constant", format!("unavailable ({e})")),
        }
    }
    print!("{}", report.0);
    Ok(code)
}

fn cmd_gen(args: &GenArgs) -> CliResult<ExitCode> {
    let m = match args.fixture {
        Fixture::Octagon => octagon_at_level(args.refine)?,
    };
    let mut text = format!("# {}\n# refinement level {}\n", m.provenance, m.level);
    text.push_str(&write_mesh(&m.mesh, &m.lengths));
    write(&args.out, &text)?;
    println!(
        "wrote {} ({} vertices, {} edges, {} faces)",
        args.out.display(),
        m.mesh.vertex_count(),
        m.mesh.edge_count(),
        m.mesh.face_count()
    );
    Ok(ExitCode::SUCCESS)
}

fn parse_kappa_spec(spec: &str) -> CliResult<KappaSpec> {
    let bad = || Failure::usage(format!("expected const:<negative> or dual:<amplitude>, got '{spec}'"));
    if let Some(v) = spec.strip_prefix("const:") {
        let k: f64 = v.parse().map_err(|_| bad())?;
        if !(k < 0.0) {
            return Err(Failure::usage(format!("curvature must be negative, got {k}")));
        }
        Ok(KappaSpec::Constant(k))
    } else if let Some(v) = spec.strip_prefix("dual:") {
        let amplitude: f64 = v.parse().map_err(|_| bad())?;
        if !(0.0..1.0).contains(&amplitude) {
            return Err(Failure::usage("dual amplitude must lie in [0, 1) to keep κ negative"));
        }
        Ok(KappaSpec::DualDistance { amplitude })
    } else {
        Err(bad())
    }
}

fn cmd_converge(args: &ConvergeArgs) -> CliResult<ExitCode> {
    if args.levels == 0 {
        return Err(Failure::usage("--levels must be at least 1"));
    }
    let kappa = parse_kappa_spec(&args.kappa)?;
    let levels: Vec<usize> = (args.from..args.from + args.levels).collect();
    let cfg = SolveConfig {
        tolerance: args.tol,
        ..SolveConfig::default()
    };
    let rows = convergence_study(&levels, kappa, &cfg)?;
    let mut csv = format!("{CONVERGENCE_HEADER}\n");
    for row in &rows {
        csv.push_str(&row.to_csv());
        csv.push('\n');
        if !row.converged {
            eprintln!("warning: level {} did not converge (residual {:.3e})", row.level, row.residual);
        }
    }
    match &args.out {
        Some(path) => write(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(if rows.iter().all(|r| r.converged) { ExitCode::SUCCESS } else { ExitCode::from(4) })
}

fn configure_threads(requested: Option<usize>) -> CliResult {
    let threads = match requested {
        Some(n) => Some(n),
        None => match std::env::var("DCPM_THREADS") {
            Ok(v) => Some(v.trim().parse().map_err(|_| Failure::usage(format!("invalid DCPM_THREADS '{v}'")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(format!("cannot configure {n} threads: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> CliResult<ExitCode> {
        configure_threads(cli.threads)?;
        match &cli.command {
            Command::Solve(a) => cmd_solve(a),
            Command::Flow(a) => cmd_flow(a),
            Command::Check(a) => cmd_check(a),
            Command::Gen(a) => cmd_gen(a),
            Command::Converge(a) => cmd_converge(a),
        }
    };
    match run() {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
