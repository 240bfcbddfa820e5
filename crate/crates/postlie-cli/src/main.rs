//! Command-line front end: splitting certification, flow solving with
//! diagnostics, and the identity-verification suites. All randomized work
//! is seeded; a fixed seed gives byte-identical reports.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use postlie::flow::{
    preset_problem, solve, trajectory_json_string, trajectory_to_csv, FlowMethod, FlowPreset,
    FlowProblem,
};
use postlie::jsonio;
use postlie::verify::{run_suite, SuiteId, VerifyOptions};
use postlie::{Error, SplittingSpec};

#[derive(Parser)]
#[command(
    name = "postlie",
    about = "Isospectral Lax flows via R-matrix splittings and post-Lie factorization",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Certify a splitting against its defining identities on random samples.
    Validate(ValidateArgs),
    /// Solve a Lax flow and export the trajectory with diagnostics.
    Solve(SolveArgs),
    /// Run an identity-verification suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// Splitting spec JSON file ({"dim": n, "kind": ..., "matrix": ...}).
    #[arg(long, conflicts_with_all = ["kind", "dim"])]
    spec: Option<PathBuf>,
    /// Built-in splitting kind (lower_triangular | qr_skew).
    #[arg(long, requires = "dim")]
    kind: Option<String>,
    /// Matrix dimension for --kind.
    #[arg(long)]
    dim: Option<usize>,
    /// Number of random sample pairs.
    #[arg(long, default_value_t = postlie::splitting::DEFAULT_SAMPLE_COUNT)]
    samples: usize,
    /// RNG seed for the sample pairs.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Certification tolerance.
    #[arg(long, default_value_t = postlie::splitting::DEFAULT_VALIDATION_TOL)]
    tol: f64,
    /// Report file (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Flow problem JSON file.
    #[arg(long, conflicts_with = "preset")]
    problem: Option<PathBuf>,
    /// Built-in problem (toda5 | qrflow4 | triangular3).
    #[arg(long)]
    preset: Option<String>,
    /// Override the method (factorized | rk4 | magnus_series).
    #[arg(long)]
    method: Option<String>,
    /// RK4 step size override.
    #[arg(long)]
    rk4_step: Option<f64>,
    /// Series truncation order for the magnus_series method.
    #[arg(long)]
    order: Option<usize>,
    /// Fixed-point tolerance override.
    #[arg(long)]
    chi_tol: Option<f64>,
    /// Sub-step cap on ‖h·a‖_F.
    #[arg(long)]
    substep_cap: Option<f64>,
    /// Seed for auto-certification of file-loaded splittings.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Maximum allowed eigenvalue drift for exit code 0.
    #[arg(long, default_value_t = 1e-8)]
    drift_bound: f64,
    /// Maximum allowed Lax defect for exit code 0.
    #[arg(long, default_value_t = 5e-2)]
    defect_bound: f64,
    /// Output path prefix (writes PREFIX.csv and PREFIX.json).
    #[arg(long, default_value = "trajectory")]
    out: PathBuf,
    /// Which artifacts to write: json, csv, or both.
    #[arg(long, default_value = "both")]
    format: String,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name: postlie | chi | magnus | hopf | star | all.
    suite: String,
    /// RNG seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Filtration cap / max power for the symbolic checks.
    #[arg(long, default_value_t = 6)]
    degree: usize,
    /// Truncation order for the series checks.
    #[arg(long, default_value_t = 6)]
    order: usize,
    /// Matrix dimension for the triple-based checks.
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Structure-constant catalog for the symbolic suite (sl2 | gl2 | gl3).
    #[arg(long, default_value = "sl2")]
    algebra: String,
    /// Replaces the default tolerance of residual checks.
    #[arg(long)]
    tol: Option<f64>,
    /// Report file (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Validate(args) => cmd_validate(args),
        Cmd::Solve(args) => cmd_solve(args),
        Cmd::Verify(args) => cmd_verify(args),
    };
    ExitCode::from(code)
}

/// POSTLIE_THREADS caps internal parallelism.
fn init_thread_pool() {
    if let Ok(v) = std::env::var("POSTLIE_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            postlie::set_thread_cap(n);
        }
    }
}

fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidInput(_) | Error::DimensionMismatch { .. } | Error::UnsupportedSplitting(_)
    )
}

fn read_json(path: &PathBuf) -> Result<Value, u8> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        2u8
    })?;
    serde_json::from_str(&text).map_err(|e| {
        eprintln!("error: {} is not valid JSON: {e}", path.display());
        2u8
    })
}

fn write_report(path: &PathBuf, doc: &Value) -> Result<(), u8> {
    fs::write(path, jsonio::to_string_pretty(doc)).map_err(|e| {
        eprintln!("error: cannot write {}: {e}", path.display());
        2u8
    })
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

fn cmd_validate(args: ValidateArgs) -> u8 {
    let mut spec = match load_spec(&args) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let report = match spec.validate_random(args.samples, args.seed, args.tol) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return if is_input_error(&e) { 2 } else { 3 };
        }
    };
    println!(
        "splitting {} on gl({}): {} over {} samples (seed {})",
        report.kind,
        report.dim,
        if report.validated { "VALIDATED" } else { "NOT VALIDATED" },
        report.sample_count,
        args.seed
    );
    println!("  identity residual (plus)  {}", jsonio::fmt_f64(report.mybe_plus));
    println!("  identity residual (minus) {}", jsonio::fmt_f64(report.mybe_minus));
    println!("  modified CYBE residual    {}", jsonio::fmt_f64(report.mcybe));
    println!("  closure residual (plus)   {}", jsonio::fmt_f64(report.closure_plus));
    println!("  closure residual (minus)  {}", jsonio::fmt_f64(report.closure_minus));
    if let Some(out) = &args.out {
        let doc = serde_json::to_value(&report).expect("report serializes");
        if let Err(code) = write_report(out, &doc) {
            return code;
        }
    }
    u8::from(!report.validated)
}

fn load_spec(args: &ValidateArgs) -> Result<SplittingSpec, u8> {
    if let Some(path) = &args.spec {
        let doc = read_json(path)?;
        return SplittingSpec::from_json(&doc).map_err(|e| {
            eprintln!("error: {e}");
            2u8
        });
    }
    let dim = args.dim.unwrap_or(4);
    match args.kind.as_deref() {
        Some("lower_triangular") | None => Ok(SplittingSpec::lower_triangular(dim)),
        Some("qr_skew") => Ok(SplittingSpec::qr_skew(dim)),
        Some(other) => {
            eprintln!("error: unknown built-in kind {other:?} (use --spec for custom maps)");
            Err(2u8)
        }
    }
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

fn cmd_solve(args: SolveArgs) -> u8 {
    let mut problem = match load_problem(&args) {
        Ok(p) => p,
        Err(code) => return code,
    };
    if let Some(m) = &args.method {
        problem.method = match FlowMethod::parse(m) {
            Ok(m) => m,
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        };
    }
    if let Some(h) = args.rk4_step {
        problem.tolerances.rk4_step = h;
    }
    if let Some(n) = args.order {
        problem.tolerances.magnus_order = n;
    }
    if let Some(t) = args.chi_tol {
        problem.tolerances.chi_tol = t;
    }
    if let Some(c) = args.substep_cap {
        problem.tolerances.substep_norm_cap = c;
    }
    // splittings loaded from files arrive uncertified
    if !problem.spec.is_validated() && problem.method != FlowMethod::Rk4 {
        match problem.spec.validate_random(
            postlie::splitting::DEFAULT_SAMPLE_COUNT,
            args.seed,
            postlie::splitting::DEFAULT_VALIDATION_TOL,
        ) {
            Ok(r) if r.validated => {}
            Ok(r) => {
                eprintln!(
                    "error: splitting failed certification (max residual {})",
                    jsonio::fmt_f64(r.max_residual())
                );
                return 2;
            }
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        }
    }
    let traj = match solve(&problem) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return if is_input_error(&e) { 2 } else { 3 };
        }
    };
    let max_drift = traj.max_drift();
    let max_defect = traj.max_defect();
    println!(
        "method {} over t in [{}, {}] ({} samples, {} sub-steps)",
        problem.method.name(),
        problem.t_grid.first().unwrap(),
        problem.t_grid.last().unwrap(),
        traj.samples.len(),
        traj.substeps
    );
    println!("  max eigenvalue drift {}", jsonio::fmt_f64(max_drift));
    println!("  max Lax defect       {}", jsonio::fmt_f64(max_defect));
    let fmt = args.format.as_str();
    if fmt != "json" && fmt != "csv" && fmt != "both" {
        eprintln!("error: --format must be json, csv or both");
        return 2;
    }
    if fmt == "csv" || fmt == "both" {
        let path = args.out.with_extension("csv");
        if let Err(e) = fs::write(&path, trajectory_to_csv(&traj)) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return 2;
        }
        println!("  wrote {}", path.display());
    }
    if fmt == "json" || fmt == "both" {
        let path = args.out.with_extension("json");
        if let Err(e) = fs::write(&path, trajectory_json_string(&traj)) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return 2;
        }
        println!("  wrote {}", path.display());
    }
    let within = max_drift <= args.drift_bound && max_defect <= args.defect_bound;
    println!(
        "  bounds: drift <= {} defect <= {} -> {}",
        jsonio::fmt_f64(args.drift_bound),
        jsonio::fmt_f64(args.defect_bound),
        if within { "OK" } else { "EXCEEDED" }
    );
    u8::from(!within)
}

fn load_problem(args: &SolveArgs) -> Result<FlowProblem, u8> {
    if let Some(name) = &args.preset {
        let preset = FlowPreset::parse(name).map_err(|e| {
            eprintln!("error: {e}");
            2u8
        })?;
        return Ok(preset_problem(preset));
    }
    let Some(path) = &args.problem else {
        eprintln!("error: provide --preset or --problem");
        return Err(2);
    };
    let doc = read_json(path)?;
    FlowProblem::from_json(&doc).map_err(|e| {
        eprintln!("error: {e}");
        2u8
    })
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn cmd_verify(args: VerifyArgs) -> u8 {
    let suites: Vec<SuiteId> = if args.suite == "all" {
        SuiteId::all().to_vec()
    } else {
        match SuiteId::parse(&args.suite) {
            Ok(s) => vec![s],
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        }
    };
    let opts = VerifyOptions {
        seed: args.seed,
        dim: args.dim,
        degree: args.degree,
        order: args.order,
        algebra: args.algebra.clone(),
        tol_override: args.tol,
    };
    let mut suite_docs = Vec::new();
    let mut all_passed = true;
    for id in suites {
        let report = match run_suite(id, &opts) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("error: {e}");
                return if is_input_error(&e) { 2 } else { 3 };
            }
        };
        for c in &report.checks {
            println!(
                "{} {}.{} residual={} tol={}{}",
                if c.passed { "PASS" } else { "FAIL" },
                report.suite,
                c.name,
                jsonio::fmt_f64(c.residual),
                jsonio::fmt_f64(c.tol),
                c.note
                    .as_ref()
                    .map(|n| format!(" ({n})"))
                    .unwrap_or_default()
            );
        }
        all_passed &= report.passed();
        suite_docs.push(report.to_json());
    }
    println!(
        "verify {}: {} (seed {})",
        args.suite,
        if all_passed { "ALL PASS" } else { "FAILURES" },
        args.seed
    );
    if let Some(out) = &args.out {
        let doc = json!({
            "command": "verify",
            "suite": args.suite,
            "seed": args.seed,
            "degree": args.degree,
            "order": args.order,
            "dim": args.dim,
            "algebra": args.algebra,
            "passed": all_passed,
            "suites": suite_docs,
        });
        if let Err(code) = write_report(out, &doc) {
            return code;
        }
    }
    u8::from(!all_passed)
}
