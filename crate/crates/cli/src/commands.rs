use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hproj::executor::StageExecutor;
use hproj::params::{AlphaSchedule, RSchedule, SolverParams, Variant};
use hproj::solver::{solve_with, SolveError, Status, FEJER_TOL};
use hproj::verify::{run_suite, Suite};

use crate::schema;
use crate::trace;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_MAX_ITER: u8 = 2;
pub const EXIT_BREAKDOWN: u8 = 3;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_DATA: u8 = 65;
pub const EXIT_IO: u8 = 74;

#[derive(Debug, Parser)]
#[command(name = "hproj", version, about = "Hybrid projection solver for common solutions of equilibrium, variational and fixed-point problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a problem file.
    Solve(SolveArgs),
    /// Run the built-in property suites.
    Verify(VerifyArgs),
    /// Summarize a trace written by `solve --trace`.
    TraceSummary(TraceSummaryArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Main,
    Alg34,
    Minnorm,
    Fixedpoint,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Main => Variant::MainHybrid,
            VariantArg::Alg34 => Variant::SimplifiedAlg34,
            VariantArg::Minnorm => Variant::MinNormCor32,
            VariantArg::Fixedpoint => Variant::FixedPointOnlyCor36,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, value_enum, default_value = "main")]
    pub variant: VariantArg,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Constant alpha; overrides the problem file's schedule.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Constant r; overrides the problem file's schedule.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long = "max-iter", default_value_t = 100_000)]
    pub max_iter: usize,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, env = "SOLVER_THREADS")]
    pub threads: Option<usize>,
    /// Accepted for symmetry with `verify`; solving draws no random numbers.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Record per-stage wall-clock times in the trace.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Projections,
    Resolvents,
    Projector,
    Solver,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Projections => Suite::Projections,
            SuiteArg::Resolvents => Suite::Resolvents,
            SuiteArg::Projector => Suite::Projector,
            SuiteArg::Solver => Suite::Solver,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: SuiteArg,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TraceSummaryArgs {
    #[arg(long)]
    pub trace: PathBuf,
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    match cli.command {
        Command::Solve(a) => cmd_solve(&a, out, err),
        Command::Verify(a) => cmd_verify(&a, out, err),
        Command::TraceSummary(a) => cmd_trace_summary(&a, out, err),
    }
}

macro_rules! fail {
    ($err:expr, $code:expr, $($fmt:tt)*) => {{
        let _ = writeln!($err, $($fmt)*);
        return $code;
    }};
}

pub fn cmd_solve(args: &SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let text = match fs::read_to_string(&args.problem) {
        Ok(t) => t,
        Err(e) => fail!(err, EXIT_USAGE, "error: cannot read {}: {e}", args.problem.display()),
    };
    let file = match schema::parse(&text) {
        Ok(f) => f,
        Err(e) => fail!(err, EXIT_USAGE, "error: invalid problem file: {e}"),
    };
    let prob = match file.to_problem() {
        Ok(p) => p,
        Err(e) => fail!(err, EXIT_USAGE, "error: invalid problem file: {e}"),
    };
    let schedules = file.schedules.clone().unwrap_or(schema::Schedules { alpha: None, r: None });
    let mut params = SolverParams::with_variant(args.variant.into());
    if let Some(a) = schedules.alpha {
        params.alpha = a.into();
    }
    if let Some(r) = schedules.r {
        params.r = r.into();
    }
    if let Some(a) = args.alpha {
        params.alpha = AlphaSchedule::Constant(a);
    }
    if let Some(r) = args.r {
        params.r = RSchedule::Constant(r);
    }
    params.lambda = args.lambda;
    params.mu = args.mu;
    params.stop_tol = args.tol;
    params.max_iter = args.max_iter;
    params.record_timings = args.timings;

    let exec = match StageExecutor::new(args.threads) {
        Ok(e) => e,
        Err(e) => fail!(err, EXIT_USAGE, "error: {e}"),
    };
    let res = match solve_with(&prob, &params, &exec) {
        Ok(r) => r,
        Err(SolveError::Params(e)) => fail!(err, EXIT_USAGE, "error: {e}"),
        Err(e) => fail!(err, EXIT_USAGE, "error: {e}"),
    };
    if let Some(path) = &args.trace {
        let written = fs::File::create(path).and_then(|f| trace::write(&mut BufWriter::new(f), &res));
        if let Err(e) = written {
            fail!(err, EXIT_IO, "error: cannot write trace {}: {e}", path.display());
        }
    }
    let _ = writeln!(out, "status: {}", res.status.name());
    let _ = writeln!(out, "iterations: {}", res.iterations);
    let _ = writeln!(out, "point: {}", serde_json::to_string(res.point.as_slice()).expect("finite floats"));
    if let Some(b) = &res.breakdown {
        let _ = writeln!(err, "breakdown at n = {}: {}", b.n, b.reason);
    }
    if !res.monitors.is_clean() {
        let _ = writeln!(err, "warning: monitor violations: {:?}", res.monitors);
    }
    match res.status {
        Status::Converged | Status::StoppedAtFixedPoint => EXIT_OK,
        Status::MaxIterations => EXIT_MAX_ITER,
        Status::NumericalBreakdown => EXIT_BREAKDOWN,
    }
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let checks = match run_suite(args.suite.into(), args.samples, args.seed) {
        Ok(c) => c,
        Err(e @ hproj::verify::VerifyError::NoSamples) => fail!(err, EXIT_USAGE, "error: {e}"),
        Err(e) => fail!(err, EXIT_CHECK_FAILED, "error: {e}"),
    };
    let mut failed = 0;
    for c in &checks {
        if !c.passed() {
            failed += 1;
        }
        let _ = writeln!(out, "{c}");
    }
    let _ = writeln!(out, "{} properties, {failed} failed", checks.len());
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

pub fn cmd_trace_summary(args: &TraceSummaryArgs, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let text = match fs::read_to_string(&args.trace) {
        Ok(t) => t,
        Err(e) => fail!(err, EXIT_USAGE, "error: cannot read {}: {e}", args.trace.display()),
    };
    let parsed = match trace::parse(&text) {
        Ok(p) => p,
        Err(e) => fail!(err, EXIT_DATA, "error: malformed trace: {e}"),
    };
    let s = &parsed.summary;
    let _ = writeln!(out, "status: {}", s.status.name());
    let _ = writeln!(out, "iterations: {}", s.iterations);
    let _ = writeln!(
        out,
        "residuals: map {:e}, resolvent {:e}, operator {:e}, set {:e}",
        s.residuals.map, s.residuals.resolvent, s.residuals.operator, s.residuals.set_violation
    );
    match trace::fejer_break(&parsed.records, FEJER_TOL) {
        None => {
            let _ = writeln!(out, "fejer: monotone");
        }
        Some(n) => {
            let _ = writeln!(out, "fejer: violated at n = {n}");
        }
    }
    let _ = writeln!(out, "n,step,y_residual,anchor_distance");
    for r in &parsed.records {
        let _ = writeln!(out, "{},{:e},{:e},{:e}", r.n, r.step, r.y_residual, r.fejer);
    }
    EXIT_OK
}
