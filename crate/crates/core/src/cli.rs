//! Command-line front end. The binary only forwards to [`run`].

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use crate::characteristic::{self, CharacteristicQuery};
use crate::config::{self, RunConfig};
use crate::diagnostics::{self, Evidence, VerdictKind, VerdictObserver};
use crate::error::{Error, Result};
use crate::fbsolver::{self, NumericsConfig, Observer, Trajectory};
use crate::model::{InitialHistory, ProblemSpec};
use crate::semiwave;

/// Exit status for bad input on the command line or in the config file.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for validation and numerical failures.
pub const EXIT_DOMAIN: i32 = 1;

/// Environment variable that caps the worker pool.
pub const THREADS_ENV: &str = "KPP_STEFAN_THREADS";

#[derive(Debug, Parser)]
#[command(name = "kpp-stefan", version, about = "Delayed Fisher-KPP free-boundary solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Validate and print the resolved plan without computing
    #[arg(long)]
    dry_run: bool,
    /// Override a scalar config entry, e.g. --set problem.tau=0.5
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the free-boundary problem and summarise it
    Simulate(Common),
    /// Solve one semi-wave profile (at c*, or at semiwave.c)
    Semiwave(Common),
    /// Spreading speed along a tau or mu sweep
    Speeds(Common),
    /// c0(tau) and the complex root of the characteristic function
    Characteristic(Common),
    /// Run until a spreading or vanishing verdict (or t_end)
    Classify(Common),
    /// Check the ordering of two runs with ordered initial data
    Compare(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Simulate(c)
            | Command::Semiwave(c)
            | Command::Speeds(c)
            | Command::Characteristic(c)
            | Command::Classify(c)
            | Command::Compare(c) => c,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Semiwave(_) => "semiwave",
            Command::Speeds(_) => "speeds",
            Command::Characteristic(_) => "characteristic",
            Command::Classify(_) => "classify",
            Command::Compare(_) => "compare",
        }
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    configure_threads();
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => EXIT_USAGE,
                _ => EXIT_DOMAIN,
            }
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            // Fails only if the pool already exists, which is harmless here.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

struct Ctx {
    cfg: RunConfig,
    base: PathBuf,
    out: PathBuf,
    dry_run: bool,
}

impl Ctx {
    fn output(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out)?;
        Ok(self.out.join(name))
    }

    fn history(&self, spec: &ProblemSpec) -> Result<InitialHistory> {
        self.cfg.initial.history(spec, &self.base)
    }
}

fn execute(cmd: &Command) -> Result<()> {
    let common = cmd.common();
    if !common.config.is_file() {
        return Err(Error::Config(format!("config file {} not found", common.config.display())));
    }
    let cfg = config::load(&common.config, &common.set)?;
    let base = common.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let out = common.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let ctx = Ctx { cfg, base, out, dry_run: common.dry_run };
    let spec = ctx.cfg.problem.spec()?;
    if ctx.dry_run {
        println!("command = \"{}\"", cmd.name());
        println!("output = \"{}\"", ctx.out.display());
    }
    match cmd {
        Command::Simulate(_) => simulate(&ctx, &spec),
        Command::Semiwave(_) => semiwave_cmd(&ctx, &spec),
        Command::Speeds(_) => speeds(&ctx, &spec),
        Command::Characteristic(_) => characteristic_cmd(&ctx, &spec),
        Command::Classify(_) => classify(&ctx, &spec),
        Command::Compare(_) => compare(&ctx, &spec),
    }
}

fn print_plan<T: Serialize>(label: &str, value: &T) -> Result<()> {
    let text = toml::to_string(value).map_err(|e| Error::Io(e.to_string()))?;
    println!("\n[{label}]\n{}", text.trim_end());
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn echo(path: &Path) {
    println!("{}", path.display());
}

fn prepare_run(ctx: &Ctx, spec: &ProblemSpec) -> Result<(InitialHistory, NumericsConfig)> {
    let history = ctx.history(spec)?;
    let (g0, h0) = history.initial_domain();
    let num = ctx.cfg.numerics.resolve(spec, h0 - g0)?;
    if ctx.dry_run {
        print_plan("resolved.numerics", &num)?;
        print_plan("config", &ctx.cfg)?;
    }
    Ok((history, num))
}

#[derive(Serialize)]
struct Summary {
    verdict: VerdictKind,
    t_end: f64,
    final_g: f64,
    final_h: f64,
    measured_speed: Option<f64>,
    notes: Vec<String>,
}

fn write_trajectory(ctx: &Ctx, traj: &Trajectory, name: &str) -> Result<()> {
    let path = ctx.output(name)?;
    traj.write_csv(&path)?;
    echo(&path);
    Ok(())
}

fn simulate(ctx: &Ctx, spec: &ProblemSpec) -> Result<()> {
    let (history, num) = prepare_run(ctx, spec)?;
    if ctx.dry_run {
        return Ok(());
    }
    let traj = fbsolver::simulate(spec, &history, &num)?;
    write_trajectory(ctx, &traj, "trajectory.csv")?;
    let snaps = ctx.output("snapshots.csv")?;
    traj.write_snapshots_csv(&snaps)?;
    echo(&snaps);

    let verdict = diagnostics::classify(&traj.rows, spec, &ctx.cfg.classify.thresholds());
    let mut notes = Vec::new();
    let measured_speed = match diagnostics::front_speed(&traj.rows, 0.5) {
        Ok(s) => Some(s),
        Err(e) => {
            notes.push(format!("front speed not measured: {e}"));
            None
        }
    };
    if verdict.kind == VerdictKind::Spreading && measured_speed.is_some() {
        let speed = semiwave::cstar(spec, None)?;
        notes.push(format!("cstar = {}", speed.cstar));
        match diagnostics::drift_offsets(&traj.rows, spec, speed.cstar, 0.5) {
            Ok(drift) => {
                notes.push(format!("H1 = {}, G1 = {}", drift.h1, drift.g1));
                let series = diagnostics::profile_error_series(&traj.snapshots, &speed.profile, drift.h1);
                let path = ctx.output("profile_error.csv")?;
                diagnostics::write_profile_error_csv(&path, &series)?;
                echo(&path);
            }
            Err(e) => notes.push(format!("drift offsets not computed: {e}")),
        }
    }
    let last = traj.last().expect("trajectory has an initial row");
    let summary = Summary {
        verdict: verdict.kind,
        t_end: last.t,
        final_g: last.g,
        final_h: last.h,
        measured_speed,
        notes,
    };
    let path = ctx.output("summary.json")?;
    write_json(&path, &summary)?;
    echo(&path);
    Ok(())
}

#[derive(Serialize)]
struct SemiwaveReport {
    c: f64,
    tau: f64,
    mu: f64,
    is_cstar: bool,
    c0: f64,
    qprime0: f64,
    eta: f64,
    residual: f64,
    steps: usize,
    length: f64,
    dz: f64,
}

fn semiwave_cmd(ctx: &Ctx, spec: &ProblemSpec) -> Result<()> {
    let r = &spec.reaction;
    let c0 = characteristic::c0(spec.tau, r.fprime0, r.d)?;
    let sw = &ctx.cfg.semiwave;
    let num = sw.numerics(spec, sw.c.unwrap_or(c0));
    if ctx.dry_run {
        print_plan("resolved.semiwave", &num)?;
        return print_plan("config", &ctx.cfg);
    }
    let profile = match sw.c {
        Some(c) => semiwave::solve_profile(spec, c, &num)?,
        None => semiwave::cstar(spec, Some(&num))?.profile,
    };
    let path = ctx.output("profile.csv")?;
    profile.write_csv(&path)?;
    echo(&path);
    let report = SemiwaveReport {
        c: profile.c,
        tau: spec.tau,
        mu: spec.mu,
        is_cstar: sw.c.is_none(),
        c0,
        qprime0: profile.qprime0,
        eta: profile.qprime0 - profile.c / spec.mu,
        residual: profile.residual,
        steps: profile.steps,
        length: profile.length,
        dz: profile.dz,
    };
    let path = ctx.output("semiwave.json")?;
    write_json(&path, &report)?;
    echo(&path);
    Ok(())
}

#[derive(Serialize)]
struct SpeedFailure {
    value: f64,
    error: String,
}

#[derive(Serialize)]
struct SpeedsReport {
    axis: semiwave::SpeedAxis,
    monotone: Option<bool>,
    failures: Vec<SpeedFailure>,
}

fn speeds(ctx: &Ctx, spec: &ProblemSpec) -> Result<()> {
    let sp = &ctx.cfg.speeds;
    if sp.values.is_empty() {
        return Err(Error::Config("speeds.values is empty".into()));
    }
    if ctx.dry_run {
        return print_plan("config", &ctx.cfg);
    }
    let curve = semiwave::speed_curve(spec, sp.axis, &sp.values)?;
    let path = ctx.output("speeds.csv")?;
    curve.write_csv(spec, &path)?;
    echo(&path);
    let failures: Vec<SpeedFailure> = curve
        .points
        .iter()
        .filter_map(|p| p.result.as_ref().err().map(|e| SpeedFailure { value: p.value, error: e.to_string() }))
        .collect();
    for f in &failures {
        eprintln!("warning: point {} failed: {}", f.value, f.error);
    }
    let path = ctx.output("speeds.json")?;
    write_json(&path, &SpeedsReport { axis: sp.axis, monotone: curve.monotone, failures })?;
    echo(&path);
    Ok(())
}

/// `(c0, c, alpha, beta, residual)` at one delay.
pub fn characteristic_row(spec: &ProblemSpec, tau: f64, c: Option<f64>, c_fraction: f64, n_steps: Option<usize>) -> Result<[f64; 5]> {
    let r = &spec.reaction;
    let c0 = characteristic::c0(tau, r.fprime0, r.d)?;
    let c = c.unwrap_or(c_fraction * c0);
    let root = if tau == 0.0 {
        let disc = 4.0 * r.linear_growth() - c * c;
        if !(c > 0.0 && disc > 0.0) {
            return Err(Error::InvalidParameter(format!("no complex root at tau = 0 for c = {c}")));
        }
        let lambda = Complex64::new(0.5 * c, 0.5 * disc.sqrt());
        let q = CharacteristicQuery::new(c, 0.0, r.fprime0, r.d)?;
        characteristic::ComplexRoot {
            alpha: lambda.re,
            beta: lambda.im,
            residual: characteristic::delta(&q, lambda).norm(),
        }
    } else {
        let steps = n_steps.unwrap_or_else(|| characteristic::default_continuation_steps(tau));
        characteristic::complex_root_in_omega(c, tau, r.fprime0, r.d, steps)?
    };
    Ok([c0, c, root.alpha, root.beta, root.residual])
}

fn characteristic_cmd(ctx: &Ctx, spec: &ProblemSpec) -> Result<()> {
    let ch = &ctx.cfg.characteristic;
    if ch.taus.is_empty() {
        return Err(Error::Config("characteristic.taus is empty".into()));
    }
    if ctx.dry_run {
        return print_plan("config", &ctx.cfg);
    }
    let path = ctx.output("characteristic.csv")?;
    let mut wtr = csv::Writer::from_path(&path)?;
    wtr.write_record(["tau", "c0", "c", "alpha", "beta", "residual"])?;
    for &tau in &ch.taus {
        let [c0, c, a, b, res] = characteristic_row(spec, tau, ch.c, ch.c_fraction, ch.n_steps)?;
        wtr.write_record([tau, c0, c, a, b, res].map(|v| v.to_string()))?;
    }
    wtr.flush()?;
    echo(&path);
    Ok(())
}

#[derive(Serialize)]
struct VerdictDoc {
    verdict: VerdictKind,
    evidence: Evidence,
}

fn classify(ctx: &Ctx, spec: &ProblemSpec) -> Result<()> {
    let (history, num) = prepare_run(ctx, spec)?;
    if ctx.dry_run {
        return Ok(());
    }
    let mut state = fbsolver::init_state(spec, &history, &num)?;
    let mut watcher = VerdictObserver::new(spec, ctx.cfg.classify.thresholds());
    let mut observers: Vec<&mut dyn Observer> = Vec::new();
    if ctx.cfg.classify.stop_on_verdict {
        observers.push(&mut watcher);
    }
    let traj = fbsolver::run(&mut state, spec, &num, &mut observers)?;
    write_trajectory(ctx, &traj, "trajectory.csv")?;
    let verdict = diagnostics::classify(&traj.rows, spec, &ctx.cfg.classify.thresholds());
    let path = ctx.output("verdict.json")?;
    write_json(&path, &VerdictDoc { verdict: verdict.kind, evidence: verdict.evidence })?;
    echo(&path);
    println!("verdict: {}", verdict.kind);
    Ok(())
}

fn compare(ctx: &Ctx, spec: &ProblemSpec) -> Result<()> {
    let hist_a = ctx.history(spec)?;
    let hist_b = ctx.cfg.compare.initial_b.history(spec, &ctx.base)?;
    let (g0, h0) = hist_a.initial_domain();
    let mut num = ctx.cfg.numerics.resolve(spec, h0 - g0)?;
    // Both runs must step on identical time levels.
    num.adapt_dt = false;
    if ctx.dry_run {
        print_plan("resolved.numerics", &num)?;
        return print_plan("config", &ctx.cfg);
    }
    let a = fbsolver::simulate(spec, &hist_a, &num)?;
    let b = fbsolver::simulate(spec, &hist_b, &num)?;
    write_trajectory(ctx, &a, "trajectory_a.csv")?;
    write_trajectory(ctx, &b, "trajectory_b.csv")?;
    let report = diagnostics::compare_runs(&a, &b, ctx.cfg.compare.tol)?;
    let path = ctx.output("ordering.json")?;
    write_json(&path, &report)?;
    echo(&path);
    if report.holds() {
        println!("ordering holds");
        Ok(())
    } else {
        Err(Error::ConvergenceFailure(format!(
            "ordering violated {} times (worst at t = {})",
            report.violations, report.worst_t
        )))
    }
}
