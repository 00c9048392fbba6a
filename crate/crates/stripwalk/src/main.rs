use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use stripwalk_core::asymptotics::{build_v1, drift, noncentrality, asym_reject_prob, slln_limits, LimitEvent, LimitExperiment};
use stripwalk_core::stattest::chi2_1df_quantile;
use stripwalk_core::{derive_moments, scenarios, validate_scenario, Engine};
use stripwalk::batch::{engine_name, par_limit_estimate, run_batch, thread_pool, BatchConfig, Mode};
use stripwalk::scenario_file::{self, Format};
use stripwalk::sweep::{run_sweep, write_sweep_csv, SweepKind, SweepSpec};
use stripwalk::{records, report, AppError, AppResult};

/// Simulate and analyse A/B tests whose arms sell from one finite stock.
#[derive(Parser)]
#[command(name = "stripwalk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Threads {
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, env = "STRIPWALK_THREADS", default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file; violations go to stderr.
    Validate {
        /// Scenario file (TOML or JSON) or built-in id.
        scenario: String,
    },
    /// Run replicates and write per-replicate CSV and a summary.
    Simulate(SimulateArgs),
    /// Limit theory for a scenario as JSON.
    Theory(TheoryArgs),
    /// Tabulate a quantity over a grid of d_inf values.
    Sweep(SweepArgs),
    /// Print a built-in scenario in the scenario file format.
    Export {
        id: String,
        #[arg(long, value_enum, default_value_t = FormatArg::Toml)]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SimulateArgs {
    scenario: String,
    /// Visitors per run (per arm with --mode separate).
    #[arg(long, default_value_t = 1_000_000)]
    n: u64,
    /// Inventory; defaults to the scenario's schedule at n.
    #[arg(long)]
    c_n: Option<u64>,
    #[arg(long, default_value_t = 1)]
    replicates: u64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults to separate for `ranking-separate`, shared otherwise.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum, default_value_t = EngineArg::Fast)]
    engine: EngineArg,
    /// Per-replicate CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary JSON; printed to stdout when absent.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[command(flatten)]
    threads: Threads,
}

#[derive(Args)]
struct TheoryArgs {
    scenario: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Defaults to the schedule's d when rho = 1/2.
    #[arg(long)]
    d_inf: Option<f64>,
    /// Also estimate the limiting power with this many Gaussian draws.
    #[arg(long, default_value_t = 0)]
    power_iters: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    threads: Threads,
}

#[derive(Args)]
struct SweepArgs {
    scenario: String,
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long, default_value_t = 0.0)]
    from: f64,
    #[arg(long, default_value_t = 3.0)]
    to: f64,
    #[arg(long, default_value_t = 50)]
    steps: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Gaussian draws per point (power-mc).
    #[arg(long, default_value_t = 2_000_000)]
    iters: u64,
    /// Replicates per point (sim-reject).
    #[arg(long, default_value_t = 200)]
    replicates: u64,
    /// Visitors per run (sim-reject).
    #[arg(long, default_value_t = 1_000_000)]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = EngineArg::Fast)]
    engine: EngineArg,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    threads: Threads,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Shared,
    Separate,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Exact,
    Fast,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    RejectProb,
    PowerMc,
    SimReject,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Toml,
    Json,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Engine {
        match e {
            EngineArg::Exact => Engine::Exact,
            EngineArg::Fast => Engine::Fast,
        }
    }
}

fn create(path: &Path) -> AppResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| AppError::io(path, e))
}

fn write_text(path: Option<&Path>, text: &str) -> AppResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| AppError::io(p, e)),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| AppError::io("<stdout>", e)),
    }
}

fn validate(arg: &str) -> AppResult<ExitCode> {
    let r = scenario_file::resolve(arg)?;
    for w in r.scenario.warnings() {
        eprintln!("warning: {w}");
    }
    let violations = validate_scenario(&r.scenario);
    if violations.is_empty() {
        println!("{}: valid", r.id);
        return Ok(ExitCode::SUCCESS);
    }
    for v in &violations {
        eprintln!("{v}");
    }
    Ok(ExitCode::from(1))
}

fn simulate(a: SimulateArgs) -> AppResult<()> {
    if let (Some(o), Some(s)) = (&a.out, &a.summary) {
        if o == s {
            return Err(AppError::Usage("--out and --summary name the same file".into()));
        }
    }
    let r = scenario_file::resolve(&a.scenario)?;
    r.scenario.validate()?;
    let separate_default = r.builtin.as_ref().is_some_and(|b| b.separate);
    let mode = match a.mode {
        Some(ModeArg::Shared) => Mode::Shared,
        Some(ModeArg::Separate) => Mode::Separate,
        None if separate_default => Mode::Separate,
        None => Mode::Shared,
    };
    let engine = Engine::from(a.engine);
    let cfg = BatchConfig {
        n: a.n,
        c_n: a.c_n.unwrap_or_else(|| r.scenario.inventory(a.n)),
        replicates: a.replicates,
        alpha: a.alpha,
        seed: a.seed,
        mode,
        engine,
    };
    let pool = thread_pool(a.threads.threads)?;
    let batch = run_batch(&r.scenario, &cfg, &pool)?;
    let rep = report::build(&r.id, &r.scenario, mode, engine_name(engine), a.n, &batch.tested(), a.alpha)?;
    if let Some(path) = &a.out {
        records::write_csv(create(path)?, &records::rows(&batch, rep.critical))?;
    }
    for w in &rep.warnings {
        eprintln!("warning: {w}");
    }
    write_text(a.summary.as_deref(), &report::to_json(&rep))
}

fn theory(a: TheoryArgs) -> AppResult<()> {
    let r = scenario_file::resolve(&a.scenario)?;
    let m = derive_moments(&r.scenario)?;
    let d_inf = match a.d_inf.or_else(|| r.scenario.schedule.d_inf()) {
        Some(d) if d >= 0.0 && d.is_finite() => d,
        Some(d) => return Err(stripwalk_core::Error::Domain(format!("d_inf = {d} must be finite and >= 0")).into()),
        None => return Err(AppError::Usage("the schedule has rho > 1/2; pass --d-inf".into())),
    };
    chi2_1df_quantile(1.0 - a.alpha)?;
    let delta = noncentrality(&m, d_inf)?;
    let c_inf = r.scenario.schedule.c_inf();
    let slln = slln_limits(&m, c_inf)?;
    let d = drift(&m, d_inf)?;
    let mut out = json!({
        "scenario_id": r.id,
        "alpha": a.alpha,
        "d_inf": d_inf,
        "delta": delta,
        "asym_reject_prob": asym_reject_prob(delta, a.alpha)?,
        "slln": {
            "c_inf": c_inf,
            "L0_rate": slln.l0_rate,
            "L1_rate": slln.l1_rate,
            "C0": slln.conv0,
            "C1": slln.conv1,
        },
        "d2": d.d2,
        "d3": d.d3,
        "V1": build_v1(&m),
        "moments": m,
    });
    if a.power_iters > 0 {
        let x = LimitExperiment::new(&m, d_inf, a.alpha)?;
        let pool = thread_pool(a.threads.threads)?;
        let e = par_limit_estimate(&x, LimitEvent::RejectArm0Better, a.seed, a.power_iters, &pool)?;
        out["power"] = json!({ "estimate": e.estimate, "std_error": e.std_error, "iters": e.iters });
    }
    let mut text = serde_json::to_string_pretty(&out)?;
    text.push('\n');
    write_text(None, &text)
}

fn sweep(a: SweepArgs) -> AppResult<()> {
    let r = scenario_file::resolve(&a.scenario)?;
    let spec = SweepSpec {
        from: a.from,
        to: a.to,
        steps: a.steps,
        alpha: a.alpha,
        iters: a.iters,
        replicates: a.replicates,
        n: a.n,
        seed: a.seed,
        engine: a.engine.into(),
    };
    spec.grid()?;
    let kind = match a.kind {
        KindArg::RejectProb => SweepKind::RejectProb,
        KindArg::PowerMc => SweepKind::PowerMc,
        KindArg::SimReject => SweepKind::SimReject,
    };
    let pool = thread_pool(a.threads.threads)?;
    let points = run_sweep(&r.scenario, kind, &spec, &pool)?;
    match &a.out {
        Some(p) => write_sweep_csv(create(p)?, &points),
        None => write_sweep_csv(io::stdout().lock(), &points),
    }
}

fn export(id: &str, format: FormatArg, out: Option<&Path>) -> AppResult<()> {
    let s = scenarios::get(id)?.scenario;
    let format = match format {
        FormatArg::Toml => Format::Toml,
        FormatArg::Json => Format::Json,
    };
    write_text(out, &scenario_file::render(&s, format))
}

fn run(cli: Cli) -> AppResult<ExitCode> {
    match cli.command {
        Command::Validate { scenario } => validate(&scenario),
        Command::Simulate(a) => simulate(a).map(|()| ExitCode::SUCCESS),
        Command::Theory(a) => theory(a).map(|()| ExitCode::SUCCESS),
        Command::Sweep(a) => sweep(a).map(|()| ExitCode::SUCCESS),
        Command::Export { id, format, out } => export(&id, format, out.as_deref()).map(|()| ExitCode::SUCCESS),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let AppError::Model(stripwalk_core::Error::InvalidScenario(vs)) = &e {
                for v in vs {
                    eprintln!("  {v}");
                }
            }
            ExitCode::from(e.exit_code())
        }
    }
}
