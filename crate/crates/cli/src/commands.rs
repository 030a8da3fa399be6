//! Subcommands of the `mswave` binary.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mswave_core::diagnostics;
use mswave_core::dynamics::{self, Outcome};
use mswave_core::estimates::{probe_all, Ensemble, ProbeSuite};
use mswave_core::madelung::{hydro_fields, qmhd_energy_state, stress_identity_residual, TestFunction, WeakResidualAccumulator};
use mswave_core::spectral::Grid;
use mswave_core::state::SimState;
use mswave_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{RunConfig, OUT_DIR_ENV};
use crate::sinks::{self, CsvSink, SnapshotSink, DIAGNOSTICS_FILE};
use crate::verify::{verify_all, VerifyOptions};
use crate::{presets, snapshot, studies};

/// Command failure with its exit status.
#[derive(Debug)]
pub enum Failure {
    /// Invalid configuration or input; exit 2.
    Config(String),
    /// The blow-up monitor stopped the run; exit 3.
    BlowUp(String),
    /// CFL violation or non-finite values; exit 4.
    Numerical(String),
    /// Anything else; exit 1.
    Other(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::BlowUp(_) => 3,
            Failure::Numerical(_) => 4,
            Failure::Other(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::BlowUp(m) => write!(f, "blow-up: {m}"),
            Failure::Numerical(m) => write!(f, "numerical abort: {m}"),
            Failure::Other(m) => write!(f, "{m}"),
        }
    }
}

fn config_failure(e: Error) -> Failure {
    match e {
        Error::Config(m) => Failure::Config(m),
        other => Failure::Config(other.to_string()),
    }
}

fn other(e: impl fmt::Display) -> Failure {
    Failure::Other(e.to_string())
}

pub type CmdResult = std::result::Result<(), Failure>;

#[derive(Parser, Debug)]
#[command(name = "mswave", version, about = "Spectral solver for the Maxwell-Schrodinger system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integrate from the configured initial data.
    Run(RunArgs),
    /// Continue a run from one of its snapshots.
    Resume(ResumeArgs),
    /// Hydrodynamic observables and weak-form residuals of a snapshot series.
    ExtractQmhd(ExtractArgs),
    /// Check the algebraic and exact-evolution identities.
    VerifyIdentities(VerifyArgs),
    /// Estimate the constants of the functional inequalities.
    ProbeEstimates(ProbeArgs),
    /// Refinement tables in dt or epsilon.
    ConvergenceStudy(StudyArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArgs {
    /// TOML configuration file.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set integrator.dt=5e-4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Args, Debug, Clone)]
pub struct ResumeArgs {
    /// Snapshot to continue from.
    pub snapshot: PathBuf,
    /// Defaults to `config.toml` next to the snapshot.
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Args, Debug, Clone)]
pub struct ExtractArgs {
    /// Directory holding `snap_*.bin` files.
    pub dir: PathBuf,
    /// Output directory (defaults to the snapshot directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of random test functions.
    #[arg(long, default_value_t = 5)]
    pub tests: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Largest mode number in the test functions.
    #[arg(long, default_value_t = 2)]
    pub max_mode: i64,
    /// Support of the temporal bump (defaults to the covered time span).
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Largest allowed time between consecutive snapshots.
    #[arg(long)]
    pub max_gap: Option<f64>,
    /// Relative density below which points count as vacuum.
    #[arg(long, default_value_t = mswave_core::madelung::DEFAULT_POLAR_TOL)]
    pub polar_tol: f64,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub states: usize,
    #[arg(long, default_value_t = 10)]
    pub densities: usize,
    #[arg(long, default_value_t = 20)]
    pub gauges: usize,
    /// Also write the results as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ProbeArgs {
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    #[arg(long = "L", default_value_t = 16.0)]
    pub len: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub max_mode: i64,
    #[arg(long, default_value_t = 1.5)]
    pub sigma: f64,
    /// Output directory (defaults to `$MSWAVE_OUT_DIR`, then `mswave-out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum StudyKind {
    Dt,
    Epsilon,
}

#[derive(Args, Debug, Clone)]
pub struct StudyArgs {
    #[arg(long, value_enum, default_value_t = StudyKind::Dt)]
    pub kind: StudyKind,
    /// Comma-separated time steps or epsilons.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<f64>,
    /// Reference time step (dt study); defaults to the smallest value / 8.
    #[arg(long)]
    pub reference_dt: Option<f64>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

pub fn dispatch(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Run(a) => run(&a),
        Command::Resume(a) => resume(&a),
        Command::ExtractQmhd(a) => extract_qmhd(&a),
        Command::VerifyIdentities(a) => verify_identities(&a),
        Command::ProbeEstimates(a) => probe_estimates(&a),
        Command::ConvergenceStudy(a) => convergence_study(&a),
    }
}

fn load_config(args: &ConfigArgs) -> std::result::Result<RunConfig, Failure> {
    let cfg = RunConfig::load(args.config.as_deref(), &args.set).map_err(config_failure)?;
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn check_grid(state: &SimState, grid: &Grid, what: &Path) -> CmdResult {
    let g = state.grid();
    if g.n() != grid.n() || g.len() != grid.len() {
        return Err(Failure::Config(format!(
            "{} has n = {}, L = {} but the configuration asks for n = {}, L = {}",
            what.display(),
            g.n(),
            g.len(),
            grid.n(),
            grid.len()
        )));
    }
    Ok(())
}

/// Initial state described by a validated configuration.
pub fn initial_state(cfg: &RunConfig) -> std::result::Result<SimState, Failure> {
    let grid = cfg.grid().map_err(config_failure)?;
    let p = &cfg.physics;
    match &cfg.initial.snapshot {
        Some(path) => {
            let mut s = snapshot::read(path).map_err(config_failure)?;
            check_grid(&s, &grid, path)?;
            s.gamma = p.gamma;
            s.epsilon = p.epsilon;
            Ok(s)
        }
        None => presets::initial_state(&grid, &cfg.initial.u, &cfg.initial.a0, &cfg.initial.a1, p.gamma, p.epsilon)
            .map_err(config_failure),
    }
}

fn prepare_out_dir(cfg: &RunConfig) -> std::result::Result<PathBuf, Failure> {
    let dir = cfg.output.out_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| other(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn outcome_result(outcome: &Outcome, steps: usize, t: f64) -> CmdResult {
    match outcome {
        Outcome::Completed => {
            println!("completed {steps} steps, t = {t}");
            Ok(())
        }
        Outcome::BlowUp { t, field, norm, threshold } => {
            Err(Failure::BlowUp(format!("{field} = {norm:e} exceeds {threshold:e} at t = {t}")))
        }
        Outcome::CflAbort { t, dt, limit } => {
            Err(Failure::Numerical(format!("dt = {dt} exceeds the CFL limit {limit:e} at t = {t}")))
        }
        Outcome::NumericalAbort { t } => Err(Failure::Numerical(format!("non-finite values at t = {t}"))),
    }
}

pub fn run(args: &RunArgs) -> CmdResult {
    let cfg = load_config(&args.config)?;
    let initial = initial_state(&cfg)?;
    let dir = prepare_out_dir(&cfg)?;
    std::fs::write(dir.join("config.toml"), cfg.to_toml()).map_err(other)?;
    std::fs::write(dir.join("columns.txt"), sinks::column_map()).map_err(other)?;
    let mut csv = CsvSink::create(&dir.join(DIAGNOSTICS_FILE)).map_err(other)?;
    let mut snaps = SnapshotSink::new(&dir, 0);
    let tr = dynamics::run(&initial, &cfg.integrator(), &mut [&mut csv, &mut snaps]).map_err(other)?;
    csv.flush().map_err(other)?;
    outcome_result(&tr.outcome, tr.steps, tr.final_state.t)
}

pub fn resume(args: &ResumeArgs) -> CmdResult {
    let mut cargs = args.config.clone();
    if cargs.config.is_none() {
        let beside = args.snapshot.parent().unwrap_or(Path::new(".")).join("config.toml");
        if beside.exists() {
            cargs.config = Some(beside);
        }
    }
    let cfg = load_config(&cargs)?;
    let grid = cfg.grid().map_err(config_failure)?;
    let state = snapshot::read(&args.snapshot).map_err(config_failure)?;
    check_grid(&state, &grid, &args.snapshot)?;
    if state.gamma != cfg.physics.gamma || state.epsilon != cfg.physics.epsilon {
        return Err(Failure::Config(format!(
            "snapshot has gamma = {}, epsilon = {} but the configuration has gamma = {}, epsilon = {}",
            state.gamma, state.epsilon, cfg.physics.gamma, cfg.physics.epsilon
        )));
    }
    let dir = prepare_out_dir(&cfg)?;
    let offset = (state.t / cfg.integrator.dt).round() as usize;
    let mut csv = CsvSink::resume(&dir.join(DIAGNOSTICS_FILE), state.t).map_err(other)?;
    let mut snaps = SnapshotSink::new(&dir, offset);
    let tr = dynamics::run(&state, &cfg.integrator(), &mut [&mut csv, &mut snaps]).map_err(other)?;
    csv.flush().map_err(other)?;
    outcome_result(&tr.outcome, tr.steps, tr.final_state.t)
}

/// Columns of `qmhd.csv`.
pub const QMHD_COLUMNS: [&str; 9] =
    ["t", "mass", "momentum_x", "momentum_y", "momentum_z", "qmhd_energy", "energy", "stress_tensor", "stress_trace"];

pub fn extract_qmhd(args: &ExtractArgs) -> CmdResult {
    let files = sinks::list_snapshots(&args.dir).map_err(other)?;
    let (first, last) = match (files.first(), files.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Failure::Config(format!("no snapshots in {}", args.dir.display()))),
    };
    let s0 = snapshot::read(first).map_err(config_failure)?;
    let t_last = snapshot::read(last).map_err(config_failure)?.t;
    let horizon = args.horizon.unwrap_or(t_last - s0.t);
    if !(horizon > 0.0) {
        return Err(Failure::Config("the snapshots cover no time; pass --horizon".into()));
    }
    let grid = s0.grid().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let tests = (0..args.tests)
        .map(|_| TestFunction::random(&grid, &mut rng, args.max_mode, horizon))
        .collect::<mswave_core::Result<Vec<_>>>()
        .map_err(config_failure)?;
    let mut acc = WeakResidualAccumulator::new(tests, args.max_gap.unwrap_or(f64::INFINITY), args.polar_tol)
        .map_err(config_failure)?;

    let mut rows = Vec::new();
    for f in &files {
        let s = snapshot::read(f).map_err(other)?;
        check_grid(&s, &grid, f)?;
        let h = hydro_fields(&s.u, &s.a, args.polar_tol).map_err(other)?;
        let stress = stress_identity_residual(&s.u, &s.a, &h);
        let p = h.j.comps().each_ref().map(|c| c.integral().re);
        let qe = qmhd_energy_state(&s, args.polar_tol).map_err(other)?;
        rows.push(
            [s.t, diagnostics::mass(&s), p[0], p[1], p[2], qe, diagnostics::energy(&s), stress.tensor, stress.trace]
                .iter()
                .map(|x| format!("{x:e}"))
                .collect(),
        );
        acc.push(&s).map_err(other)?;
    }
    let out = args.out.clone().unwrap_or_else(|| args.dir.clone());
    std::fs::create_dir_all(&out).map_err(other)?;
    sinks::write_table(&out.join("qmhd.csv"), &QMHD_COLUMNS, &rows).map_err(other)?;
    let weak = acc.finish().map_err(other)?;
    let wrows: Vec<Vec<String>> = weak
        .continuity
        .iter()
        .zip(&weak.momentum)
        .enumerate()
        .map(|(k, (c, m))| vec![k.to_string(), format!("{c:e}"), format!("{m:e}")])
        .collect();
    sinks::write_table(&out.join("weak_residuals.csv"), &["test", "continuity", "momentum"], &wrows).map_err(other)?;
    println!("{} snapshots, horizon {horizon}", weak.samples);
    for r in &wrows {
        println!("test {}: continuity {}  momentum {}", r[0], r[1], r[2]);
    }
    Ok(())
}

pub fn verify_identities(args: &VerifyArgs) -> CmdResult {
    let opts = VerifyOptions {
        n: args.n,
        seed: args.seed,
        states: args.states,
        densities: args.densities,
        gauges: args.gauges,
        ..VerifyOptions::default()
    };
    let checks = verify_all(&opts).map_err(config_failure)?;
    let mut failed = 0;
    for c in &checks {
        let tag = if c.passed() { "ok  " } else { "FAIL" };
        println!("{tag} {:<24} {:>10.3e}  (limit {:.0e}, {} cases)", c.name, c.value, c.limit, c.cases);
        failed += usize::from(!c.passed());
    }
    if let Some(path) = &args.json {
        let text = serde_json::to_string_pretty(&checks).map_err(other)?;
        std::fs::write(path, text).map_err(other)?;
    }
    if failed > 0 {
        return Err(Failure::Other(format!("{failed} identity checks failed")));
    }
    Ok(())
}

fn default_out(arg: &Option<PathBuf>) -> PathBuf {
    arg.clone()
        .or_else(|| std::env::var(OUT_DIR_ENV).ok().filter(|s| !s.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("mswave-out"))
}

pub fn probe_estimates(args: &ProbeArgs) -> CmdResult {
    let grid = Grid::new(args.n, args.len).map_err(config_failure)?;
    if args.samples == 0 || !(args.sigma > 0.0) || args.max_mode < 0 {
        return Err(Failure::Config("samples, sigma and max-mode must be positive".into()));
    }
    let ens = Ensemble { seed: args.seed, samples: args.samples, max_mode: args.max_mode, sigma: args.sigma, len: args.len };
    let reports = probe_all(&ProbeSuite::default(), &ens, &grid).map_err(other)?;
    let out = default_out(&args.out);
    std::fs::create_dir_all(&out).map_err(other)?;
    let json = serde_json::json!({ "ensemble": ens, "n": args.n, "reports": reports });
    std::fs::write(out.join("probes.json"), serde_json::to_string_pretty(&json).map_err(other)?).map_err(other)?;
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| vec![r.id.clone(), r.samples.to_string(), r.skipped.to_string(), format!("{:e}", r.max_ratio)])
        .collect();
    sinks::write_table(&out.join("probes.csv"), &["id", "samples", "skipped", "max_ratio"], &rows).map_err(other)?;
    for r in &reports {
        println!("{:<22} max ratio {:.4}  ({} samples, {} skipped)", r.id, r.max_ratio, r.samples, r.skipped);
    }
    Ok(())
}

pub fn convergence_study(args: &StudyArgs) -> CmdResult {
    let cfg = load_config(&args.config)?;
    let initial = initial_state(&cfg)?;
    let base = cfg.integrator();
    let dir = prepare_out_dir(&cfg)?;
    match args.kind {
        StudyKind::Dt => {
            let dts = if args.values.is_empty() { vec![4e-3, 2e-3, 1e-3, 5e-4] } else { args.values.clone() };
            let smallest = dts.iter().copied().fold(f64::INFINITY, f64::min);
            if !(smallest > 0.0) {
                return Err(Failure::Config("time steps must be positive".into()));
            }
            let reference = args.reference_dt.unwrap_or(smallest / 8.0);
            let rows = studies::dt_study(&initial, &base, &dts, reference).map_err(other)?;
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| vec![format!("{:e}", r.dt), format!("{:e}", r.error), r.order.map(|o| format!("{o:.4}")).unwrap_or_default()])
                .collect();
            sinks::write_table(&dir.join("convergence_dt.csv"), &["dt", "error_L2", "order"], &table).map_err(other)?;
            println!("reference dt = {reference:e}");
            for r in &table {
                println!("dt {:>10}  error {:>12}  order {}", r[0], r[1], r[2]);
            }
        }
        StudyKind::Epsilon => {
            let eps = if args.values.is_empty() { vec![2e-2, 1e-2, 5e-3, 2.5e-3] } else { args.values.clone() };
            if eps.iter().any(|e| !(*e > 0.0)) {
                return Err(Failure::Config("epsilons must be positive".into()));
            }
            let rows = studies::epsilon_study(&initial, &base, &eps).map_err(other)?;
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| vec![format!("{:e}", r.epsilon), format!("{:e}", r.difference), r.ratio.map(|o| format!("{o:.4}")).unwrap_or_default()])
                .collect();
            sinks::write_table(&dir.join("convergence_epsilon.csv"), &["epsilon", "diff_L2", "ratio"], &table)
                .map_err(other)?;
            for r in &table {
                println!("epsilon {:>10}  |u_eps - u_eps/2| {:>12}  ratio {}", r[0], r[1], r[2]);
            }
        }
    }
    Ok(())
}
