//! Command-line driver: config parsing, dispatch and output files.
//!
//! Every subcommand writes `<out>/<subcommand>/` containing one CSV per
//! table, `report.csv` with the pass/fail checks and `manifest.txt` with the
//! artifact version, the full config echo, every tolerance and the wall time.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand};

pub use commands::{execute, Command, Outcome};
pub use config::{Config, ConfigError, Key, Value};

#[derive(Debug, Parser)]
#[command(name = "rvmb", version, about = "Verification and simulation suite for the relativistic Vlasov-Maxwell-Boltzmann system")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output root.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one key, `key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Print the resolved config and exit without running.
    #[arg(long, global = true)]
    show_config: bool,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Post-collision map invariants, Newtonian limit and transport Jacobian.
    KinematicsCheck,
    /// Collision moments and Juttner annihilation.
    CollisionVerify,
    /// Chain-rule and rotation convergence studies.
    ChainRule,
    /// Carleman radial integral: closed form and bound ratios.
    CarlemanScan,
    /// Wave residual of the assembled fields and Kirchhoff probes.
    FieldsSolve,
    /// Spherical means of the field kernels.
    KernelMeans,
    /// Commutator, transport and null-frame residuals.
    VectorfieldTable,
    /// Sampled inequality catalog.
    InequalityScan {
        /// Case id, or `all`.
        case: Option<String>,
    },
    /// Particle simulation with optional fields and collisions.
    Simulate,
    /// Free-transport decay exponents.
    DecayFit,
    /// Every check above, with `<subcommand>.<key>` config keys.
    Report,
}

impl Sub {
    fn command(&self) -> Command {
        match self {
            Sub::KinematicsCheck => Command::KinematicsCheck,
            Sub::CollisionVerify => Command::CollisionVerify,
            Sub::ChainRule => Command::ChainRule,
            Sub::CarlemanScan => Command::CarlemanScan,
            Sub::FieldsSolve => Command::FieldsSolve,
            Sub::KernelMeans => Command::KernelMeans,
            Sub::VectorfieldTable => Command::VectorfieldTable,
            Sub::InequalityScan { .. } => Command::InequalityScan,
            Sub::Simulate => Command::Simulate,
            Sub::DecayFit => Command::DecayFit,
            Sub::Report => Command::Report,
        }
    }
}

/// Exit codes.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

/// Failure of a run before its checks could be judged.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error(transparent)]
    Compute(#[from] rvmb::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Compute(rvmb::Error::Budget { .. }) => EXIT_BUDGET,
            _ => EXIT_FAIL,
        }
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

/// Default config of `cmd`, with the file text and `key=value` overrides applied.
pub fn resolve_config(cmd: Command, file: Option<&str>, overrides: &[String]) -> Result<Config, ConfigError> {
    let mut cfg = Config::from_schema(&cmd.schema());
    if let Some(text) = file {
        cfg.apply_text(text)?;
    }
    for pair in overrides {
        cfg.set_pair(pair)?;
    }
    Ok(cfg)
}

/// Run `cmd` on a pool of `threads` workers, or the global pool.
pub fn run_command(cmd: Command, cfg: &Config, threads: Option<usize>) -> Result<(Outcome, Duration), RunError> {
    let start = Instant::now();
    let outcome = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(|| execute(cmd, cfg)),
        None => execute(cmd, cfg),
    }?;
    Ok((outcome, start.elapsed()))
}

/// Text of `manifest.txt`.
pub fn manifest(cmd: Command, cfg: &Config, outcome: &Outcome, wall: Duration, threads: Option<usize>) -> String {
    let mut s = format!("artifact = rvmb {}\nsubcommand = {}\n", env!("CARGO_PKG_VERSION"), cmd.name());
    s += &format!("threads = {}\n", threads.map_or("all".to_string(), |n| n.to_string()));
    s += &format!("wall_time_s = {:.3}\n", wall.as_secs_f64());
    s += &format!("passed = {}\n\n[config]\n", outcome.report.passed());
    s += &cfg.echo();
    if !outcome.timings.is_empty() {
        s += "\n[timings]\n";
        for (name, d) in &outcome.timings {
            s += &format!("{name}_s = {:.3}\n", d.as_secs_f64());
        }
    }
    s += "\n[tolerances]\n";
    for c in &outcome.report.checks {
        s += &format!("{} {}\n", c.name, c.tolerance);
    }
    s
}

/// Write tables, JSON artifacts, `report.csv` and `manifest.txt` under `dir`.
pub fn write_outputs(dir: &Path, cmd: Command, cfg: &Config, outcome: &Outcome, wall: Duration, threads: Option<usize>) -> Result<(), RunError> {
    let write = |name: &str, ext: &str, body: &str| -> Result<(), RunError> {
        let path = dir.join(format!("{name}.{ext}"));
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io(parent))?;
        }
        fs::write(&path, body).map_err(io(&path))
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    for (name, table) in &outcome.tables {
        write(name, "csv", &table.to_csv())?;
    }
    for (name, value) in &outcome.json {
        write(name, "json", &serde_json::to_string_pretty(value).expect("serialisable"))?;
    }
    write("report", "csv", &outcome.report.table().to_csv())?;
    write("manifest", "txt", &manifest(cmd, cfg, outcome, wall, threads))
}

fn run_parsed(cli: Cli) -> Result<i32, RunError> {
    let cmd = cli.command.command();
    let text = match &cli.config {
        Some(p) => Some(fs::read_to_string(p).map_err(|e| ConfigError::Invalid { key: "--config".into(), reason: format!("{}: {e}", p.display()) })?),
        None => None,
    };
    let mut overrides = cli.set.clone();
    if let Sub::InequalityScan { case: Some(case) } = &cli.command {
        overrides.push(format!("case={case}"));
    }
    let cfg = resolve_config(cmd, text.as_deref(), &overrides)?;
    if cli.show_config {
        print!("{}", cfg.echo());
        return Ok(EXIT_PASS);
    }
    let (outcome, wall) = run_command(cmd, &cfg, cli.threads)?;
    let dir = cli.out.join(cmd.name());
    write_outputs(&dir, cmd, &cfg, &outcome, wall, cli.threads)?;
    for c in &outcome.report.checks {
        println!("{} {} value={} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, rvmb::report::sci(c.value), c.tolerance);
    }
    println!("wrote {} in {:.1} s", dir.display(), wall.as_secs_f64());
    Ok(if outcome.report.passed() { EXIT_PASS } else { EXIT_FAIL })
}

/// Parse `args` (program name first), run and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
        }
    };
    match run_parsed(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
