//! `qdrive run <config>...`: batch runner for driving scenarios.

mod config;
mod pipeline;
mod report;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use config::RunConfig;
use pipeline::Context;
use report::{write_summary, Outcome};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure [{code}]: {0}", code = .0.code())]
    Numerical(#[from] qdrive::Error),
    #[error("io error: {0}")]
    Io(String),
}

impl RunError {
    pub fn code(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Numerical(e) => e.code(),
            RunError::Io(_) => "io",
        }
    }

    fn exit_status(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) | RunError::Io(_) => 3,
        }
    }
}

const EXIT_BREACH: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "qdrive", version, about = "Drive quantum states along prescribed paths in minimal time")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one or more scenario config files.
    Run(RunArgs),
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// TOML scenario files.
    #[arg(required = true)]
    configs: Vec<PathBuf>,
    /// Exit with status 4 when any acceptance threshold is breached.
    #[arg(long)]
    strict: bool,
    /// Run up to N configs in parallel.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: u16,
    /// Write each scenario to DIR/<name> instead of its configured directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override the propagation step.
    #[arg(long)]
    dt: Option<f64>,
    /// Override the gauge-fixing lattice size.
    #[arg(long)]
    samples: Option<usize>,
}

struct Job {
    path: PathBuf,
    cfg: RunConfig,
    out_dir: PathBuf,
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().filter(|p| !p.as_os_str().is_empty()).map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}

fn prepare(path: &Path, args: &RunArgs) -> Result<Job, RunError> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(dt) = args.dt {
        cfg.numerics.dt = dt;
    }
    if let Some(n) = args.samples {
        cfg.numerics.n_samples = n;
    }
    cfg.validate().map_err(|e| match e {
        RunError::Config(msg) => RunError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    let name = cfg
        .name
        .clone()
        .unwrap_or_else(|| path.file_stem().map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned()));
    let out_dir = match (&args.out, &cfg.output.dir) {
        (Some(root), _) => root.join(&name),
        (None, Some(dir)) => base_dir(path).join(dir),
        (None, None) => base_dir(path).join("out").join(&name),
    };
    Ok(Job { path: path.to_path_buf(), cfg, out_dir })
}

/// Runs one job; returns whether all checks passed.
fn execute(job: &Job) -> Result<bool, RunError> {
    std::fs::create_dir_all(&job.out_dir).map_err(|e| RunError::Io(format!("{}: {e}", job.out_dir.display())))?;
    let base = base_dir(&job.path);
    let ctx = Context { cfg: &job.cfg, base_dir: &base, out_dir: job.out_dir.clone() };
    let mut outcome = Outcome::default();
    let result = pipeline::run(&ctx, &mut outcome);
    match result {
        Ok(()) => {
            write_summary(&job.out_dir, &job.path, &job.cfg, &outcome, None)?;
            Ok(outcome.passed())
        }
        Err(e) => {
            if let Err(w) = write_summary(&job.out_dir, &job.path, &job.cfg, &outcome, Some(&e)) {
                log::error!("{}: could not write summary: {w}", job.path.display());
            }
            Err(e)
        }
    }
}

fn run(args: &RunArgs) -> u8 {
    let mut status = 0u8;
    let mut jobs = Vec::new();
    for path in &args.configs {
        match prepare(path, args) {
            Ok(job) => jobs.push(job),
            Err(e) => {
                eprintln!("{e}");
                status = status.max(e.exit_status());
            }
        }
    }
    let mut seen = BTreeSet::new();
    for job in &jobs {
        if !seen.insert(job.out_dir.clone()) {
            eprintln!("config error: two runs share the output directory {}", job.out_dir.display());
            return 2;
        }
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(args.jobs as usize).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("cannot start worker pool: {e}");
            return 3;
        }
    };
    let results: Vec<_> = pool.install(|| jobs.par_iter().map(execute).collect());
    for (job, result) in jobs.iter().zip(results) {
        let label = job.path.display();
        match result {
            Ok(true) => println!("{label}: PASS ({})", job.out_dir.display()),
            Ok(false) => {
                println!("{label}: THRESHOLD BREACH ({})", job.out_dir.display());
                if args.strict {
                    status = status.max(EXIT_BREACH);
                }
            }
            Err(e) => {
                eprintln!("{label}: {e}");
                status = status.max(e.exit_status());
            }
        }
    }
    status
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => ExitCode::from(run(&args)),
    }
}
