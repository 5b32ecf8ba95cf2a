//! Config-driven runner for the `lipkernel-core` checks: experiment files,
//! fixture catalog, CSV reports and the `lipkernel` command line.

pub mod config;
pub mod fixtures;
pub mod output;
pub mod parallel;
pub mod study;

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{parse, Check, ConfigError, ExperimentConfig};
pub use output::CheckResult;
pub use study::{CheckOutput, Study};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "LIPKERNEL_OUT";

/// Used when neither the command line, the config nor the environment names
/// an output directory.
pub const DEFAULT_OUT: &str = "lipkernel-out";

/// Runs above this many seconds print a warning.
pub const SOFT_BUDGET_SECS: f64 = 600.0;

pub mod exit {
    pub const PASS: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const FAULT: i32 = 3;
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: usize,
    pub quiet: bool,
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Io(PathBuf, io::Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => e.fmt(f),
            RunError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl std::error::Error for RunError {}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => exit::CONFIG,
            RunError::Io(..) => exit::FAULT,
        }
    }
}

pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub results: Vec<CheckResult>,
    pub seconds: f64,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.results.iter().any(|(_, r)| r.is_err()) {
            exit::FAULT
        } else if self.results.iter().all(|(_, r)| r.as_ref().is_ok_and(|o| o.pass())) {
            exit::PASS
        } else {
            exit::CHECK_FAILED
        }
    }
}

/// Output directory: command line, then config, then environment.
pub fn output_dir(opts: &RunOptions, cfg: &ExperimentConfig) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| cfg.out.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Parses the file at `path`, applying the command-line seed override.
pub fn load(path: &Path, seed: Option<u64>) -> Result<(String, ExperimentConfig), RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::Config(ConfigError { line: 0, message: format!("{}: {e}", path.display()) }))?;
    let mut cfg = parse(&text).map_err(RunError::Config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok((text, cfg))
}

/// Runs every requested check of `cfg` in dependency order.
pub fn run_checks(cfg: ExperimentConfig, jobs: usize, quiet: bool) -> Vec<CheckResult> {
    let checks = cfg.checks.clone();
    let study = match Study::new(cfg, jobs) {
        Ok(s) => s,
        Err(e) => return checks.into_iter().map(|c| (c, Err(e.to_string()))).collect(),
    };
    let one = |c: &Check| {
        let r = study.run(*c).map_err(|e| e.to_string());
        if !quiet {
            match &r {
                Ok(o) => eprintln!(
                    "{:<13} {} ({:.1} s)",
                    c.name(),
                    if o.pass() { "pass" } else { "FAIL" },
                    o.seconds
                ),
                Err(e) => eprintln!("{:<13} FAULT: {e}", c.name()),
            }
        }
        (*c, r)
    };
    // Checks share lazily built grids; running them side by side only pays
    // off with spare threads.
    parallel::par_map(if jobs > 1 { jobs } else { 1 }, &checks, one)
}

/// Loads, runs and writes one experiment.
pub fn run(path: &Path, opts: &RunOptions) -> Result<RunOutcome, RunError> {
    let start = Instant::now();
    let (text, cfg) = load(path, opts.seed)?;
    let dir = output_dir(opts, &cfg);
    fs::create_dir_all(&dir).map_err(|e| RunError::Io(dir.clone(), e))?;
    let results = run_checks(cfg.clone(), opts.jobs.max(1), opts.quiet);
    let io_err = |e| RunError::Io(dir.clone(), e);
    output::write_summary(&dir, &results).map_err(io_err)?;
    for (_, r) in &results {
        if let Ok(out) = r {
            output::write_check(&dir, out).map_err(io_err)?;
        }
    }
    output::write_manifest(&dir, &text, path, &cfg, &results).map_err(io_err)?;
    let seconds = start.elapsed().as_secs_f64();
    if seconds > SOFT_BUDGET_SECS && !opts.quiet {
        eprintln!("warning: run took {seconds:.0} s, above the {SOFT_BUDGET_SECS:.0} s budget");
    }
    Ok(RunOutcome {
        out_dir: dir,
        results,
        seconds,
    })
}
