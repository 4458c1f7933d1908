//! `tfade`: command-line driver for the tempered fractional advection-dispersion solver.

mod config;
mod run;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{CommandFactory, Parser};

use config::{ConfigError, Experiment, Format, Precision, Problem, RunConfig, Settings};

/// Every flag mirrors a key of the `key = value` config file and overrides it.
#[derive(Debug, Parser)]
#[command(name = "tfade", version, about = "Fast solver for the tempered time-fractional advection-dispersion equation")]
struct Cli {
    /// What to run; may instead come from `experiment=` in the config file
    #[arg(value_enum)]
    experiment: Option<Experiment>,

    /// `key = value` file read before the flags
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Regularity exponent of the test solution
    #[arg(long)]
    delta: Option<f64>,
    /// Mesh grading exponent
    #[arg(long)]
    r: Option<f64>,
    /// Final time
    #[arg(long = "T", value_name = "T")]
    t_final: Option<f64>,
    /// Domain length
    #[arg(long = "L", value_name = "L")]
    length: Option<f64>,
    /// Time steps (first row of a table sweep)
    #[arg(long = "N", value_name = "N")]
    n: Option<usize>,
    /// Spatial cells
    #[arg(long = "M", value_name = "M")]
    m: Option<usize>,
    /// Largest N of a table sweep
    #[arg(long)]
    n_max: Option<usize>,
    /// Kernel approximation tolerance
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when absent
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, value_enum)]
    problem: Option<Problem>,
    #[arg(long, value_enum)]
    precision: Option<Precision>,
    /// Stored kernel coefficients (as written by soe-check) for solve
    #[arg(long)]
    input: Option<PathBuf>,
}

impl Cli {
    fn settings(self) -> Settings {
        Settings {
            experiment: self.experiment,
            alpha: self.alpha,
            lambda: self.lambda,
            delta: self.delta,
            r: self.r,
            t_final: self.t_final,
            length: self.length,
            n: self.n,
            m: self.m,
            n_max: self.n_max,
            epsilon: self.epsilon,
            seed: self.seed,
            output: self.output,
            format: self.format,
            problem: self.problem,
            precision: self.precision,
            input: self.input,
        }
    }
}

fn configure(cli: Cli) -> Result<RunConfig> {
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
            Settings::parse(&text)?
        }
        None => Settings::default(),
    };
    Ok(RunConfig::resolve(file.overlay(cli.settings()))?)
}

fn init_threads() -> Result<()> {
    if let Ok(value) = std::env::var("TFDE_THREADS") {
        let threads: usize = value
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| ConfigError(format!("TFDE_THREADS = `{value}` is not a positive integer")))?;
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    Ok(())
}

/// Writes through a sibling temporary file renamed into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("cannot write into {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = configure(cli)?;
    init_threads()?;
    log::debug!("{cfg:?}");
    let bytes = run::execute(&cfg)?;
    match &cfg.output {
        Some(path) => write_atomic(path, &bytes),
        None => Ok(std::io::stdout().lock().write_all(&bytes)?),
    }
}

/// 1 for bad input, 2 for numerical failures.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 1;
    }
    match err.downcast_ref::<tfade_core::Error>() {
        Some(e) if e.is_validation() => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if std::env::args_os().len() <= 1 {
        let _ = Cli::command().print_help();
        return ExitCode::from(1);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_failure_kind() {
        assert_eq!(exit_code(&ConfigError("bad".into()).into()), 1);
        let invalid = tfade_core::Error::InvalidParameter {
            name: "alpha",
            reason: "require 0 < alpha < 1".into(),
        };
        assert_eq!(exit_code(&invalid.into()), 1);
        let breakdown = tfade_core::Error::Breakdown { row: 3, pivot: 0.0 };
        assert_eq!(exit_code(&breakdown.into()), 2);
        let miss = tfade_core::Error::ToleranceNotMet {
            tolerance: 1e-14,
            achieved: 1e-9,
        };
        assert_eq!(exit_code(&anyhow::Error::from(miss).context("deriv-table")), 2);
    }
}
