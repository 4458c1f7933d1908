//! Dispatch from a resolved configuration to the library, producing the output bytes.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use tfade_core::harness::{
    derivative_table, markdown_table, run_example1, run_example2, run_stability_suite, run_timing_sweep,
    write_tables_csv, ErrorTable, Example1Config, Example2Config, ProblemKind, StabilityConfig, TimingConfig,
};
use tfade_core::{
    build_soe, f128, solver::solve_with_soe, ManufacturedCase, ProblemSpec, Real, SoeApproximation, SpatialGrid,
    TemporalMesh,
};

use crate::config::{ConfigError, Experiment, Format, Precision, Problem, RunConfig};

const SOE_SAMPLES: usize = 20_000;

pub fn execute(cfg: &RunConfig) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    match cfg.experiment {
        Experiment::SoeCheck => match cfg.precision {
            Precision::F64 => soe_check::<f64>(cfg, &mut out)?,
            Precision::Quad => soe_check::<f128>(cfg, &mut out)?,
        },
        Experiment::DerivTable => deriv_table(cfg, &mut out)?,
        Experiment::Solve => match cfg.precision {
            Precision::F64 => solve::<f64>(cfg, &mut out)?,
            Precision::Quad => solve::<f128>(cfg, &mut out)?,
        },
        Experiment::Table1 => {
            let exp = Example1Config {
                alphas: cfg.alpha.map_or_else(|| Example1Config::default().alphas, |a| vec![a]),
                lambda: cfg.lambda,
                delta: cfg.delta,
                r: cfg.r,
                t_final: cfg.t_final,
                ns: cfg.doubling_ns(),
                epsilon: cfg.epsilon,
            };
            write_tables(cfg, &run_example1(&exp)?, &mut out)?;
        }
        Experiment::Table2 => {
            let exp = Example2Config {
                alphas: cfg.alpha.map_or_else(|| Example2Config::default().alphas, |a| vec![a]),
                lambda: cfg.lambda,
                delta: cfg.delta,
                r: cfg.r,
                t_final: cfg.t_final,
                ns: cfg.doubling_ns(),
                m: None,
                epsilon: cfg.epsilon,
                problem: match cfg.problem {
                    Problem::Example2 => ProblemKind::Manufactured,
                    Problem::Zero => ProblemKind::Zero,
                },
            };
            write_tables(cfg, &run_example2(&exp)?, &mut out)?;
        }
        Experiment::Stability => stability(cfg, &mut out)?,
        Experiment::Timing => timing(cfg, &mut out)?,
    }
    Ok(out)
}

fn write_tables(cfg: &RunConfig, tables: &[ErrorTable], out: &mut Vec<u8>) -> Result<()> {
    match cfg.format {
        Format::Markdown => out.extend_from_slice(markdown_table(tables).as_bytes()),
        Format::Jsonl => {
            for t in tables {
                t.write_jsonl(&mut *out)?;
            }
        }
        _ => write_tables_csv(tables, &mut *out)?,
    }
    Ok(())
}

fn soe_check<T: Real>(cfg: &RunConfig, out: &mut Vec<u8>) -> Result<()> {
    let mesh = TemporalMesh::graded(T::lit(cfg.t_final), cfg.n, T::lit(cfg.r))?;
    let window = mesh.kernel_window_start();
    let soe = build_soe(T::lit(cfg.alpha_or_default()), T::lit(cfg.epsilon), window, T::lit(cfg.t_final))?;
    let err = soe.verify(SOE_SAMPLES)?;
    eprintln!(
        "{} terms on [{:e}, {}], max sampled error {:e} (tolerance {:e} plus 256 ulp of the kernel)",
        soe.n_exp(),
        window.to_f64_lossy(),
        cfg.t_final,
        err.to_f64_lossy(),
        cfg.epsilon
    );
    soe.write_csv(out)?;
    Ok(())
}

fn deriv_table(cfg: &RunConfig, out: &mut Vec<u8>) -> Result<()> {
    let rows = derivative_table(cfg.alpha_or_default(), cfg.lambda, cfg.delta, cfg.r, cfg.t_final, cfg.n, cfg.epsilon)?;
    if cfg.format == Format::Jsonl {
        for row in &rows {
            serde_json::to_writer(&mut *out, row)?;
            writeln!(out)?;
        }
    } else {
        writeln!(out, "n,t,exact,fast,direct")?;
        for r in &rows {
            writeln!(out, "{},{},{},{},{}", r.n, r.t, r.exact, r.fast, r.direct)?;
        }
    }
    Ok(())
}

fn load_soe<T: Real>(path: &Path) -> Result<SoeApproximation<T>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(SoeApproximation::read_csv(BufReader::new(file))?)
}

fn solve<T: Real>(cfg: &RunConfig, out: &mut Vec<u8>) -> Result<()> {
    let alpha = T::lit(cfg.alpha_or_default());
    let (t_final, lambda) = (T::lit(cfg.t_final), T::lit(cfg.lambda));
    let spec = match cfg.problem {
        Problem::Example2 => ProblemSpec::manufactured(ManufacturedCase::new(alpha, lambda, T::lit(cfg.delta))?, t_final)?,
        Problem::Zero => ProblemSpec::zero(T::lit(cfg.length), t_final, alpha, lambda)?,
    };
    let mesh = TemporalMesh::graded(t_final, cfg.n, T::lit(cfg.r))?;
    let grid = SpatialGrid::uniform(T::lit(cfg.length), cfg.m)?;
    let soe = match &cfg.input {
        Some(path) => {
            let soe = load_soe::<T>(path)?;
            if soe.alpha() != alpha {
                bail!(ConfigError(format!(
                    "kernel in {} was built for alpha = {}, not {}",
                    path.display(),
                    soe.alpha().to_f64_lossy(),
                    cfg.alpha_or_default()
                )));
            }
            soe
        }
        None => build_soe(alpha, T::lit(cfg.epsilon), mesh.kernel_window_start(), t_final)?,
    };
    let solution = solve_with_soe(&spec, &mesh, &grid, &soe)?;
    match cfg.format {
        Format::Binary => solution.write_binary(out)?,
        _ => solution.write_csv(out)?,
    }
    Ok(())
}

fn stability(cfg: &RunConfig, out: &mut Vec<u8>) -> Result<()> {
    let report = run_stability_suite(&StabilityConfig {
        alpha: cfg.alpha_or_default(),
        lambda: cfg.lambda,
        delta: cfg.delta,
        r: cfg.r,
        t_final: cfg.t_final,
        n: cfg.n,
        m: cfg.m,
        seed: cfg.seed,
        epsilon: cfg.epsilon,
        ..Default::default()
    })?;
    if cfg.format == Format::Jsonl {
        for trial in &report.trials {
            serde_json::to_writer(&mut *out, trial)?;
            writeln!(out)?;
        }
    } else {
        writeln!(out, "trial,initial_norm,max_ratio")?;
        for t in &report.trials {
            let ratio = t.max_ratio.map(|r| r.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{}", t.trial, t.initial_norm, ratio)?;
        }
    }
    eprintln!("worst growth ratio {:.12}", report.worst_ratio());
    if !report.passes(1e-10) {
        bail!("stability bound violated: worst growth ratio {}", report.worst_ratio());
    }
    Ok(())
}

fn timing(cfg: &RunConfig, out: &mut Vec<u8>) -> Result<()> {
    let ns = if cfg.n_max > cfg.n {
        cfg.doubling_ns()
    } else {
        vec![cfg.n, 2 * cfg.n, 4 * cfg.n]
    };
    let report = run_timing_sweep(&TimingConfig {
        alpha: cfg.alpha_or_default(),
        lambda: cfg.lambda,
        delta: cfg.delta,
        r: cfg.r,
        t_final: cfg.t_final,
        ns,
        m: cfg.m,
        epsilon: cfg.epsilon,
        ..Default::default()
    })?;
    if cfg.format == Format::Jsonl {
        for row in &report.rows {
            serde_json::to_writer(&mut *out, row)?;
            writeln!(out)?;
        }
    } else {
        let cell = |g: Option<f64>| g.map(|g| format!("{g:.3}")).unwrap_or_default();
        writeln!(out, "N,fast_seconds,reference_seconds,fast_growth,reference_growth")?;
        for row in &report.rows {
            writeln!(
                out,
                "{},{:e},{:e},{},{}",
                row.n,
                row.fast_seconds,
                row.reference_seconds,
                cell(row.fast_growth),
                cell(row.reference_growth)
            )?;
        }
    }
    eprintln!("{} kernel terms", report.n_exp);
    Ok(())
}
