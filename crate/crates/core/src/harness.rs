//! Convergence tables, stability trials and timing sweeps.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::derivative::{direct_l1_series, fast_derivative_series, TemperedParams};
use crate::error::{Error, Result};
use crate::mesh::{SpatialGrid, TemporalMesh};
use crate::oracles::{exact_tempered_caputo_power, ManufacturedCase};
use crate::real::Real;
use crate::solver::{solve_reference, solve_with_soe, ProblemSpec, Solution};
use crate::soe::{build_soe, SoeApproximation};

/// One refinement level of a convergence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub error: f64,
    pub order: Option<f64>,
}

/// Errors and observed orders for one α, with the run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorTable {
    pub experiment: String,
    pub alpha: f64,
    pub lambda: f64,
    pub delta: f64,
    pub r: f64,
    pub t_final: f64,
    pub epsilon: f64,
    /// How the spatial resolution follows N; empty for pure time experiments.
    pub coupling: String,
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    /// Writes `N,error,order`; the first order cell is empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "N,error,order")?;
        for row in &self.rows {
            writeln!(out, "{},{:e},{}", row.n, row.error, fmt_order(row.order))?;
        }
        Ok(())
    }

    /// One JSON object per row, each carrying the full configuration.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for row in &self.rows {
            let mut value = serde_json::to_value(self).map_err(json_err)?;
            let obj = value.as_object_mut().expect("table serializes to an object");
            obj.remove("rows");
            obj.insert("N".into(), row.n.into());
            obj.insert("error".into(), row.error.into());
            obj.insert("order".into(), row.order.into());
            serde_json::to_writer(&mut out, &value).map_err(json_err)?;
            writeln!(out)?;
        }
        Ok(())
    }
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn fmt_order(order: Option<f64>) -> String {
    order.map(|o| format!("{o:.4}")).unwrap_or_default()
}

/// Writes several tables as CSV with a leading `alpha` column.
pub fn write_tables_csv<W: Write>(tables: &[ErrorTable], mut out: W) -> Result<()> {
    if let [single] = tables {
        return single.write_csv(out);
    }
    writeln!(out, "alpha,N,error,order")?;
    for table in tables {
        for row in &table.rows {
            writeln!(out, "{},{},{:e},{}", table.alpha, row.n, row.error, fmt_order(row.order))?;
        }
    }
    Ok(())
}

/// Markdown with one error/order column pair per α, rows indexed by N.
pub fn markdown_table(tables: &[ErrorTable]) -> String {
    let mut s = String::from("| N |");
    let mut rule = String::from("|---|");
    for t in tables {
        s.push_str(&format!(" α={} error | order |", t.alpha));
        rule.push_str("---|---|");
    }
    s.push('\n');
    s.push_str(&rule);
    s.push('\n');
    let rows = tables.first().map_or(0, |t| t.rows.len());
    for k in 0..rows {
        s.push_str(&format!("| {} |", tables[0].rows[k].n));
        for t in tables {
            let row = &t.rows[k];
            let order = row.order.map(|o| format!("{o:.4}")).unwrap_or_else(|| "-".into());
            s.push_str(&format!(" {:.4e} | {} |", row.error, order));
        }
        s.push('\n');
    }
    s
}

/// log(e_coarse / e_fine) / log(ratio)
pub fn observed_order(e_coarse: f64, e_fine: f64, ratio: f64) -> f64 {
    (e_coarse / e_fine).ln() / ratio.ln()
}

/// Attaches orders to a list of (N, error, step) triples.
fn rows_with_orders(cells: &[(usize, f64, f64)]) -> Vec<ErrorRow> {
    cells
        .iter()
        .enumerate()
        .map(|(k, &(n, error, step))| {
            let order = (k > 0).then(|| {
                let (_, prev, prev_step) = cells[k - 1];
                observed_order(prev, error, prev_step / step)
            });
            ErrorRow {
                n,
                error,
                order: order.filter(|o| o.is_finite()),
            }
        })
        .collect()
}

fn check_doubling(ns: &[usize]) -> Result<()> {
    if ns.is_empty() {
        return Err(Error::invalid("Ns", "need at least one N"));
    }
    if ns.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::invalid("Ns", "successive N must double"));
    }
    Ok(())
}

/// √(h Σ_{i=0}^{M} (u(x_i, t_n) - U_i^n)²)
pub fn l2_error<T: Real, F: Fn(T, T) -> T>(solution: &Solution<T>, exact: F, level: usize) -> T {
    let t = solution.mesh.node(level);
    let sum: T = solution
        .grid
        .nodes()
        .iter()
        .zip(solution.level(level))
        .map(|(&x, &u)| {
            let d = exact(x, t) - u;
            d * d
        })
        .sum();
    (solution.grid.spacing() * sum).sqrt()
}

/// √(h Σ_{i=1}^{M-1} v_i²), the discrete norm on interior values.
pub fn l2_norm<T: Real>(values: &[T], h: T) -> T {
    let m = values.len() - 1;
    let sum: T = values[1..m].iter().map(|&v| v * v).sum();
    (h * sum).sqrt()
}

/// Settings for the derivative-approximation experiment with u = t^δ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Example1Config {
    pub alphas: Vec<f64>,
    pub lambda: f64,
    pub delta: f64,
    pub r: f64,
    pub t_final: f64,
    pub ns: Vec<usize>,
    pub epsilon: f64,
}

impl Default for Example1Config {
    fn default() -> Self {
        Example1Config {
            alphas: vec![0.1, 0.3, 0.5],
            lambda: 1.0,
            delta: 1.5,
            r: 1.5,
            t_final: 2.0,
            ns: vec![80, 160, 320, 640],
            epsilon: 1e-12,
        }
    }
}

/// max over half-points of |exact - fast| for u = t^δ on one mesh.
pub fn example1_error<T: Real>(alpha: T, lambda: T, delta: T, r: T, t_final: T, n: usize, epsilon: T) -> Result<T> {
    let mesh = TemporalMesh::graded(t_final, n, r)?;
    let params = TemperedParams::new(alpha, lambda, &mesh)?;
    let soe = build_soe(alpha, epsilon, mesh.kernel_window_start(), t_final)?;
    let u: Vec<T> = mesh.nodes().iter().map(|t| t.powf(delta)).collect();
    let fast = fast_derivative_series(&params, &soe, &u)?;
    let mut worst = T::zero();
    for (k, &f) in fast.iter().enumerate() {
        let exact = exact_tempered_caputo_power(delta, alpha, lambda, mesh.half_point(k))?;
        worst = worst.max((exact - f).abs());
    }
    Ok(worst)
}

/// E_max(N) = max_n |exact - fast| and order log₂(E(N/2)/E(N)), one table per α.
pub fn run_example1(cfg: &Example1Config) -> Result<Vec<ErrorTable>> {
    check_doubling(&cfg.ns)?;
    let cells: Vec<(usize, usize)> = (0..cfg.alphas.len())
        .flat_map(|a| (0..cfg.ns.len()).map(move |k| (a, k)))
        .collect();
    let errors: Vec<f64> = cells
        .par_iter()
        .map(|&(a, k)| example1_error(cfg.alphas[a], cfg.lambda, cfg.delta, cfg.r, cfg.t_final, cfg.ns[k], cfg.epsilon))
        .collect::<Result<_>>()?;
    Ok(cfg
        .alphas
        .iter()
        .enumerate()
        .map(|(a, &alpha)| {
            let triples: Vec<(usize, f64, f64)> = cfg
                .ns
                .iter()
                .enumerate()
                .map(|(k, &n)| (n, errors[a * cfg.ns.len() + k], 1.0 / n as f64))
                .collect();
            ErrorTable {
                experiment: "example1".into(),
                alpha,
                lambda: cfg.lambda,
                delta: cfg.delta,
                r: cfg.r,
                t_final: cfg.t_final,
                epsilon: cfg.epsilon,
                coupling: String::new(),
                rows: rows_with_orders(&triples),
            }
        })
        .collect())
}

/// Which problem the diffusion experiment solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Manufactured,
    Zero,
}

/// Settings for the full-scheme convergence experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Example2Config {
    pub alphas: Vec<f64>,
    pub lambda: f64,
    pub delta: f64,
    pub r: f64,
    pub t_final: f64,
    pub ns: Vec<usize>,
    /// Fixed number of cells; `None` couples M = N.
    pub m: Option<usize>,
    pub epsilon: f64,
    pub problem: ProblemKind,
}

impl Default for Example2Config {
    fn default() -> Self {
        Example2Config {
            alphas: vec![0.1, 0.3, 0.5],
            lambda: 1.0,
            delta: 1.8,
            r: 3.0,
            t_final: 2.0,
            ns: vec![10, 20, 40, 80, 160],
            m: None,
            epsilon: 1e-10,
            problem: ProblemKind::Manufactured,
        }
    }
}

impl Example2Config {
    fn spec(&self, alpha: f64) -> Result<(ProblemSpec<f64>, ManufacturedCase<f64>)> {
        let case = ManufacturedCase::new(alpha, self.lambda, self.delta)?;
        let spec = match self.problem {
            ProblemKind::Manufactured => ProblemSpec::manufactured(case, self.t_final)?,
            ProblemKind::Zero => ProblemSpec::zero(1.0, self.t_final, alpha, self.lambda)?,
        };
        Ok((spec, case))
    }

    fn exact(&self, case: &ManufacturedCase<f64>, x: f64, t: f64) -> f64 {
        match self.problem {
            ProblemKind::Manufactured => case.exact(x, t),
            ProblemKind::Zero => 0.0,
        }
    }
}

/// e_max = max_{n ≥ 1} of the discrete L2 error, and the final step τ_N.
pub fn example2_error(cfg: &Example2Config, alpha: f64, n: usize) -> Result<(f64, f64)> {
    let (spec, case) = cfg.spec(alpha)?;
    let mesh = TemporalMesh::graded(cfg.t_final, n, cfg.r)?;
    let grid = SpatialGrid::uniform(1.0, cfg.m.unwrap_or(n))?;
    let soe = build_soe(alpha, cfg.epsilon, mesh.kernel_window_start(), cfg.t_final)?;
    let sol = solve_with_soe(&spec, &mesh, &grid, &soe)?;
    let worst = (1..=n)
        .map(|k| l2_error(&sol, |x, t| cfg.exact(&case, x, t), k))
        .fold(0.0, f64::max);
    Ok((worst, mesh.tau(n)))
}

/// Full-scheme errors with order log(e_N/e_2N)/log(τ_N/τ_2N), τ_N the final step.
pub fn run_example2(cfg: &Example2Config) -> Result<Vec<ErrorTable>> {
    check_doubling(&cfg.ns)?;
    let cells: Vec<(usize, usize)> = (0..cfg.alphas.len())
        .flat_map(|a| (0..cfg.ns.len()).map(move |k| (a, k)))
        .collect();
    let results: Vec<(f64, f64)> = cells
        .par_iter()
        .map(|&(a, k)| example2_error(cfg, cfg.alphas[a], cfg.ns[k]))
        .collect::<Result<_>>()?;
    let coupling = match cfg.m {
        Some(m) => format!("M={m}"),
        None => "M=N".into(),
    };
    Ok(cfg
        .alphas
        .iter()
        .enumerate()
        .map(|(a, &alpha)| {
            let triples: Vec<(usize, f64, f64)> = cfg
                .ns
                .iter()
                .enumerate()
                .map(|(k, &n)| {
                    let (e, tau) = results[a * cfg.ns.len() + k];
                    (n, e, tau)
                })
                .collect();
            ErrorTable {
                experiment: "example2".into(),
                alpha,
                lambda: cfg.lambda,
                delta: cfg.delta,
                r: cfg.r,
                t_final: cfg.t_final,
                epsilon: cfg.epsilon,
                coupling: coupling.clone(),
                rows: rows_with_orders(&triples),
            }
        })
        .collect())
}

/// Per-half-point comparison for u = t^δ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeRow {
    pub n: usize,
    pub t: f64,
    pub exact: f64,
    pub fast: f64,
    pub direct: f64,
}

/// Exact, fast and direct derivatives of t^δ at every half-point of one mesh.
pub fn derivative_table(alpha: f64, lambda: f64, delta: f64, r: f64, t_final: f64, n: usize, epsilon: f64) -> Result<Vec<DerivativeRow>> {
    let mesh = TemporalMesh::graded(t_final, n, r)?;
    let params = TemperedParams::new(alpha, lambda, &mesh)?;
    let soe = build_soe(alpha, epsilon, mesh.kernel_window_start(), t_final)?;
    let u: Vec<f64> = mesh.nodes().iter().map(|t| t.powf(delta)).collect();
    let fast = fast_derivative_series(&params, &soe, &u)?;
    let direct = direct_l1_series(&params, &u)?;
    (0..n)
        .map(|k| {
            let t = mesh.half_point(k);
            Ok(DerivativeRow {
                n: k,
                t,
                exact: exact_tempered_caputo_power(delta, alpha, lambda, t)?,
                fast: fast[k],
                direct: direct[k],
            })
        })
        .collect()
}

/// Settings for the randomized stability trials.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub alpha: f64,
    pub lambda: f64,
    pub delta: f64,
    pub r: f64,
    pub t_final: f64,
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    pub epsilon: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            alpha: 0.5,
            lambda: 1.0,
            delta: 1.8,
            r: 3.0,
            t_final: 2.0,
            n: 64,
            m: 32,
            trials: 20,
            seed: 42,
            epsilon: 1e-10,
        }
    }
}

/// Growth of the difference of two solutions with different initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityTrial {
    pub trial: usize,
    pub initial_norm: f64,
    /// max_n ‖U^n - V^n‖ / ‖U^0 - V^0‖; absent when the initial data coincide
    pub max_ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub config: StabilityConfig,
    pub trials: Vec<StabilityTrial>,
}

impl StabilityReport {
    pub fn worst_ratio(&self) -> f64 {
        self.trials.iter().filter_map(|t| t.max_ratio).fold(0.0, f64::max)
    }

    pub fn passes(&self, slack: f64) -> bool {
        self.worst_ratio() <= 1.0 + slack
    }
}

/// Random sine series with `modes` terms, zero at both ends of [0, 1].
fn random_initial(rng: &mut ChaCha8Rng, modes: usize) -> impl Fn(f64) -> f64 + Send + Sync + 'static {
    let coeffs: Vec<f64> = (0..modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
    move |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * ((k + 1) as f64 * std::f64::consts::PI * x).sin())
            .sum()
    }
}

/// Solves pairs of problems with the manufactured forcing and random
/// initial data and records how the L2 distance evolves.
pub fn run_stability_suite(cfg: &StabilityConfig) -> Result<StabilityReport> {
    let mesh = TemporalMesh::graded(cfg.t_final, cfg.n, cfg.r)?;
    let grid = SpatialGrid::uniform(1.0, cfg.m)?;
    let soe = build_soe(cfg.alpha, cfg.epsilon, mesh.kernel_window_start(), cfg.t_final)?;
    let case = ManufacturedCase::new(cfg.alpha, cfg.lambda, cfg.delta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pairs: Vec<_> = (0..cfg.trials)
        .map(|_| (random_initial(&mut rng, cfg.m - 1), random_initial(&mut rng, cfg.m - 1)))
        .collect();
    let h = grid.spacing();
    let trials = pairs
        .into_par_iter()
        .enumerate()
        .map(|(trial, (phi, psi))| {
            let u = solve_with_soe(&ProblemSpec::manufactured(case, cfg.t_final)?.with_initial(phi), &mesh, &grid, &soe)?;
            let v = solve_with_soe(&ProblemSpec::manufactured(case, cfg.t_final)?.with_initial(psi), &mesh, &grid, &soe)?;
            let dist = |n: usize| {
                let d: Vec<f64> = u.level(n).iter().zip(v.level(n)).map(|(a, b)| a - b).collect();
                l2_norm(&d, h)
            };
            let initial_norm = dist(0);
            let max_ratio = (initial_norm > 0.0).then(|| (1..=cfg.n).map(dist).fold(0.0, f64::max) / initial_norm);
            Ok(StabilityTrial {
                trial,
                initial_norm,
                max_ratio,
            })
        })
        .collect::<Result<_>>()?;
    Ok(StabilityReport {
        config: cfg.clone(),
        trials,
    })
}

/// Settings for the fast-versus-reference timing sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingConfig {
    pub alpha: f64,
    pub lambda: f64,
    pub delta: f64,
    pub r: f64,
    pub t_final: f64,
    pub ns: Vec<usize>,
    pub m: usize,
    pub repeats: usize,
    pub epsilon: f64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig {
            alpha: 0.5,
            lambda: 1.0,
            delta: 1.8,
            r: 3.0,
            t_final: 2.0,
            ns: vec![64, 128, 256],
            m: 32,
            repeats: 5,
            epsilon: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub fast_seconds: f64,
    pub reference_seconds: f64,
    /// time(N) / time(N/2) for each path
    pub fast_growth: Option<f64>,
    pub reference_growth: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingReport {
    pub config: TimingConfig,
    pub n_exp: usize,
    pub rows: Vec<TimingRow>,
}

fn min_time<F: FnMut() -> Result<()>>(repeats: usize, mut f: F) -> Result<f64> {
    let mut best = f64::INFINITY;
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        f()?;
        best = best.min(start.elapsed().as_secs_f64());
    }
    Ok(best)
}

/// Wall time of the fast and reference solvers as N doubles at fixed M.
///
/// One SOE, built for the finest mesh, serves every N so that the fast
/// path's per-step cost stays fixed. Timings are the minimum over repeats
/// and run sequentially.
pub fn run_timing_sweep(cfg: &TimingConfig) -> Result<TimingReport> {
    check_doubling(&cfg.ns)?;
    let finest = TemporalMesh::graded(cfg.t_final, *cfg.ns.last().expect("nonempty"), cfg.r)?;
    let soe: SoeApproximation<f64> = build_soe(cfg.alpha, cfg.epsilon, finest.kernel_window_start(), cfg.t_final)?;
    let case = ManufacturedCase::new(cfg.alpha, cfg.lambda, cfg.delta)?;
    let spec = ProblemSpec::manufactured(case, cfg.t_final)?;
    let grid = SpatialGrid::uniform(1.0, cfg.m)?;
    let mut rows: Vec<TimingRow> = Vec::with_capacity(cfg.ns.len());
    for &n in &cfg.ns {
        let mesh = TemporalMesh::graded(cfg.t_final, n, cfg.r)?;
        let fast = min_time(cfg.repeats, || solve_with_soe(&spec, &mesh, &grid, &soe).map(drop))?;
        let reference = min_time(cfg.repeats, || solve_reference(&spec, &mesh, &grid).map(drop))?;
        let prev = rows.last();
        rows.push(TimingRow {
            n,
            fast_seconds: fast,
            reference_seconds: reference,
            fast_growth: prev.map(|p| fast / p.fast_seconds),
            reference_growth: prev.map(|p| reference / p.reference_seconds),
        });
    }
    Ok(TimingReport {
        config: cfg.clone(),
        n_exp: soe.n_exp(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn order_of_synthetic_errors() {
        assert_relative_eq!(observed_order(4.0, 1.0, 2.0), 2.0);
        assert_relative_eq!(observed_order(1e-2, 2.5e-3, 2.0), 2.0, max_relative = 1e-14);
        let rows = rows_with_orders(&[(10, 4e-2, 0.1), (20, 1e-2, 0.05), (40, 2.5e-3, 0.025)]);
        assert_eq!(rows[0].order, None);
        assert_relative_eq!(rows[1].order.unwrap(), 2.0, max_relative = 1e-12);
        assert_relative_eq!(rows[2].order.unwrap(), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn discrete_norms_by_hand() {
        let grid = SpatialGrid::uniform(1.0f64, 4).unwrap();
        let mesh = TemporalMesh::graded(1.0f64, 2, 1.0).unwrap();
        let c = 0.3;
        let sol = Solution {
            mesh,
            grid,
            levels: vec![vec![0.0; 5]; 3],
        };
        // offset c on the three interior nodes, zero error at the boundary
        let err = l2_error(&sol, |x, _| if x > 0.0 && x < 1.0 { c } else { 0.0 }, 1);
        assert_relative_eq!(err, (0.25 * 3.0 * c * c).sqrt(), max_relative = 1e-15);
        assert_relative_eq!(l2_norm(&[9.0, 1.0, 2.0, 2.0, 9.0], 0.25), (0.25f64 * 9.0).sqrt());
    }

    #[test]
    fn stored_fixture_error() {
        // 5×5 solution fixture: U_i^n = 0.01 (i + n) on the uniform grids, exact u = x + t
        let grid = SpatialGrid::uniform(1.0f64, 4).unwrap();
        let mesh = TemporalMesh::graded(1.0f64, 4, 1.0).unwrap();
        let levels: Vec<Vec<f64>> = (0..5).map(|n| (0..5).map(|i| 0.01 * (i + n) as f64).collect()).collect();
        let sol = Solution { mesh, grid, levels };
        // at n = 2: x_i + 0.5 - 0.01 (i + 2) = 0.48 + 0.24 i
        let hand: f64 = (0..5).map(|i| (0.48 + 0.24 * i as f64).powi(2)).sum::<f64>() * 0.25;
        assert_relative_eq!(l2_error(&sol, |x, t| x + t, 2), hand.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn doubling_is_enforced() {
        let cfg = Example1Config {
            ns: vec![10, 30],
            ..Default::default()
        };
        assert!(run_example1(&cfg).is_err());
    }

    #[test]
    fn zero_problem_has_zero_error() {
        let cfg = Example2Config {
            alphas: vec![0.5],
            ns: vec![8, 16],
            problem: ProblemKind::Zero,
            ..Default::default()
        };
        let tables = run_example2(&cfg).unwrap();
        assert!(tables[0].rows.iter().all(|r| r.error == 0.0 && r.order.is_none()));
    }

    #[test]
    fn final_step_ratio_tends_to_two() {
        let last = |n: usize| {
            let mesh = TemporalMesh::graded(2.0f64, n, 3.0).unwrap();
            mesh.tau(n)
        };
        let r1 = last(10) / last(20);
        let r2 = last(160) / last(320);
        assert!((r2 - 2.0).abs() < (r1 - 2.0).abs());
        assert!((r2 - 2.0).abs() < 0.01);
        assert_relative_eq!(last(10), 2.0 * (1.0 - 0.9f64.powi(3)), max_relative = 1e-13);
    }

    #[test]
    fn table_outputs() {
        let table = ErrorTable {
            experiment: "example1".into(),
            alpha: 0.1,
            lambda: 1.0,
            delta: 1.5,
            r: 1.5,
            t_final: 2.0,
            epsilon: 1e-12,
            coupling: String::new(),
            rows: rows_with_orders(&[(80, 8e-5, 1.0 / 80.0), (160, 2e-5, 1.0 / 160.0)]),
        };
        let mut csv = Vec::new();
        table.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap(), "N,error,order\n80,8e-5,\n160,2e-5,2.0000\n");
        let mut jl = Vec::new();
        table.write_jsonl(&mut jl).unwrap();
        let text = String::from_utf8(jl).unwrap();
        let second: serde_json::Value = serde_json::from_str(text.lines().nth(1).unwrap()).unwrap();
        assert_eq!(second["N"], 160);
        assert_eq!(second["alpha"], 0.1);
        let md = markdown_table(&[table]);
        assert!(md.contains("| 160 | 2.0000e-5 | 2.0000 |"));
    }

    #[test]
    fn small_stability_run() {
        let cfg = StabilityConfig {
            n: 16,
            m: 8,
            trials: 3,
            ..Default::default()
        };
        let report = run_stability_suite(&cfg).unwrap();
        assert_eq!(report.trials.len(), 3);
        assert!(report.passes(1e-10), "worst {}", report.worst_ratio());
    }
}
