//! Crank-Nicolson marching for u_t + D^{α,λ} u = u_xx - u_x + f on [0, L]
//! with homogeneous Dirichlet data.
//!
//! The equation is collocated at t_{n+1/2}, the spatial operators are
//! averaged between levels n and n+1, and each step solves one tridiagonal
//! system for the interior values. How the history part of the fractional
//! derivative is produced is delegated to a [`HistoryOperator`], so the fast
//! marcher and the quadratic-cost reference marcher share everything else.

use std::io::{Read, Write};

use crate::derivative::{level_coefficients, DirectL1, HistoryState, TemperedParams};
use crate::error::{Error, Result};
use crate::mesh::{SpatialGrid, TemporalMesh};
use crate::oracles::ManufacturedCase;
use crate::real::Real;
use crate::soe::{build_soe, SoeApproximation};

/// Default SOE tolerance for production solves.
pub const DEFAULT_EPSILON: f64 = 1e-10;

type Initial<T> = Box<dyn Fn(T) -> T + Send + Sync>;
type Forcing<T> = Box<dyn Fn(T, T) -> T + Send + Sync>;

/// Problem data: φ, f, L, T, α, λ.
pub struct ProblemSpec<T> {
    pub domain_length: T,
    pub t_final: T,
    pub alpha: T,
    pub lambda: T,
    initial: Initial<T>,
    forcing: Forcing<T>,
}

impl<T: Real> std::fmt::Debug for ProblemSpec<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("domain_length", &self.domain_length)
            .field("t_final", &self.t_final)
            .field("alpha", &self.alpha)
            .field("lambda", &self.lambda)
            .finish_non_exhaustive()
    }
}

impl<T: Real> ProblemSpec<T> {
    pub fn new(
        domain_length: T,
        t_final: T,
        alpha: T,
        lambda: T,
        initial: impl Fn(T) -> T + Send + Sync + 'static,
        forcing: impl Fn(T, T) -> T + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(domain_length > T::zero()) || !domain_length.is_finite() {
            return Err(Error::invalid("domain_length", "must be positive and finite"));
        }
        if !(t_final > T::zero()) || !t_final.is_finite() {
            return Err(Error::invalid("t_final", "must be positive and finite"));
        }
        if !(alpha > T::zero() && alpha < T::one()) {
            return Err(Error::invalid("alpha", "require 0 < alpha < 1"));
        }
        if !(lambda >= T::zero()) || !lambda.is_finite() {
            return Err(Error::invalid("lambda", "require lambda >= 0"));
        }
        Ok(ProblemSpec {
            domain_length,
            t_final,
            alpha,
            lambda,
            initial: Box::new(initial),
            forcing: Box::new(forcing),
        })
    }

    /// φ ≡ 0, f ≡ 0.
    pub fn zero(domain_length: T, t_final: T, alpha: T, lambda: T) -> Result<Self> {
        Self::new(domain_length, t_final, alpha, lambda, |_| T::zero(), |_, _| T::zero())
    }

    /// The manufactured problem on [0, 1].
    pub fn manufactured(case: ManufacturedCase<T>, t_final: T) -> Result<Self> {
        Self::new(
            T::one(),
            t_final,
            case.alpha,
            case.lambda,
            move |x| case.initial(x),
            move |x, t| case.forcing(x, t),
        )
    }

    /// Same coefficients and forcing, different initial data.
    pub fn with_initial(self, initial: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        ProblemSpec {
            initial: Box::new(initial),
            ..self
        }
    }

    pub fn initial(&self, x: T) -> T {
        (self.initial)(x)
    }

    pub fn forcing(&self, x: T, t: T) -> T {
        (self.forcing)(x, t)
    }
}

/// One step's linear system for the M-1 interior unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem<T> {
    pub sub: Vec<T>,
    pub diag: Vec<T>,
    pub sup: Vec<T>,
    pub rhs: Vec<T>,
}

impl<T: Real> TridiagonalSystem<T> {
    pub fn new(sub: Vec<T>, diag: Vec<T>, sup: Vec<T>, rhs: Vec<T>) -> Result<Self> {
        let m = diag.len();
        if m == 0 {
            return Err(Error::invalid("diag", "system must have at least one row"));
        }
        let off = m - 1;
        for (what, got, expected) in [("sub", sub.len(), off), ("sup", sup.len(), off), ("rhs", rhs.len(), m)] {
            if got != expected {
                return Err(Error::DimensionMismatch { what, got, expected });
            }
        }
        Ok(TridiagonalSystem { sub, diag, sup, rhs })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// A x
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let m = self.len();
        (0..m)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v = v + self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < m {
                    v = v + self.sup[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// max |A x - rhs|
    pub fn residual(&self, x: &[T]) -> T {
        self.apply(x)
            .iter()
            .zip(&self.rhs)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }
}

/// Thomas elimination without pivoting.
pub fn thomas_solve<T: Real>(system: &TridiagonalSystem<T>) -> Result<Vec<T>> {
    let m = system.len();
    let scale = system.diag.iter().fold(T::zero(), |acc, d| acc.max(d.abs()));
    let guard = T::lit(1e-14) * scale;
    let mut c = vec![T::zero(); m];
    let mut d = vec![T::zero(); m];
    let mut pivot = system.diag[0];
    for i in 0..m {
        if i > 0 {
            pivot = system.diag[i] - system.sub[i - 1] * c[i - 1];
        }
        if !(pivot.abs() > guard) {
            return Err(Error::Breakdown {
                row: i,
                pivot: pivot.to_f64_lossy(),
            });
        }
        if i + 1 < m {
            c[i] = system.sup[i] / pivot;
        }
        let prev = if i > 0 { system.sub[i - 1] * d[i - 1] } else { T::zero() };
        d[i] = (system.rhs[i] - prev) / pivot;
    }
    for i in (0..m.saturating_sub(1)).rev() {
        d[i] = d[i] - c[i] * d[i + 1];
    }
    Ok(d)
}

/// (sub, diag, super) band values of the step n → n+1 and η.
pub fn band_values<T: Real>(params: &TemperedParams<'_, T>, h: T, n: usize) -> (T, T, T, T) {
    let eta = eta(params, n);
    let inv_h2 = (h * h).recip();
    let adv = (T::lit(4.0) * h).recip();
    let half = T::lit(0.5);
    (-half * inv_h2 - adv, eta + inv_h2, -half * inv_h2 + adv, eta)
}

/// η = 1/τ_{n+1} + 1/(2Γ(2-α)(τ_{n+1}/2)^α)
pub fn eta<T: Real>(params: &TemperedParams<'_, T>, n: usize) -> T {
    params.mesh().tau(n + 1).recip() + level_coefficients(params, n).next
}

/// λ_k = η + 1/h² + 2√((1/(4h) - 1/(2h²))(-1/(4h) - 1/(2h²))) cos(kπ/M), k = 1..M-1.
pub fn eigenvalue_check<T: Real>(eta: T, h: T, m: usize) -> Result<Vec<T>> {
    if !(h > T::zero()) || m < 2 {
        return Err(Error::invalid("grid", "need h > 0 and M >= 2"));
    }
    let inv_h2 = (h * h).recip();
    let adv = (T::lit(4.0) * h).recip();
    let half = T::lit(0.5);
    let product = (adv - half * inv_h2) * (-adv - half * inv_h2);
    if product < T::zero() {
        return Err(Error::Domain {
            value: h.to_f64_lossy(),
            lower: 0.0,
            upper: 2.0,
        });
    }
    let root = product.sqrt();
    let two = T::lit(2.0);
    let mf = T::from_count(m);
    Ok((1..m)
        .map(|k| eta + inv_h2 + two * root * (T::PI() * T::from_count(k) / mf).cos())
        .collect())
}

/// Supplies the part of the fractional derivative that does not involve U^{n+1}.
pub trait HistoryOperator<T: Real> {
    /// Writes, for every interior node, D U^{n+1/2} evaluated with U^{n+1} = 0.
    fn explicit_part(&mut self, params: &TemperedParams<'_, T>, n: usize, levels: &[Vec<T>], out: &mut [T]) -> Result<()>;

    /// Called once U^{n+1} is known, before the step to n+2 is assembled.
    fn commit(&mut self, params: &TemperedParams<'_, T>, n: usize, levels: &[Vec<T>]) -> Result<()>;
}

/// History from the SOE recurrence: O(N_exp) per node and step.
#[derive(Debug)]
pub struct FastHistory<'s, T> {
    state: HistoryState<'s, T>,
    scratch_prev: Vec<T>,
    scratch_curr: Vec<T>,
}

impl<'s, T: Real> FastHistory<'s, T> {
    pub fn new(soe: &'s SoeApproximation<T>, interior: usize) -> Self {
        FastHistory {
            state: HistoryState::new(soe, interior),
            scratch_prev: Vec::with_capacity(interior),
            scratch_curr: Vec::with_capacity(interior),
        }
    }

    pub fn state(&self) -> &HistoryState<'s, T> {
        &self.state
    }
}

impl<T: Real> HistoryOperator<T> for FastHistory<'_, T> {
    fn explicit_part(&mut self, params: &TemperedParams<'_, T>, n: usize, levels: &[Vec<T>], out: &mut [T]) -> Result<()> {
        if self.state.level() != n {
            return Err(Error::LevelOrder {
                current: self.state.level(),
                expected: n,
            });
        }
        let c = level_coefficients(params, n);
        let (u0, un) = (&levels[0], &levels[n]);
        for (k, o) in out.iter_mut().enumerate() {
            let i = k + 1;
            *o = c.current * un[i];
            if n > 0 {
                *o = *o + c.initial * u0[i] - c.history * self.state.weighted_sum(k);
            }
        }
        Ok(())
    }

    fn commit(&mut self, params: &TemperedParams<'_, T>, n: usize, levels: &[Vec<T>]) -> Result<()> {
        // the last level has no following step to reference
        if n + 1 >= params.mesh().n_steps() {
            return Ok(());
        }
        let m = levels[n].len() - 1;
        self.scratch_prev.clear();
        self.scratch_prev.extend_from_slice(&levels[n][1..m]);
        self.scratch_curr.clear();
        self.scratch_curr.extend_from_slice(&levels[n + 1][1..m]);
        self.state.advance(params, n + 1, &self.scratch_prev, &self.scratch_curr)
    }
}

/// History from the direct L1 sum: O(n) per node and step.
#[derive(Debug)]
pub struct DirectHistory<T> {
    op: DirectL1<T>,
}

impl<T: Real> Default for DirectHistory<T> {
    fn default() -> Self {
        DirectHistory { op: DirectL1::default() }
    }
}

impl<T: Real> DirectHistory<T> {
    pub fn new() -> Self {
        Self::default()
    }
}

impl<T: Real> HistoryOperator<T> for DirectHistory<T> {
    fn explicit_part(&mut self, params: &TemperedParams<'_, T>, n: usize, levels: &[Vec<T>], out: &mut [T]) -> Result<()> {
        let w = self.op.weights(params, n);
        for (k, o) in out.iter_mut().enumerate() {
            let i = k + 1;
            *o = (0..=n).map(|l| w[l] * levels[l][i]).sum();
        }
        Ok(())
    }

    fn commit(&mut self, _: &TemperedParams<'_, T>, _: usize, _: &[Vec<T>]) -> Result<()> {
        Ok(())
    }
}

/// Step-by-step driver; [`solve`] and friends run it to completion.
pub struct Marcher<'a, T, H> {
    spec: &'a ProblemSpec<T>,
    params: TemperedParams<'a, T>,
    grid: &'a SpatialGrid<T>,
    history: H,
    levels: Vec<Vec<T>>,
    explicit: Vec<T>,
}

impl<'a, T: Real, H: HistoryOperator<T>> Marcher<'a, T, H> {
    pub fn new(spec: &'a ProblemSpec<T>, mesh: &'a TemporalMesh<T>, grid: &'a SpatialGrid<T>, history: H) -> Result<Self> {
        if mesh.t_final() != spec.t_final {
            return Err(Error::invalid("mesh", "final time differs from the problem's"));
        }
        if grid.length() != spec.domain_length {
            return Err(Error::invalid("grid", "length differs from the problem's domain"));
        }
        if !(grid.spacing() < T::lit(2.0)) {
            return Err(Error::invalid("grid", "spacing h must be below 2"));
        }
        let params = TemperedParams::new(spec.alpha, spec.lambda, mesh)?;
        let violations = mesh.check_step_condition(spec.alpha).iter().filter(|&&ok| !ok).count();
        if violations > 0 {
            log::warn!("{violations} step(s) violate (tau/2)^(2-2 alpha) < 1/3; continuing");
        }
        let m = grid.n_cells();
        let mut first: Vec<T> = grid.nodes().iter().map(|&x| spec.initial(x)).collect();
        first[0] = T::zero();
        first[m] = T::zero();
        let mut levels = Vec::with_capacity(mesh.n_steps() + 1);
        levels.push(first);
        Ok(Marcher {
            spec,
            params,
            grid,
            history,
            levels,
            explicit: vec![T::zero(); m - 1],
        })
    }

    pub fn params(&self) -> &TemperedParams<'a, T> {
        &self.params
    }

    /// Index n of the newest computed level U^n.
    pub fn level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn levels(&self) -> &[Vec<T>] {
        &self.levels
    }

    pub fn history(&self) -> &H {
        &self.history
    }

    pub fn is_finished(&self) -> bool {
        self.level() == self.params.mesh().n_steps()
    }

    /// Assembles the system for U^{n+1}, n = [`Marcher::level`].
    pub fn assemble(&mut self) -> Result<TridiagonalSystem<T>> {
        let n = self.level();
        if self.is_finished() {
            return Err(Error::invalid("level", "all steps already taken"));
        }
        self.history.explicit_part(&self.params, n, &self.levels, &mut self.explicit)?;
        assemble_step(self.spec, &self.params, self.grid, &self.levels[n], &self.explicit, n)
    }

    /// Solves for U^{n+1}, advances the history, and returns the new level.
    pub fn step(&mut self) -> Result<&[T]> {
        let n = self.level();
        let system = self.assemble()?;
        let interior = thomas_solve(&system)?;
        let m = self.grid.n_cells();
        let mut next = vec![T::zero(); m + 1];
        next[1..m].copy_from_slice(&interior);
        self.levels.push(next);
        self.history.commit(&self.params, n, &self.levels)?;
        Ok(&self.levels[n + 1])
    }

    pub fn run(mut self) -> Result<Solution<T>> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(Solution {
            mesh: self.params.mesh().clone(),
            grid: self.grid.clone(),
            levels: self.levels,
        })
    }
}

/// The boxed system for U^{n+1}, given the explicit part of the fractional
/// derivative at each interior node.
pub fn assemble_step<T: Real>(
    spec: &ProblemSpec<T>,
    params: &TemperedParams<'_, T>,
    grid: &SpatialGrid<T>,
    current: &[T],
    explicit: &[T],
    n: usize,
) -> Result<TridiagonalSystem<T>> {
    let m = grid.n_cells();
    if current.len() != m + 1 {
        return Err(Error::DimensionMismatch {
            what: "current level",
            got: current.len(),
            expected: m + 1,
        });
    }
    if explicit.len() != m - 1 {
        return Err(Error::DimensionMismatch {
            what: "history terms",
            got: explicit.len(),
            expected: m - 1,
        });
    }
    let h = grid.spacing();
    let (sub, diag, sup, _) = band_values(params, h, n);
    let tau = params.mesh().tau(n + 1);
    let tm = params.mesh().half_point(n);
    let inv_h2 = (h * h).recip();
    let half = T::lit(0.5);
    let quarter_h = (T::lit(4.0) * h).recip();
    let rhs = (1..m)
        .map(|i| {
            let (ul, uc, ur) = (current[i - 1], current[i], current[i + 1]);
            spec.forcing(grid.nodes()[i], tm) + uc / tau - explicit[i - 1] + half * (ur - uc - uc + ul) * inv_h2
                - (ur - ul) * quarter_h
        })
        .collect();
    TridiagonalSystem::new(vec![sub; m - 2], vec![diag; m - 1], vec![sup; m - 2], rhs)
}

/// Fast solve with an SOE of tolerance `epsilon` built for this mesh.
pub fn solve<T: Real>(spec: &ProblemSpec<T>, mesh: &TemporalMesh<T>, grid: &SpatialGrid<T>, epsilon: T) -> Result<Solution<T>> {
    let soe = build_soe(spec.alpha, epsilon, mesh.kernel_window_start(), mesh.t_final())?;
    solve_with_soe(spec, mesh, grid, &soe)
}

/// Fast solve with a caller-supplied SOE covering the mesh's kernel window.
pub fn solve_with_soe<T: Real>(
    spec: &ProblemSpec<T>,
    mesh: &TemporalMesh<T>,
    grid: &SpatialGrid<T>,
    soe: &SoeApproximation<T>,
) -> Result<Solution<T>> {
    TemperedParams::new(spec.alpha, spec.lambda, mesh)?.check_window(soe)?;
    let history = FastHistory::new(soe, grid.n_cells() - 1);
    Marcher::new(spec, mesh, grid, history)?.run()
}

/// Reference solve with the direct L1 history; O(N²) in time.
pub fn solve_reference<T: Real>(spec: &ProblemSpec<T>, mesh: &TemporalMesh<T>, grid: &SpatialGrid<T>) -> Result<Solution<T>> {
    Marcher::new(spec, mesh, grid, DirectHistory::new())?.run()
}

/// Trajectory U_i^n on the mesh and grid.
#[derive(Debug, Clone)]
pub struct Solution<T> {
    pub mesh: TemporalMesh<T>,
    pub grid: SpatialGrid<T>,
    /// levels[n][i] = U_i^n
    pub levels: Vec<Vec<T>>,
}

impl<T: Real> Solution<T> {
    pub fn level(&self, n: usize) -> &[T] {
        &self.levels[n]
    }

    pub fn value(&self, i: usize, n: usize) -> T {
        self.levels[n][i]
    }

    /// Rows `x,t,u`, time-major.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,t,u")?;
        for (n, level) in self.levels.iter().enumerate() {
            let t = self.mesh.node(n);
            for (x, u) in self.grid.nodes().iter().zip(level) {
                writeln!(out, "{},{},{}", x.to_decimal(), t.to_decimal(), u.to_decimal())?;
            }
        }
        Ok(())
    }

    /// Two little-endian u64 dimensions (M+1, N+1), then U as f64 in
    /// row-major order with one row per spatial node.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        let rows = self.grid.n_cells() + 1;
        let cols = self.levels.len();
        out.write_all(&(rows as u64).to_le_bytes())?;
        out.write_all(&(cols as u64).to_le_bytes())?;
        for i in 0..rows {
            for level in &self.levels {
                out.write_all(&level[i].to_f64_lossy().to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// Reads the matrix written by [`Solution::write_binary`]: (rows, cols, row-major data).
pub fn read_binary_matrix<R: Read>(mut input: R) -> Result<(usize, usize, Vec<f64>)> {
    let mut word = [0u8; 8];
    input.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word) as usize;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        input.read_exact(&mut word)?;
        data.push(f64::from_le_bytes(word));
    }
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Parse {
            line: 0,
            reason: format!("{} trailing bytes after {rows}x{cols} matrix", rest.len()),
        });
    }
    Ok((rows, cols, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivative::{advance_history, fast_derivative};
    use crate::special::gamma;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector, SymmetricEigen};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn band_values_for_reference_configuration() {
        // τ_1 = 0.1 with h = 0.25
        let mesh = TemporalMesh::graded(0.2f64, 2, 1.0).unwrap();
        let params = TemperedParams::new(0.5, 1.0, &mesh).unwrap();
        let (sub, diag, sup, _) = band_values(&params, 0.25, 0);
        let g15 = std::f64::consts::PI.sqrt() / 2.0;
        assert_relative_eq!(diag, 10.0 + 1.0 / (2.0 * g15 * 0.05f64.sqrt()) + 16.0, max_relative = 1e-14);
        assert_relative_eq!(sub, -9.0, max_relative = 1e-15);
        assert_relative_eq!(sup, -7.0, max_relative = 1e-15);
        assert_relative_eq!(gamma(1.5f64), g15, max_relative = 1e-15);
    }

    #[test]
    fn thomas_small_systems() {
        let id = TridiagonalSystem::new(vec![0.0; 3], vec![1.0; 4], vec![0.0; 3], vec![1.0, -2.0, 3.0, 4.5]).unwrap();
        assert_eq!(thomas_solve(&id).unwrap(), vec![1.0, -2.0, 3.0, 4.5]);
        let two = TridiagonalSystem::new(vec![1.0], vec![2.0, 2.0], vec![1.0], vec![3.0, 3.0]).unwrap();
        let x = thomas_solve(&two).unwrap();
        assert_relative_eq!(x[0], 1.0, max_relative = 1e-15);
        assert_relative_eq!(x[1], 1.0, max_relative = 1e-15);
        let one = TridiagonalSystem::new(vec![], vec![4.0], vec![], vec![2.0]).unwrap();
        assert_eq!(thomas_solve(&one).unwrap(), vec![0.5]);
        assert!(TridiagonalSystem::new(vec![1.0], vec![1.0; 3], vec![1.0; 2], vec![0.0; 3]).is_err());
    }

    #[test]
    fn thomas_reports_breakdown() {
        let sys = TridiagonalSystem::new(vec![1.0], vec![1.0, 1.0], vec![1.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(thomas_solve(&sys), Err(Error::Breakdown { row: 1, .. })));
    }

    #[test]
    fn thomas_matches_dense_elimination() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = 50;
        let sub: Vec<f64> = (0..m - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sup: Vec<f64> = (0..m - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let diag: Vec<f64> = (0..m).map(|_| rng.gen_range(2.5..4.0)).collect();
        let rhs: Vec<f64> = (0..m).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let sys = TridiagonalSystem::new(sub.clone(), diag.clone(), sup.clone(), rhs.clone()).unwrap();
        let x = thomas_solve(&sys).unwrap();
        let mut a = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            a[(i, i)] = diag[i];
            if i + 1 < m {
                a[(i + 1, i)] = sub[i];
                a[(i, i + 1)] = sup[i];
            }
        }
        let dense = a.lu().solve(&DVector::from_vec(rhs)).unwrap();
        for i in 0..m {
            assert!((x[i] - dense[i]).abs() <= 1e-11);
        }
        assert!(sys.residual(&x) <= 1e-12 * (1.0 + 5.0));
    }

    #[test]
    fn eigenvalues_match_dense_matrix() {
        let (eta, h, m) = (7.5f64, 0.125, 8);
        let lams = eigenvalue_check(eta, h, m).unwrap();
        let inv_h2 = 1.0 / (h * h);
        let (sub, diag, sup) = (-0.5 * inv_h2 - 0.25 / h, eta + inv_h2, -0.5 * inv_h2 + 0.25 / h);
        // similarity-symmetrized tridiagonal: off-diagonal √(sub·sup)
        let off = (sub * sup).sqrt();
        let mut a = DMatrix::<f64>::zeros(m - 1, m - 1);
        for i in 0..m - 1 {
            a[(i, i)] = diag;
            if i + 1 < m - 1 {
                a[(i, i + 1)] = -off;
                a[(i + 1, i)] = -off;
            }
        }
        let mut dense: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
        dense.sort_by(f64::total_cmp);
        let mut ours = lams.clone();
        ours.sort_by(f64::total_cmp);
        for (a, b) in ours.iter().zip(&dense) {
            assert!((a - b).abs() <= 1e-10 * b.abs());
        }
        // cos(kπ/M) = 0 at k = M/2
        assert_relative_eq!(lams[3], eta + inv_h2, max_relative = 1e-14);
    }

    #[test]
    fn eigenvalues_bounded_below_by_eta() {
        let lams = eigenvalue_check(10.0f64, 0.01, 100).unwrap();
        assert!(lams.iter().all(|&l| l >= 10.0));
        assert!(matches!(eigenvalue_check(1.0f64, 2.5, 4), Err(Error::Domain { .. })));
    }

    #[test]
    fn zero_problem_stays_zero() {
        let spec = ProblemSpec::zero(1.0f64, 2.0, 0.5, 1.0).unwrap();
        let mesh = TemporalMesh::graded(2.0, 16, 3.0).unwrap();
        let grid = SpatialGrid::uniform(1.0, 8).unwrap();
        let sol = solve(&spec, &mesh, &grid, 1e-10).unwrap();
        assert!(sol.levels.iter().flatten().all(|&u| u == 0.0));
        let reference = solve_reference(&spec, &mesh, &grid).unwrap();
        assert!(reference.levels.iter().flatten().all(|&u| u == 0.0));

        let soe = build_soe(0.5, 1e-10, mesh.kernel_window_start(), 2.0).unwrap();
        let mut marcher = Marcher::new(&spec, &mesh, &grid, FastHistory::new(&soe, 7)).unwrap();
        let sys = marcher.assemble().unwrap();
        assert!(sys.rhs.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn rejects_inconsistent_inputs() {
        let spec = ProblemSpec::zero(1.0f64, 2.0, 0.5, 1.0).unwrap();
        let mesh = TemporalMesh::graded(1.0, 8, 1.0).unwrap();
        let grid = SpatialGrid::uniform(1.0, 8).unwrap();
        assert!(solve(&spec, &mesh, &grid, 1e-8).is_err());
        let spec = ProblemSpec::zero(10.0f64, 1.0, 0.5, 1.0).unwrap();
        let coarse = SpatialGrid::uniform(10.0, 5).unwrap();
        assert!(matches!(solve(&spec, &mesh, &coarse, 1e-8), Err(Error::InvalidParameter { .. })));
        assert!(ProblemSpec::zero(1.0f64, 1.0, 1.2, 1.0).is_err());
        let grid = SpatialGrid::uniform(1.0, 4).unwrap();
        let params = TemperedParams::new(0.5, 1.0, &mesh).unwrap();
        assert!(matches!(
            assemble_step(&ProblemSpec::zero(1.0, 1.0, 0.5, 1.0).unwrap(), &params, &grid, &[0.0; 4], &[0.0; 3], 0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn steps_satisfy_system_and_scheme() {
        let case = ManufacturedCase::new(0.4, 1.0, 1.8).unwrap();
        let spec = ProblemSpec::manufactured(case, 2.0).unwrap();
        let mesh = TemporalMesh::graded(2.0, 20, 3.0).unwrap();
        let grid = SpatialGrid::uniform(1.0, 16).unwrap();
        let soe = build_soe(0.4, 1e-10, mesh.kernel_window_start(), 2.0).unwrap();
        let mut marcher = Marcher::new(&spec, &mesh, &grid, FastHistory::new(&soe, 15)).unwrap();
        let params = TemperedParams::new(0.4, 1.0, &mesh).unwrap();
        // independent single-series histories per interior node
        let mut states: Vec<HistoryState<'_, f64>> = (0..15).map(|_| HistoryState::new(&soe, 1)).collect();
        let h = grid.spacing();
        for n in 0..20 {
            let sys = marcher.assemble().unwrap();
            let x = thomas_solve(&sys).unwrap();
            let rhs_norm = sys.rhs.iter().fold(0.0f64, |a, r| a.max(r.abs()));
            assert!(sys.residual(&x) <= 1e-11 * (1.0 + rhs_norm));
            marcher.step().unwrap();
            let lv = marcher.levels();
            let (un, un1) = (&lv[n], &lv[n + 1]);
            let tau = mesh.tau(n + 1);
            for i in 1..16 {
                let d = fast_derivative(&states[i - 1], &params, lv[0][i], un[i], un1[i], n).unwrap();
                let avg = |j: usize| 0.5 * (un[j] + un1[j]);
                let lap = |j: usize| (avg(j + 1) - 2.0 * avg(j) + avg(j - 1)) / (h * h);
                let grad = |j: usize| (avg(j + 1) - avg(j - 1)) / (2.0 * h);
                let lhs = (un1[i] - un[i]) / tau + d - lap(i) + grad(i);
                let f = case.forcing(grid.nodes()[i], mesh.half_point(n));
                assert!((lhs - f).abs() <= 1e-10 * (1.0 + f.abs()), "n={n} i={i}: {lhs} vs {f}");
            }
            if n + 1 < 20 {
                for i in 1..16 {
                    advance_history(&mut states[i - 1], &params, un[i], un1[i]).unwrap();
                }
            }
        }
    }

    #[test]
    fn fast_and_reference_trajectories_agree() {
        let case = ManufacturedCase::new(0.3, 1.0, 1.8).unwrap();
        let spec = ProblemSpec::manufactured(case, 2.0).unwrap();
        let mesh = TemporalMesh::graded(2.0, 32, 3.0).unwrap();
        let grid = SpatialGrid::uniform(1.0, 16).unwrap();
        let eps = 1e-10;
        let fast = solve(&spec, &mesh, &grid, eps).unwrap();
        let reference = solve_reference(&spec, &mesh, &grid).unwrap();
        let diff = fast
            .levels
            .iter()
            .flatten()
            .zip(reference.levels.iter().flatten())
            .fold(0.0f64, |a, (x, y): (&f64, &f64)| a.max((x - y).abs()));
        assert!(diff <= 10.0 * eps * 2f64.exp(), "diff {diff}");
    }

    #[test]
    fn exports_round_trip() {
        let case = ManufacturedCase::new(0.5, 1.0, 1.8).unwrap();
        let spec = ProblemSpec::manufactured(case, 2.0).unwrap();
        let mesh = TemporalMesh::graded(2.0, 4, 3.0).unwrap();
        let grid = SpatialGrid::uniform(1.0, 4).unwrap();
        let sol = solve(&spec, &mesh, &grid, 1e-8).unwrap();
        let mut buf = Vec::new();
        sol.write_binary(&mut buf).unwrap();
        let (rows, cols, data) = read_binary_matrix(&buf[..]).unwrap();
        assert_eq!((rows, cols), (5, 5));
        assert_eq!(data[2 * 5 + 3], sol.value(2, 3));
        let mut csv = Vec::new();
        sol.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,t,u"));
        let row: Vec<f64> = lines.nth(5 + 2).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row, vec![0.5, mesh.node(1), sol.value(2, 1)]);
    }
}
