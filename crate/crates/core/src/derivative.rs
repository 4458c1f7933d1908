//! Caputo-tempered derivative at the half-points t_{n+1/2}.
//!
//! Two evaluators share the same local term on [t_n, t_{n+1/2}]:
//!
//! * the fast operator, which integrates the history part by parts and
//!   replaces the kernel (t-s)^{-1-α} by its exponential sum, so the history
//!   collapses to N_exp running integrals updated once per step;
//! * the direct L1 operator, which integrates (e^{λs} L u)' against the exact
//!   kernel on every subinterval. It costs O(n) per level and serves as the
//!   reference for the fast path.
//!
//! Both are linear in the samples u^0, ..., u^{n+1}, and the solver only ever
//! needs them in that form, so most routines here return coefficients.

use crate::error::{Error, Result};
use crate::mesh::TemporalMesh;
use crate::quadrature::GaussRule;
use crate::real::Real;
use crate::soe::SoeApproximation;
use crate::special::gamma;

/// Order of the Gauss-Legendre rule used per subinterval by the direct operator.
pub const DIRECT_RULE_ORDER: usize = 32;

/// Below this argument the interpolation weights switch to their power series.
const SERIES_SWITCH: f64 = 1.0;

/// α, λ and the mesh, with the two gamma values the operators need.
#[derive(Debug, Clone, Copy)]
pub struct TemperedParams<'m, T> {
    alpha: T,
    lambda: T,
    mesh: &'m TemporalMesh<T>,
    gamma_1ma: T,
    gamma_2ma: T,
}

impl<'m, T: Real> TemperedParams<'m, T> {
    pub fn new(alpha: T, lambda: T, mesh: &'m TemporalMesh<T>) -> Result<Self> {
        if !(alpha > T::zero() && alpha < T::one()) {
            return Err(Error::invalid("alpha", "require 0 < alpha < 1"));
        }
        if !(lambda >= T::zero()) || !lambda.is_finite() {
            return Err(Error::invalid("lambda", "require lambda >= 0"));
        }
        Ok(TemperedParams {
            alpha,
            lambda,
            mesh,
            gamma_1ma: gamma(T::one() - alpha),
            gamma_2ma: gamma(T::lit(2.0) - alpha),
        })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn mesh(&self) -> &'m TemporalMesh<T> {
        self.mesh
    }

    /// Γ(1-α)
    pub fn gamma_one_minus_alpha(&self) -> T {
        self.gamma_1ma
    }

    /// Γ(2-α)
    pub fn gamma_two_minus_alpha(&self) -> T {
        self.gamma_2ma
    }

    /// Checks that `soe` covers every kernel argument the history part meets.
    pub fn check_window(&self, soe: &SoeApproximation<T>) -> Result<()> {
        let n = self.mesh.n_steps();
        let lo = self.mesh.kernel_window_start();
        let hi = self.mesh.half_point(n - 1);
        if soe.delta_cut() > lo || soe.t_max() < hi {
            return Err(Error::invalid(
                "soe",
                format!(
                    "window [{:e}, {:e}] does not cover [{:e}, {:e}]",
                    soe.delta_cut().to_f64_lossy(),
                    soe.t_max().to_f64_lossy(),
                    lo.to_f64_lossy(),
                    hi.to_f64_lossy()
                ),
            ));
        }
        if soe.alpha() != self.alpha {
            return Err(Error::invalid("soe", "built for a different alpha"));
        }
        Ok(())
    }
}

/// λ¹, λ² for one exponent and the a, b history coefficients for one (j, n).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCoefficients<T> {
    pub lam1: T,
    pub lam2: T,
    pub a: T,
    pub b: T,
}

/// (e^{-y} - 1 + y)/y² and (1 - e^{-y} - y e^{-y})/y², free of cancellation.
fn phi_pair<T: Real>(y: T) -> (T, T) {
    if y >= T::lit(SERIES_SWITCH) {
        let e = (-y).exp();
        let y2 = y * y;
        return ((e - T::one() + y) / y2, (T::one() - e - y * e) / y2);
    }
    // φ1 = Σ (-y)^k / (k+2)!,  φ2 = Σ (-y)^k (k+1) / (k+2)!
    let mut term = T::lit(0.5);
    let mut p1 = T::zero();
    let mut p2 = T::zero();
    let mut k = 0usize;
    loop {
        p1 = p1 + term;
        p2 = p2 + term * T::from_count(k + 1);
        let next = -term * y / T::from_count(k + 3);
        if next.abs() * T::from_count(k + 2) <= T::epsilon() * p2.abs() {
            break;
        }
        term = next;
        k += 1;
    }
    (p1, p2)
}

/// λ¹ and λ² for decay rate x = λ + s over a step of length `tau_n`,
/// referenced to the midpoint of the following step `tau_next`.
pub fn interp_weights_raw<T: Real>(x: T, tau_n: T, tau_next: T) -> (T, T) {
    let shift = (-x * tau_next * T::lit(0.5)).exp() * tau_n;
    let (p1, p2) = phi_pair(x * tau_n);
    (shift * p1, shift * p2)
}

/// λ¹_{i,n} and λ²_{i,n} for the exponent `s`; 1 ≤ n ≤ N-1.
pub fn interp_weights<T: Real>(params: &TemperedParams<'_, T>, s: T, n: usize) -> Result<(T, T)> {
    let mesh = params.mesh;
    if n == 0 || n >= mesh.n_steps() {
        return Err(Error::invalid("level", format!("need 1 <= n <= N-1, got {n}")));
    }
    let x = params.lambda + s;
    if !(x > T::zero()) {
        return Err(Error::invalid("exponent", "lambda + s must be positive"));
    }
    Ok(interp_weights_raw(x, mesh.tau(n), mesh.tau(n + 1)))
}

/// a_{j,n} and b_{j,n} for 0 ≤ j ≤ n-1, 1 ≤ n ≤ N-1.
pub fn history_coeffs<T: Real>(
    params: &TemperedParams<'_, T>,
    soe: &SoeApproximation<T>,
    j: usize,
    n: usize,
) -> Result<(T, T)> {
    let mesh = params.mesh;
    if n == 0 || n >= mesh.n_steps() || j >= n {
        return Err(Error::invalid("level", format!("need 0 <= j < n <= N-1, got j={j}, n={n}")));
    }
    let lag = mesh.half_point(n) - mesh.half_point(n - j);
    let m = n - j;
    let (mut a, mut b) = (T::zero(), T::zero());
    for (&s, &w) in soe.exponents().iter().zip(soe.weights()) {
        let x = params.lambda + s;
        let (l1, l2) = interp_weights_raw(x, mesh.tau(m), mesh.tau(m + 1));
        let decay = (-x * lag).exp();
        a = a + w * decay * l1;
        b = b + w * decay * l2;
    }
    Ok((params.alpha * a, params.alpha * b))
}

/// λ¹, λ² of exponent `i` at level n-j together with a_{j,n}, b_{j,n}.
pub fn step_coefficients<T: Real>(
    params: &TemperedParams<'_, T>,
    soe: &SoeApproximation<T>,
    i: usize,
    j: usize,
    n: usize,
) -> Result<StepCoefficients<T>> {
    let (a, b) = history_coeffs(params, soe, j, n)?;
    let (lam1, lam2) = interp_weights(params, soe.exponents()[i], n - j)?;
    Ok(StepCoefficients { lam1, lam2, a, b })
}

/// The fast operator at level n as a linear form:
///
/// ```text
/// D u^{n+1/2} = next u^{n+1} + current u^n + initial u^0 - history Σ ω_i H_i
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelCoefficients<T> {
    pub next: T,
    pub current: T,
    pub initial: T,
    pub history: T,
}

/// Coefficients of the fast operator at level n (0 ≤ n ≤ N-1).
///
/// At n = 0 the history is empty and the two boundary terms from the
/// integration by parts cancel, so the same expression covers every level.
pub fn level_coefficients<T: Real>(params: &TemperedParams<'_, T>, n: usize) -> LevelCoefficients<T> {
    let mesh = params.mesh;
    let half_tau = mesh.tau(n + 1) * T::lit(0.5);
    let pow = half_tau.powf(params.alpha);
    let next = (T::lit(2.0) * params.gamma_2ma * pow).recip();
    let damp = (-params.lambda * half_tau).exp();
    if n == 0 {
        let local = damp / (params.gamma_2ma * pow);
        return LevelCoefficients {
            next,
            current: next - local,
            initial: T::zero(),
            history: T::zero(),
        };
    }
    let tm = mesh.half_point(n);
    LevelCoefficients {
        next,
        current: next - params.alpha * damp / (params.gamma_2ma * pow),
        initial: -(-params.lambda * tm).exp() / (tm.powf(params.alpha) * params.gamma_1ma),
        history: params.alpha / params.gamma_1ma,
    }
}

/// Running history integrals H_i for one or more independent series.
///
/// At level n the accumulators hold ∫_0^{t_n} e^{-(λ+s_i)(t_{n+1/2}-s)} L u(s) ds,
/// with L u the piecewise-linear interpolant.
#[derive(Debug, Clone)]
pub struct HistoryState<'s, T> {
    soe: &'s SoeApproximation<T>,
    series: usize,
    /// series-major: values[k * n_exp + i]
    values: Vec<T>,
    level: usize,
    decay: Vec<T>,
    lam1: Vec<T>,
    lam2: Vec<T>,
}

impl<'s, T: Real> HistoryState<'s, T> {
    /// Empty history (level 0) for `series` independent functions.
    pub fn new(soe: &'s SoeApproximation<T>, series: usize) -> Self {
        let n_exp = soe.n_exp();
        HistoryState {
            soe,
            series,
            values: vec![T::zero(); series * n_exp],
            level: 0,
            decay: vec![T::zero(); n_exp],
            lam1: vec![T::zero(); n_exp],
            lam2: vec![T::zero(); n_exp],
        }
    }

    pub fn soe(&self) -> &'s SoeApproximation<T> {
        self.soe
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn series_count(&self) -> usize {
        self.series
    }

    /// H_1..H_{N_exp} of series `k`.
    pub fn accumulators(&self, k: usize) -> &[T] {
        let n_exp = self.soe.n_exp();
        &self.values[k * n_exp..(k + 1) * n_exp]
    }

    /// Σ_i ω_i H_i of series `k`.
    pub fn weighted_sum(&self, k: usize) -> T {
        self.accumulators(k)
            .iter()
            .zip(self.soe.weights())
            .map(|(&h, &w)| w * h)
            .sum()
    }

    /// Moves every series from level n-1 to level n = `target`, consuming
    /// u(t_{n-1}) and u(t_n).
    pub fn advance(
        &mut self,
        params: &TemperedParams<'_, T>,
        target: usize,
        u_prev: &[T],
        u_curr: &[T],
    ) -> Result<()> {
        if target != self.level + 1 {
            return Err(Error::LevelOrder {
                current: self.level,
                expected: target.saturating_sub(1),
            });
        }
        let mesh = params.mesh;
        if target >= mesh.n_steps() {
            return Err(Error::invalid("level", format!("cannot advance past level N-1, got {target}")));
        }
        for (what, got) in [("u_prev", u_prev.len()), ("u_curr", u_curr.len())] {
            if got != self.series {
                return Err(Error::DimensionMismatch {
                    what,
                    got,
                    expected: self.series,
                });
            }
        }
        let tau_n = mesh.tau(target);
        let tau_next = mesh.tau(target + 1);
        let span = (tau_n + tau_next) * T::lit(0.5);
        for (i, &s) in self.soe.exponents().iter().enumerate() {
            let x = params.lambda + s;
            self.decay[i] = (-x * span).exp();
            let (l1, l2) = interp_weights_raw(x, tau_n, tau_next);
            self.lam1[i] = l1;
            self.lam2[i] = l2;
        }
        let n_exp = self.soe.n_exp();
        if n_exp > 0 {
            for (k, chunk) in self.values.chunks_mut(n_exp).enumerate() {
                let (up, uc) = (u_prev[k], u_curr[k]);
                for (i, h) in chunk.iter_mut().enumerate() {
                    *h = self.decay[i] * *h + self.lam1[i] * uc + self.lam2[i] * up;
                }
            }
        }
        self.level = target;
        Ok(())
    }
}

/// Single-series form of [`HistoryState::advance`].
pub fn advance_history<T: Real>(
    state: &mut HistoryState<'_, T>,
    params: &TemperedParams<'_, T>,
    u_prev: T,
    u_curr: T,
) -> Result<()> {
    let target = state.level + 1;
    state.advance(params, target, &[u_prev], &[u_curr])
}

/// Fast approximation of the tempered derivative of series 0 at t_{n+1/2}.
pub fn fast_derivative<T: Real>(
    state: &HistoryState<'_, T>,
    params: &TemperedParams<'_, T>,
    u_0: T,
    u_n: T,
    u_np1: T,
    n: usize,
) -> Result<T> {
    if state.level != n {
        return Err(Error::LevelOrder {
            current: state.level,
            expected: n,
        });
    }
    let c = level_coefficients(params, n);
    let mut d = c.next * u_np1 + c.current * u_n;
    if n > 0 {
        d = d + c.initial * u_0 - c.history * state.weighted_sum(0);
    }
    Ok(d)
}

/// Fast derivative at every half-point for samples u^0..u^N on the mesh.
pub fn fast_derivative_series<T: Real>(
    params: &TemperedParams<'_, T>,
    soe: &SoeApproximation<T>,
    u: &[T],
) -> Result<Vec<T>> {
    let n_steps = params.mesh.n_steps();
    if u.len() != n_steps + 1 {
        return Err(Error::DimensionMismatch {
            what: "samples",
            got: u.len(),
            expected: n_steps + 1,
        });
    }
    params.check_window(soe)?;
    let mut state = HistoryState::new(soe, 1);
    let mut out = Vec::with_capacity(n_steps);
    for n in 0..n_steps {
        if n > 0 {
            advance_history(&mut state, params, u[n - 1], u[n])?;
        }
        out.push(fast_derivative(&state, params, u[0], u[n], u[n + 1], n)?);
    }
    Ok(out)
}

/// Coefficient form of the direct L1 operator, reusable across levels.
#[derive(Debug, Clone)]
pub struct DirectL1<T> {
    rule: GaussRule<T>,
}

impl<T: Real> Default for DirectL1<T> {
    fn default() -> Self {
        DirectL1 {
            rule: GaussRule::legendre(DIRECT_RULE_ORDER),
        }
    }
}

impl<T: Real> DirectL1<T> {
    /// Weights w_0..w_{n+1} with D u^{n+1/2} = Σ_k w_k u^k.
    pub fn weights(&self, params: &TemperedParams<'_, T>, n: usize) -> Vec<T> {
        let mesh = params.mesh;
        let alpha = params.alpha;
        let lambda = params.lambda;
        let tm = mesh.half_point(n);
        let mut w = vec![T::zero(); n + 2];
        for k in 0..n {
            let (lo, hi) = (mesh.node(k), mesh.node(k + 1));
            let tau = hi - lo;
            // (e^{λs} L u)' = e^{λs} (λ L u + (u_{k+1} - u_k)/τ)
            let (mut p, mut q) = (T::zero(), T::zero());
            for (s, wt) in self.rule.mapped(lo, hi) {
                let r = tm - s;
                let kern = wt * r.powf(-alpha) * (-lambda * r).exp();
                p = p + kern * (lambda * (hi - s) - T::one());
                q = q + kern * (lambda * (s - lo) + T::one());
            }
            w[k] = w[k] + p / tau;
            w[k + 1] = w[k + 1] + q / tau;
        }
        for v in w.iter_mut() {
            *v = *v / params.gamma_1ma;
        }
        let c = level_coefficients(params, n);
        let half_tau = mesh.tau(n + 1) * T::lit(0.5);
        let local = (-lambda * half_tau).exp() / (params.gamma_2ma * half_tau.powf(alpha));
        w[n] = w[n] + c.next - local;
        w[n + 1] = w[n + 1] + c.next;
        w
    }

    /// D u^{n+1/2} from the samples u^0..u^{n+1}.
    pub fn derivative(&self, params: &TemperedParams<'_, T>, u_values: &[T], n: usize) -> Result<T> {
        if u_values.len() != n + 2 {
            return Err(Error::DimensionMismatch {
                what: "u_values",
                got: u_values.len(),
                expected: n + 2,
            });
        }
        if n >= params.mesh.n_steps() {
            return Err(Error::invalid("level", format!("need n <= N-1, got {n}")));
        }
        Ok(self
            .weights(params, n)
            .iter()
            .zip(u_values)
            .map(|(&w, &u)| w * u)
            .sum())
    }
}

/// Direct L1 derivative at t_{n+1/2} from u^0..u^{n+1}.
pub fn direct_l1_derivative<T: Real>(params: &TemperedParams<'_, T>, u_values: &[T], n: usize) -> Result<T> {
    DirectL1::default().derivative(params, u_values, n)
}

/// Direct L1 derivative at every half-point; O(N²).
pub fn direct_l1_series<T: Real>(params: &TemperedParams<'_, T>, u: &[T]) -> Result<Vec<T>> {
    let n_steps = params.mesh.n_steps();
    if u.len() != n_steps + 1 {
        return Err(Error::DimensionMismatch {
            what: "samples",
            got: u.len(),
            expected: n_steps + 1,
        });
    }
    let op = DirectL1::default();
    (0..n_steps).map(|n| op.derivative(params, &u[..n + 2], n)).collect()
}
