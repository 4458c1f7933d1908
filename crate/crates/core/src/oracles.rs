//! Reference values: the exact tempered derivative of a power function and
//! the manufactured solution of the diffusion test problem.

use crate::error::{Error, Result};
use crate::quadrature::GaussRule;
use crate::real::Real;
use crate::special::gamma;

const FIRST_ORDER: usize = 8;
const MAX_ORDER: usize = 512;

/// e^{-λt}/Γ(1-α) ∫_0^t (t-s)^{-α} (e^{λs} s^δ)' ds for t ≥ 0.
///
/// The interval is split at t/2. On the left half a Gauss-Jacobi rule takes
/// the s^{δ-1} factor as its weight; on the right half another absorbs
/// (t-s)^{-α}. Both orders are doubled until successive estimates agree to
/// a few hundred ulps.
pub fn exact_tempered_caputo_power<T: Real>(delta: T, alpha: T, lambda: T, t: T) -> Result<T> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::invalid("alpha", "require 0 < alpha < 1"));
    }
    if !(delta > T::zero()) {
        return Err(Error::invalid("delta", "require delta > 0"));
    }
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::Domain {
            value: t.to_f64_lossy(),
            lower: 0.0,
            upper: f64::INFINITY,
        });
    }
    if t == T::zero() {
        return Ok(T::zero());
    }
    let mid = t * T::lit(0.5);
    let estimate = |order: usize| {
        let left = GaussRule::jacobi(order, T::zero(), delta - T::one())
            .integrate(T::zero(), mid, |s| (t - s).powf(-alpha) * (lambda * s).exp() * (lambda * s + delta));
        let right = GaussRule::jacobi(order, -alpha, T::zero()).integrate(mid, t, |s| {
            (lambda * s).exp() * (lambda * s.powf(delta) + delta * s.powf(delta - T::one()))
        });
        (left + right) * (-lambda * t).exp() / gamma(T::one() - alpha)
    };
    let tol = T::lit(256.0) * T::epsilon();
    let mut order = FIRST_ORDER;
    let mut prev = estimate(order);
    let mut change = T::infinity();
    while order < MAX_ORDER {
        order *= 2;
        let next = estimate(order);
        change = (next - prev).abs();
        if change <= tol * next.abs().max(T::one()) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::ToleranceNotMet {
        tolerance: tol.to_f64_lossy(),
        achieved: change.to_f64_lossy(),
    })
}

/// Γ(δ+1)/Γ(δ+1-α) t^{δ-α}: the untempered Caputo derivative of t^δ.
pub fn caputo_power<T: Real>(delta: T, alpha: T, t: T) -> T {
    gamma(delta + T::one()) / gamma(delta + T::one() - alpha) * t.powf(delta - alpha)
}

/// The manufactured problem with u = e^{-λt}(t^δ+1) x²(1-x)² on [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase<T> {
    pub alpha: T,
    pub lambda: T,
    pub delta: T,
}

impl<T: Real> ManufacturedCase<T> {
    pub fn new(alpha: T, lambda: T, delta: T) -> Result<Self> {
        if !(alpha > T::zero() && alpha < T::one()) {
            return Err(Error::invalid("alpha", "require 0 < alpha < 1"));
        }
        if !(lambda >= T::zero()) {
            return Err(Error::invalid("lambda", "require lambda >= 0"));
        }
        if !(delta > T::one() && delta < T::lit(2.0)) {
            return Err(Error::invalid("delta", "require 1 < delta < 2"));
        }
        Ok(ManufacturedCase { alpha, lambda, delta })
    }

    /// φ(x) = x²(1-x)²
    pub fn initial(&self, x: T) -> T {
        let p = x * (T::one() - x);
        p * p
    }

    pub fn exact(&self, x: T, t: T) -> T {
        exact_solution_ex2(self, x, t)
    }

    pub fn forcing(&self, x: T, t: T) -> T {
        manufactured_forcing(self, x, t)
    }
}

/// e^{-λt}(t^δ+1) x²(1-x)²
pub fn exact_solution_ex2<T: Real>(case: &ManufacturedCase<T>, x: T, t: T) -> T {
    (-case.lambda * t).exp() * (t.powf(case.delta) + T::one()) * case.initial(x)
}

/// The forcing that makes [`exact_solution_ex2`] solve u_t + D u = u_xx - u_x + f.
pub fn manufactured_forcing<T: Real>(case: &ManufacturedCase<T>, x: T, t: T) -> T {
    let ManufacturedCase { alpha, lambda, delta } = *case;
    let one = T::one();
    let td = t.powf(delta);
    let damp = (-lambda * t).exp();
    let g = case.initial(x);
    let time_part = -lambda * (td + one)
        + if t > T::zero() {
            delta * t.powf(delta - one) + caputo_power(delta, alpha, t)
        } else {
            T::zero()
        };
    let x2 = x * x;
    let uxx = T::lit(12.0) * x2 - T::lit(12.0) * x + T::lit(2.0);
    let ux = T::lit(4.0) * x2 * x - T::lit(6.0) * x2 + T::lit(2.0) * x;
    time_part * damp * g - (uxx - ux) * (td + one) * damp
}
