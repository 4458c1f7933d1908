//! Sum-of-exponentials compression of the power kernel t^{-1-α}.
//!
//! The kernel is written as a Laplace integral,
//!
//! ```text
//! t^{-β} = 1/Γ(β) ∫_0^∞ e^{-ts} s^{β-1} ds,    β = 1 + α,
//! ```
//!
//! and the s-integral is discretized: a Gauss-Jacobi panel absorbs the
//! s^{α} factor on [0, 1/T], and Gauss-Legendre panels cover the dyadic
//! intervals [2^k/T, 2^{k+1}/T] until the truncated tail is below ε/4 at
//! t = δ. Each quadrature node s_l becomes an exponent and its scaled
//! weight becomes ω_l, so every ω_l and s_l is positive by construction.
//!
//! Every build is checked before it is returned on a dense sample: log-spaced
//! anchors with uniformly spaced points between them, so that each
//! exponential is advanced by one multiplication per point. If the check fails, the per-panel order is doubled (at most
//! three times).

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::quadrature::GaussRule;
use crate::real::Real;
use crate::special::gamma;

/// Default number of verification samples.
pub const DEFAULT_SAMPLES: usize = 10_000;
const MAX_REFINEMENTS: usize = 3;
/// Rounding allowance in units of machine epsilon times the kernel value.
const ROUNDING_ULPS: f64 = 256.0;
/// Verification points per block of uniform spacing.
const SAMPLE_BLOCK: usize = 32;

/// ε-accurate exponential sum for t^{-1-α} on [delta_cut, t_max].
#[derive(Debug, Clone, PartialEq)]
pub struct SoeApproximation<T> {
    alpha: T,
    epsilon: T,
    delta_cut: T,
    t_max: T,
    exponents: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> SoeApproximation<T> {
    /// Assembles an approximation from explicit terms. The window may be
    /// degenerate (`delta_cut == t_max`) and may start at zero.
    pub fn from_parts(
        alpha: T,
        epsilon: T,
        delta_cut: T,
        t_max: T,
        exponents: Vec<T>,
        weights: Vec<T>,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        if exponents.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                what: "weights",
                got: weights.len(),
                expected: exponents.len(),
            });
        }
        if exponents.iter().chain(&weights).any(|&v| !(v > T::zero()) || !v.is_finite()) {
            return Err(Error::invalid("terms", "exponents and weights must be positive"));
        }
        if !(delta_cut >= T::zero()) || !(t_max >= delta_cut) || !t_max.is_finite() {
            return Err(Error::invalid("window", "need 0 <= delta_cut <= t_max"));
        }
        Ok(SoeApproximation {
            alpha,
            epsilon,
            delta_cut,
            t_max,
            exponents,
            weights,
        })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn delta_cut(&self) -> T {
        self.delta_cut
    }

    pub fn t_max(&self) -> T {
        self.t_max
    }

    /// The s_l.
    pub fn exponents(&self) -> &[T] {
        &self.exponents
    }

    /// The ω_l.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn n_exp(&self) -> usize {
        self.exponents.len()
    }

    /// Σ ω_l e^{-s_l t}, checked against the validity window.
    pub fn eval(&self, t: T) -> Result<T> {
        if !(t >= self.delta_cut && t <= self.t_max) {
            return Err(Error::Domain {
                value: t.to_f64_lossy(),
                lower: self.delta_cut.to_f64_lossy(),
                upper: self.t_max.to_f64_lossy(),
            });
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: T) -> T {
        self.exponents
            .iter()
            .zip(&self.weights)
            .map(|(&s, &w)| w * (-s * t).exp())
            .sum()
    }

    /// Largest |t^{-1-α} - Σ ω e^{-st}| over `sample_count` points of the window.
    ///
    /// Every 32nd point is log-spaced and the points in between are uniform,
    /// which lets the exponentials be advanced by one multiplication per term.
    pub fn verify(&self, sample_count: usize) -> Result<T> {
        if sample_count < 2 {
            return Err(Error::invalid("sample_count", "need at least 2 samples"));
        }
        let beta = T::one() + self.alpha;
        let mut worst = T::zero();
        self.for_each_sample(sample_count, |t, approx| {
            worst = worst.max((t.powf(-beta) - approx).abs());
        });
        Ok(worst)
    }

    /// Worst sampled error in excess of the tolerance plus the rounding floor
    /// of the scalar type; non-positive means the build conforms.
    fn excess(&self, sample_count: usize) -> T {
        let beta = T::one() + self.alpha;
        let ulps = T::lit(ROUNDING_ULPS) * T::epsilon();
        let mut worst = T::neg_infinity();
        self.for_each_sample(sample_count, |t, approx| {
            let exact = t.powf(-beta);
            worst = worst.max((exact - approx).abs() - (self.epsilon + ulps * exact));
        });
        worst
    }

    /// Calls `visit(t, Σ ω e^{-st})` on the verification points in increasing order.
    fn for_each_sample<F: FnMut(T, T)>(&self, count: usize, mut visit: F) {
        let (lo, hi) = (self.delta_cut, self.t_max);
        let last = count - 1;
        let ratio = (hi / lo).ln();
        let anchor = |k: usize| {
            if k == 0 {
                lo
            } else if k == last {
                hi
            } else {
                lo * (ratio * T::from_count(k) / T::from_count(last)).exp()
            }
        };
        let n_exp = self.n_exp();
        let mut current = vec![T::zero(); n_exp];
        let mut factor = vec![T::zero(); n_exp];
        let mut k0 = 0;
        while k0 < last {
            let k1 = (k0 + SAMPLE_BLOCK).min(last);
            let a = anchor(k0);
            let dt = (anchor(k1) - a) / T::from_count(k1 - k0);
            for (l, &s) in self.exponents.iter().enumerate() {
                current[l] = (-s * a).exp();
                factor[l] = (-s * dt).exp();
            }
            for j in 0..k1 - k0 {
                let mut sum = T::zero();
                for l in 0..n_exp {
                    sum = sum + self.weights[l] * current[l];
                    current[l] = current[l] * factor[l];
                }
                visit(a + dt * T::from_count(j), sum);
            }
            k0 = k1;
        }
        visit(hi, self.eval_unchecked(hi));
    }

    /// Writes `exponent,weight` rows, preceded by `#` metadata lines.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# alpha={}", self.alpha.to_decimal())?;
        writeln!(out, "# epsilon={}", self.epsilon.to_decimal())?;
        writeln!(out, "# delta_cut={}", self.delta_cut.to_decimal())?;
        writeln!(out, "# t_max={}", self.t_max.to_decimal())?;
        writeln!(out, "exponent,weight")?;
        for (s, w) in self.exponents.iter().zip(&self.weights) {
            writeln!(out, "{},{}", s.to_decimal(), w.to_decimal())?;
        }
        Ok(())
    }

    /// Reads the format produced by [`SoeApproximation::write_csv`].
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut meta: [Option<T>; 4] = [None; 4];
        let keys = ["alpha", "epsilon", "delta_cut", "t_max"];
        let mut exponents = Vec::new();
        let mut weights = Vec::new();
        let mut seen_header = false;
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let text = line.trim();
            if text.is_empty() {
                continue;
            }
            if let Some(comment) = text.strip_prefix('#') {
                if let Some((k, v)) = comment.trim().split_once('=') {
                    if let Some(slot) = keys.iter().position(|&key| key == k.trim()) {
                        meta[slot] = Some(parse_field(v, lineno)?);
                    }
                }
                continue;
            }
            if !seen_header {
                if text != "exponent,weight" {
                    return Err(Error::Parse {
                        line: lineno,
                        reason: format!("expected header `exponent,weight`, found `{text}`"),
                    });
                }
                seen_header = true;
                continue;
            }
            let (s, w) = text.split_once(',').ok_or_else(|| Error::Parse {
                line: lineno,
                reason: "expected two comma-separated columns".into(),
            })?;
            exponents.push(parse_field(s, lineno)?);
            weights.push(parse_field(w, lineno)?);
        }
        if !seen_header {
            return Err(Error::Parse {
                line: 0,
                reason: "missing header row".into(),
            });
        }
        let missing = |i: usize| Error::Parse {
            line: 0,
            reason: format!("missing `# {}=` metadata", keys[i]),
        };
        let [alpha, epsilon, delta_cut, t_max] = meta;
        SoeApproximation::from_parts(
            alpha.ok_or_else(|| missing(0))?,
            epsilon.ok_or_else(|| missing(1))?,
            delta_cut.ok_or_else(|| missing(2))?,
            t_max.ok_or_else(|| missing(3))?,
            exponents,
            weights,
        )
    }
}

fn parse_field<T: Real>(text: &str, line: usize) -> Result<T> {
    T::parse_decimal(text).ok_or_else(|| Error::Parse {
        line,
        reason: format!("`{}` is not a number", text.trim()),
    })
}

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if alpha > T::zero() && alpha < T::one() {
        Ok(())
    } else {
        Err(Error::invalid("alpha", "require 0 < alpha < 1"))
    }
}

/// Builds and verifies an approximation with default sampling.
pub fn build_soe<T: Real>(alpha: T, epsilon: T, delta_cut: T, t_max: T) -> Result<SoeApproximation<T>> {
    SoeBuilder::new(alpha, epsilon, delta_cut, t_max).build()
}

/// Construction knobs for [`build_soe`].
#[derive(Debug, Clone)]
pub struct SoeBuilder<T> {
    alpha: T,
    epsilon: T,
    delta_cut: T,
    t_max: T,
    sample_count: usize,
    order: Option<usize>,
}

impl<T: Real> SoeBuilder<T> {
    pub fn new(alpha: T, epsilon: T, delta_cut: T, t_max: T) -> Self {
        SoeBuilder {
            alpha,
            epsilon,
            delta_cut,
            t_max,
            sample_count: DEFAULT_SAMPLES,
            order: None,
        }
    }

    pub fn sample_count(mut self, n: usize) -> Self {
        self.sample_count = n;
        self
    }

    /// Overrides the initial per-panel quadrature order.
    pub fn order(mut self, q: usize) -> Self {
        self.order = Some(q);
        self
    }

    pub fn build(&self) -> Result<SoeApproximation<T>> {
        check_alpha(self.alpha)?;
        if !(self.epsilon > T::zero()) || !self.epsilon.is_finite() {
            return Err(Error::invalid("epsilon", "must be positive"));
        }
        if !(self.delta_cut > T::zero()) || !(self.t_max > self.delta_cut) || !self.t_max.is_finite() {
            return Err(Error::invalid("window", "need 0 < delta_cut < t_max"));
        }
        if self.sample_count < 2 {
            return Err(Error::invalid("sample_count", "need at least 2 samples"));
        }
        let mut order = self.order.unwrap_or_else(|| self.default_order());
        let mut last_excess = T::zero();
        for _ in 0..=MAX_REFINEMENTS {
            let soe = self.assemble(order);
            let excess = soe.excess(self.sample_count);
            if excess <= T::zero() {
                return Ok(soe);
            }
            log::debug!("SOE with order {order} misses tolerance by {:e}; refining", excess.to_f64_lossy());
            last_excess = excess;
            order *= 2;
        }
        Err(Error::ConstructionFailure {
            max_error: (last_excess + self.epsilon).to_f64_lossy(),
            tolerance: self.epsilon.to_f64_lossy(),
            attempts: MAX_REFINEMENTS,
        })
    }

    /// Relative accuracy the panels must deliver, floored at the scalar's epsilon.
    fn relative_target(&self) -> T {
        let beta = T::one() + self.alpha;
        let rel = self.epsilon * self.delta_cut.powf(beta) * T::lit(0.25);
        rel.max(T::epsilon())
    }

    fn default_order(&self) -> usize {
        let digits = -self.relative_target().log10().to_f64_lossy();
        ((digits * 0.75).ceil() as usize + 4).clamp(6, 96)
    }

    /// Upper end of the dyadic panels: first s_0 2^K whose neglected tail is below ε/4 at t = δ.
    fn panel_count(&self, s0: T) -> usize {
        let beta = T::one() + self.alpha;
        let target = self.epsilon * T::lit(0.25) * gamma(beta) * self.delta_cut.powf(beta);
        let mut upper = s0;
        let mut count = 0;
        loop {
            let x = self.delta_cut * upper;
            // Γ(β, x) ≤ x^α e^{-x} / (1 - α/x) for x > α
            if x > T::lit(2.0) {
                let bound = x.powf(self.alpha) * (-x).exp() / (T::one() - self.alpha / x);
                if bound <= target {
                    return count;
                }
            }
            upper = upper + upper;
            count += 1;
        }
    }

    fn assemble(&self, order: usize) -> SoeApproximation<T> {
        let alpha = self.alpha;
        let beta = T::one() + alpha;
        let norm = gamma(beta).recip();
        let s0 = self.t_max.recip();
        let panels = self.panel_count(s0);

        let mut exponents = Vec::with_capacity(order * (panels + 1));
        let mut weights = Vec::with_capacity(order * (panels + 1));

        let jacobi = GaussRule::jacobi(order, T::zero(), alpha);
        for (s, w) in jacobi.mapped(T::zero(), s0) {
            exponents.push(s);
            weights.push(w * norm);
        }
        let legendre = GaussRule::legendre(order);
        let mut lo = s0;
        for _ in 0..panels {
            let hi = lo + lo;
            for (s, w) in legendre.mapped(lo, hi) {
                exponents.push(s);
                weights.push(w * s.powf(alpha) * norm);
            }
            lo = hi;
        }

        // terms that never exceed ε/(8n) anywhere on the window are dropped
        let floor = self.epsilon / T::from_count(8 * exponents.len());
        let keep: Vec<bool> = exponents
            .iter()
            .zip(&weights)
            .map(|(&s, &w)| w * (-s * self.delta_cut).exp() >= floor)
            .collect();
        let mut k = keep.iter();
        exponents.retain(|_| *k.next().unwrap());
        let mut k = keep.iter();
        weights.retain(|_| *k.next().unwrap());

        SoeApproximation {
            alpha,
            epsilon: self.epsilon,
            delta_cut: self.delta_cut,
            t_max: self.t_max,
            exponents,
            weights,
        }
    }
}
