//! Gauss-Legendre and Gauss-Jacobi rules in the working precision.
//!
//! Nodes are seeded in `f64` (Chebyshev-type guesses for Legendre, the
//! Golub-Welsch eigenproblem for Jacobi) and then polished by Newton's method
//! on the three-term recurrence in the target scalar type, so a binary128 rule
//! is accurate to binary128 precision.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::real::Real;
use crate::special::ln_gamma;

/// An n-point rule on the reference interval [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
    /// exponents of the weight (1-x)^a (1+x)^b; zero for Legendre
    a: T,
    b: T,
}

impl<T: Real> GaussRule<T> {
    /// Gauss-Legendre rule with `n` points.
    pub fn legendre(n: usize) -> Self {
        assert!(n >= 1, "a quadrature rule needs at least one node");
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let nf = n as f64;
        for i in 0..n {
            let guess = -(std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let x = newton_polish(T::lit(guess), |x| legendre_with_derivative(n, x));
            let (_, dp) = legendre_with_derivative(n, x);
            let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
            nodes.push(x);
            weights.push(w);
        }
        GaussRule {
            nodes,
            weights,
            a: T::zero(),
            b: T::zero(),
        }
    }

    /// Gauss-Jacobi rule with `n` points for the weight (1-x)^a (1+x)^b, a, b > -1.
    pub fn jacobi(n: usize, a: T, b: T) -> Self {
        assert!(n >= 1, "a quadrature rule needs at least one node");
        assert!(a > -T::one() && b > -T::one(), "Jacobi exponents must exceed -1");
        let guesses = golub_welsch_guesses(n, a.to_f64_lossy(), b.to_f64_lossy());
        let log_scale = ln_gamma(T::from_count(n) + a + T::one())
            + ln_gamma(T::from_count(n) + b + T::one())
            - ln_gamma(T::from_count(n) + a + b + T::one())
            - ln_gamma(T::from_count(n + 1))
            + (a + b + T::one()) * T::LN_2();
        let scale = log_scale.exp();
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for g in guesses {
            let x = newton_polish(T::lit(g), |x| jacobi_with_derivative(n, a, b, x));
            let (_, dp) = jacobi_with_derivative(n, a, b, x);
            nodes.push(x);
            weights.push(scale / ((T::one() - x * x) * dp * dp));
        }
        GaussRule { nodes, weights, a, b }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Nodes and weights for ∫_lo^hi (hi-s)^a (s-lo)^b g(s) ds ≈ Σ w_k g(s_k).
    pub fn mapped(&self, lo: T, hi: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = (hi - lo) * T::lit(0.5);
        let jac = half.powf(self.a + self.b + T::one());
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (lo + half * (x + T::one()), w * jac))
    }

    /// ∫_lo^hi (hi-s)^a (s-lo)^b g(s) ds.
    pub fn integrate<F: FnMut(T) -> T>(&self, lo: T, hi: T, mut g: F) -> T {
        self.mapped(lo, hi).map(|(s, w)| w * g(s)).sum()
    }
}

fn newton_polish<T: Real, F: Fn(T) -> (T, T)>(mut x: T, eval: F) -> T {
    let tol = T::epsilon() * T::lit(4.0);
    for _ in 0..30 {
        let (p, dp) = eval(x);
        let dx = p / dp;
        x = x - dx;
        if dx.abs() <= tol * (T::one() + x.abs()) {
            break;
        }
    }
    x
}

fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = T::from_count(k);
        let p2 = ((kf + kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 1 {
        return (x, T::one());
    }
    let nf = T::from_count(n);
    let dp = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, dp)
}

fn jacobi_with_derivative<T: Real>(n: usize, a: T, b: T, x: T) -> (T, T) {
    let one = T::one();
    let two = T::lit(2.0);
    let ab = a + b;
    let mut p0 = one;
    let mut p1 = ((a - b) + (ab + two) * x) / two;
    for k in 2..=n {
        let kf = T::from_count(k);
        let c = kf + kf + ab;
        let a1 = two * kf * (kf + ab) * (c - two);
        let a2 = (c - one) * (a * a - b * b);
        let a3 = (c - two) * (c - one) * c;
        let a4 = two * (kf + a - one) * (kf + b - one) * c;
        let p2 = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
        p0 = p1;
        p1 = p2;
    }
    let (pn, pnm1) = (p1, p0);
    let nf = T::from_count(n);
    let c = nf + nf + ab;
    let dp = (nf * ((a - b) - c * x) * pn + two * (nf + a) * (nf + b) * pnm1) / (c * (one - x * x));
    (pn, dp)
}

/// Eigenvalues of the symmetric Jacobi matrix: f64 seeds for the nodes.
fn golub_welsch_guesses(n: usize, a: f64, b: f64) -> Vec<f64> {
    let ab = a + b;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let c = 2.0 * kf + ab;
        m[(k, k)] = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / (c * (c + 2.0))
        };
        if k + 1 < n {
            let j = kf + 1.0;
            let c = 2.0 * j + ab;
            let off = (4.0 * j * (j + a) * (j + b) * (j + ab) / (c * c * (c + 1.0) * (c - 1.0))).sqrt();
            m[(k, k + 1)] = off;
            m[(k + 1, k)] = off;
        }
    }
    let mut eig: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    eig.sort_by(|x, y| x.total_cmp(y));
    eig
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let rule = GaussRule::<f64>::legendre(8);
        // degree 15 is the exactness limit for 8 nodes
        let v = rule.integrate(0.0, 2.0, |s| s.powi(15));
        assert_relative_eq!(v, 2f64.powi(16) / 16.0, max_relative = 1e-14);
        let total: f64 = rule.weights().iter().sum();
        assert_relative_eq!(total, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn legendre_matches_known_three_point_rule() {
        let rule = GaussRule::<f64>::legendre(3);
        assert_relative_eq!(rule.nodes()[2], (0.6f64).sqrt(), max_relative = 1e-15);
        assert_relative_eq!(rule.weights()[1], 8.0 / 9.0, max_relative = 1e-15);
        assert_relative_eq!(rule.nodes()[1], 0.0, epsilon = 1e-16);
    }

    #[test]
    fn jacobi_moments_match_beta_function() {
        // ∫_{-1}^{1} (1-x)^a (1+x)^b dx = 2^{a+b+1} B(a+1, b+1)
        for &(a, b) in &[(0.0, 0.5), (-0.3, 0.0), (-0.9, 0.8), (0.0, 0.8)] {
            let rule = GaussRule::<f64>::jacobi(12, a, b);
            let total: f64 = rule.weights().iter().sum();
            let exact = 2f64.powf(a + b + 1.0) * gamma(a + 1.0) * gamma(b + 1.0) / gamma(a + b + 2.0);
            assert_relative_eq!(total, exact, max_relative = 1e-13);
            // first moment: ∫ (1+x) w = 2^{a+b+2} B(a+1, b+2)
            let m1: f64 = rule.nodes().iter().zip(rule.weights()).map(|(x, w)| (1.0 + x) * w).sum();
            let exact1 = 2f64.powf(a + b + 2.0) * gamma(a + 1.0) * gamma(b + 2.0) / gamma(a + b + 3.0);
            assert_relative_eq!(m1, exact1, max_relative = 1e-13);
        }
    }

    #[test]
    fn jacobi_mapped_handles_endpoint_singularity() {
        // ∫_0^1 (1-s)^{-1/2} ds = 2
        let rule = GaussRule::<f64>::jacobi(4, -0.5, 0.0);
        let v = rule.integrate(0.0, 1.0, |_| 1.0);
        assert_relative_eq!(v, 2.0, max_relative = 1e-14);
        // ∫_0^2 s^{0.3} e^{-s} ds, weight on the left end
        let rule = GaussRule::<f64>::jacobi(20, 0.0, 0.3);
        let v = rule.integrate(0.0, 2.0, |s| (-s).exp());
        // lower incomplete gamma γ(1.3, 2)
        assert_relative_eq!(v, 0.7110857460713012, max_relative = 1e-12);
    }

    #[test]
    fn large_legendre_rule_is_consistent() {
        let rule = GaussRule::<f64>::legendre(128);
        let v = rule.integrate(0.0, std::f64::consts::PI, |s| s.sin());
        assert_relative_eq!(v, 2.0, max_relative = 1e-14);
    }

    #[cfg(feature = "quad")]
    #[test]
    fn quad_rules_reach_quad_precision() {
        use f128::f128;
        use num_traits::Float;
        let rule = GaussRule::<f128>::legendre(40);
        let one = f128::lit(1.0);
        let v = rule.integrate(f128::lit(0.0), one, |s| s.exp());
        let exact = one.exp() - one;
        assert!(((v - exact) / exact).abs() < f128::lit(1e-31));

        let a = f128::lit(-0.5);
        let rule = GaussRule::<f128>::jacobi(30, a, f128::lit(0.0));
        let v = rule.integrate(f128::lit(0.0), one, |_| one);
        assert!((v - f128::lit(2.0)).abs() < f128::lit(1e-31));
    }
}
