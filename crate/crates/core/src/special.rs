//! Gamma function at whatever precision the scalar type carries.
//!
//! A fixed Lanczos table is tuned for one precision, so instead the argument is
//! shifted above 30 and the Stirling series is summed with fifteen Bernoulli
//! corrections. The truncation error there is below 1e-38, which leaves the
//! result limited only by the scalar's own rounding.

use crate::real::Real;

const SHIFT_THRESHOLD: f64 = 30.0;

/// `(numerator, denominator)` of B_2, B_4, ..., B_30.
const BERNOULLI: [(f64, f64); 15] = [
    (1.0, 6.0),
    (-1.0, 30.0),
    (1.0, 42.0),
    (-1.0, 30.0),
    (5.0, 66.0),
    (-691.0, 2730.0),
    (7.0, 6.0),
    (-3617.0, 510.0),
    (43867.0, 798.0),
    (-174611.0, 330.0),
    (854513.0, 138.0),
    (-236364091.0, 2730.0),
    (8553103.0, 6.0),
    (-23749461029.0, 870.0),
    (8615841276005.0, 14322.0),
];

/// Moves `x` above the Stirling threshold; returns the shifted argument and
/// the factors x(x+1)...(x+m-1) split into a mantissa-sized product and its log.
fn shift_up<T: Real>(x: T) -> (T, T, T) {
    let threshold = T::lit(SHIFT_THRESHOLD);
    let mut z = x;
    let mut log_shift = T::zero();
    let mut prod = T::one();
    while z < threshold {
        prod = prod * z;
        z = z + T::one();
        // keep the running product representable even in single precision
        if prod > T::max_value().sqrt() {
            log_shift = log_shift + prod.ln();
            prod = T::one();
        }
    }
    (z, prod, log_shift)
}

/// Σ B_2k / (2k(2k-1) z^{2k-1}), the small tail of the Stirling series.
fn stirling_correction<T: Real>(z: T) -> T {
    let inv = z.recip();
    let inv2 = inv * inv;
    let mut power = inv;
    let mut sum = T::zero();
    for (k, &(num, den)) in BERNOULLI.iter().enumerate() {
        let two_k = T::from_count(2 * (k + 1));
        sum = sum + T::lit(num) / T::lit(den) / (two_k * (two_k - T::one())) * power;
        power = power * inv2;
    }
    sum
}

/// Natural log of Γ(x) for x > 0.
pub fn ln_gamma<T: Real>(x: T) -> T {
    assert!(x > T::zero(), "ln_gamma requires a positive argument");
    let (z, prod, log_shift) = shift_up(x);
    let half = T::lit(0.5);
    let two_pi = T::PI() + T::PI();
    (z - half) * z.ln() - z + half * two_pi.ln() + stirling_correction(z) - log_shift - prod.ln()
}

/// Γ(x) for x > 0.
///
/// Evaluated as √(2π) z^{z-1/2} e^{-z} e^{corr} / (x(x+1)...(z-1)) rather than
/// through exp(ln Γ), which would lose digits in proportion to ln Γ(z).
pub fn gamma<T: Real>(x: T) -> T {
    assert!(x > T::zero(), "gamma requires a positive argument");
    let (z, prod, log_shift) = shift_up(x);
    if log_shift > T::zero() {
        return ln_gamma(x).exp();
    }
    let half = T::lit(0.5);
    let two_pi = T::PI() + T::PI();
    // z^{(z-1/2)/2} squared keeps the intermediate inside f32 range
    let root = z.powf((z - half) * half);
    two_pi.sqrt() * root * ((-z).exp() * root) * stirling_correction(z).exp() / prod
}
