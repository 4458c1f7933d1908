//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the solver: `f32`, `f64`, and (with the
/// `quad` feature) the binary128 `f128`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal. Exact for `f64` and wider types.
    fn lit(x: f64) -> Self;

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable as a float")
    }

    /// Lossy conversion for reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Decimal text that parses back to the same value.
    fn to_decimal(self) -> String;

    /// Parses the text written by [`Real::to_decimal`] (or any ordinary decimal literal).
    fn parse_decimal(s: &str) -> Option<Self>;
}

impl Real for f32 {
    fn lit(x: f64) -> Self {
        x as f32
    }

    fn to_decimal(self) -> String {
        format!("{:e}", self)
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
}

impl Real for f64 {
    fn lit(x: f64) -> Self {
        x
    }

    fn to_decimal(self) -> String {
        format!("{:e}", self)
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
}

#[cfg(feature = "quad")]
impl Real for f128::f128 {
    fn lit(x: f64) -> Self {
        <f128::f128 as FromPrimitive>::from_f64(x).expect("every f64 is a binary128")
    }

    fn to_decimal(self) -> String {
        // 36 significant digits round-trip binary128
        self.to_string_fmt("%.35Qe").unwrap_or_else(|| "nan".into())
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        let s = s.trim();
        // strtoflt128 silently accepts garbage; reject anything f64 would reject
        s.parse::<f64>().ok()?;
        f128::f128::parse(s).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_trip<T: Real>(x: f64) {
        let v = T::lit(x);
        let back = T::parse_decimal(&v.to_decimal()).unwrap();
        assert!(back == v, "{} did not round-trip", v.to_decimal());
    }

    #[test]
    fn decimal_round_trip() {
        for x in [0.1, -2.5e-300, 1.0 / 3.0, 6.02214076e23] {
            round_trip::<f64>(x);
            round_trip::<f32>(x.clamp(-1e30, 1e30) as f32 as f64);
        }
    }

    #[cfg(feature = "quad")]
    #[test]
    fn quad_round_trip_keeps_extra_digits() {
        use f128::f128;
        let third = f128::lit(1.0) / f128::lit(3.0);
        let back = f128::parse_decimal(&third.to_decimal()).unwrap();
        assert!(back == third);
        assert!(f128::parse_decimal("abc").is_none());
    }
}
