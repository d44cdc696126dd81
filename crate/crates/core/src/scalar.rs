//! Scalar abstraction shared by the game and statistics code.
//!
//! Payoff arithmetic only needs a signed ordered field, so everything in
//! [`crate::games`] is generic over [`Scalar`]. The corpus stores payoffs as
//! [`Rational`] so that mixed-equilibrium probabilities come out exact; the
//! floating point types are there for callers that already hold `f64` data.

use std::fmt::{Debug, Display};

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// Exact rational used for corpus payoffs.
pub type Rational = Ratio<i64>;

pub trait Scalar:
    Num + Signed + PartialOrd + Copy + Debug + Display + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// `false` for NaN and infinities; always `true` for exact types.
    fn is_finite_value(&self) -> bool;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f32 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f64 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

macro_rules! exact_scalar {
    ($($int:ty),*) => {$(
        impl Scalar for Ratio<$int> {
            fn is_finite_value(&self) -> bool {
                true
            }
        }
    )*};
}

exact_scalar!(i32, i64);

/// Converts a float to the small-denominator rational it denotes (`0.1` is
/// `1/10`), provided that rational rounds back to the same float and its
/// denominator is at most `max_denom`.
pub fn exact_rational(x: f64, max_denom: i64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let r = Ratio::<i64>::approximate_float(x)?;
    if *r.denom() > max_denom || r.to_f64()? != x {
        return None;
    }
    Some(r)
}

/// Formats a rational the way payoffs appear in prompts: integers without a
/// decimal point, terminating fractions as decimals, everything else as `n/d`.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        return r.to_integer().to_string();
    }
    let mut d = *r.denom();
    while d % 2 == 0 {
        d /= 2;
    }
    while d % 5 == 0 {
        d /= 5;
    }
    if d == 1 {
        let mut s = format!("{}", r.to_f64().unwrap_or(f64::NAN));
        if s.contains('e') {
            s = format!("{}/{}", r.numer(), r.denom());
        }
        s
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_conversion_accepts_small_denominators() {
        assert_eq!(exact_rational(5.0, 1000), Some(Rational::from_integer(5)));
        assert_eq!(exact_rational(2.5, 1000), Some(Rational::new(5, 2)));
        assert_eq!(exact_rational(0.1, 1000), Some(Rational::new(1, 10)));
        assert_eq!(exact_rational(std::f64::consts::PI, 1000), None);
        assert_eq!(exact_rational(f64::NAN, 1000), None);
    }

    #[test]
    fn prompt_formatting() {
        assert_eq!(format_rational(&Rational::from_integer(10)), "10");
        assert_eq!(format_rational(&Rational::new(5, 2)), "2.5");
        assert_eq!(format_rational(&Rational::new(-3, 4)), "-0.75");
        assert_eq!(format_rational(&Rational::new(1, 3)), "1/3");
    }
}
