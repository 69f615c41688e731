//! Exact coefficient fields for the symbolic kernel.

use std::fmt;
use std::hash::Hash;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational numbers.
pub type Rational = BigRational;

/// Exact Gaussian rationals `a + b i` with `a, b` rational.
pub type GaussianRational = Complex<BigRational>;

/// A field of exact scalars usable as polynomial coefficients.
///
/// Arithmetic must never round: canonical equality of polynomials relies on
/// coefficient equality being exact.
pub trait Coefficient:
    Clone
    + PartialEq
    + Eq
    + Hash
    + fmt::Debug
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_ratio(num: i64, den: i64) -> Self;

    fn from_integer(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    /// The imaginary unit, when the field contains it.
    fn imaginary_unit() -> Option<Self>;

    /// Multiplicative inverse; `None` for zero.
    fn inverse(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(Self::one() / self.clone())
        }
    }

    /// Real and imaginary parts as floating point values.
    fn to_f64_parts(&self) -> (f64, f64);

    /// True when the value is a negative real number, or a purely imaginary
    /// number with negative imaginary part. Used to print `a - b` instead of
    /// `a + -b`.
    fn is_negative_like(&self) -> bool;

    /// Canonical text form, rationals printed as `p/q`.
    fn write_canonical(&self, out: &mut dyn fmt::Write) -> fmt::Result;

    fn canonical_string(&self) -> String {
        let mut s = String::new();
        self.write_canonical(&mut s).expect("writing to a String");
        s
    }
}

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn write_rational(r: &BigRational, out: &mut dyn fmt::Write) -> fmt::Result {
    if r.is_integer() {
        write!(out, "{}", r.numer())
    } else {
        write!(out, "{}/{}", r.numer(), r.denom())
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl Coefficient for BigRational {
    fn from_ratio(num: i64, den: i64) -> Self {
        ratio(num, den)
    }

    fn imaginary_unit() -> Option<Self> {
        None
    }

    fn to_f64_parts(&self) -> (f64, f64) {
        (rational_to_f64(self), 0.0)
    }

    fn is_negative_like(&self) -> bool {
        self.is_negative()
    }

    fn write_canonical(&self, out: &mut dyn fmt::Write) -> fmt::Result {
        write_rational(self, out)
    }
}

impl Coefficient for Complex<BigRational> {
    fn from_ratio(num: i64, den: i64) -> Self {
        Complex::new(ratio(num, den), BigRational::zero())
    }

    fn imaginary_unit() -> Option<Self> {
        Some(Complex::new(BigRational::zero(), BigRational::one()))
    }

    fn to_f64_parts(&self) -> (f64, f64) {
        (rational_to_f64(&self.re), rational_to_f64(&self.im))
    }

    fn is_negative_like(&self) -> bool {
        if self.im.is_zero() {
            self.re.is_negative()
        } else {
            self.re.is_zero() && self.im.is_negative()
        }
    }

    fn write_canonical(&self, out: &mut dyn fmt::Write) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write_rational(&self.re, out),
            (true, false) => {
                if self.im.is_one() {
                    out.write_str("i")
                } else if (-self.im.clone()).is_one() {
                    out.write_str("-i")
                } else {
                    write_rational(&self.im, out)?;
                    out.write_str("i")
                }
            }
            (false, false) => {
                out.write_str("(")?;
                write_rational(&self.re, out)?;
                if !self.im.is_negative() {
                    out.write_str("+")?;
                }
                write_rational(&self.im, out)?;
                out.write_str("i)")
            }
        }
    }
}

/// Builds a Gaussian rational from integer ratios of its parts.
pub fn gaussian(re: (i64, i64), im: (i64, i64)) -> GaussianRational {
    Complex::new(ratio(re.0, re.1), ratio(im.0, im.1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_text() {
        assert_eq!(gaussian((1, 2), (0, 1)).canonical_string(), "1/2");
        assert_eq!(gaussian((0, 1), (1, 1)).canonical_string(), "i");
        assert_eq!(gaussian((0, 1), (-1, 1)).canonical_string(), "-i");
        assert_eq!(gaussian((0, 1), (-1, 2)).canonical_string(), "-1/2i");
        assert_eq!(gaussian((3, 1), (-2, 1)).canonical_string(), "(3-2i)");
        assert_eq!(Rational::from_ratio(-4, 6).canonical_string(), "-2/3");
    }

    #[test]
    fn inverse_of_imaginary_unit() {
        let i = GaussianRational::imaginary_unit().unwrap();
        assert_eq!(i.inverse().unwrap(), -i);
        assert!(GaussianRational::zero().inverse().is_none());
    }
}
