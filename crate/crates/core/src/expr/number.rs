//! Complex constants with exact rational parts where possible.

use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

/// Largest integer magnitude kept exact when converting from floating point.
pub const EXACT_INT_LIMIT: i64 = 1 << 31;

/// A real scalar: either an exact rational or an IEEE double.
#[derive(Clone, Copy, Debug)]
pub enum Real {
    Rational(Rational64),
    Float(f64),
}

impl Real {
    pub fn int(n: i64) -> Self {
        Real::Rational(Rational64::from_integer(n))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Real::Rational(Rational64::new(num, den))
    }

    pub fn zero() -> Self {
        Real::int(0)
    }

    /// Integral doubles of moderate size become exact rationals.
    pub fn from_f64(v: f64) -> Self {
        if v.is_finite() && v.fract() == 0.0 && v.abs() <= EXACT_INT_LIMIT as f64 {
            Real::int(v as i64)
        } else {
            Real::Float(v)
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Real::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
            Real::Float(f) => f,
        }
    }

    pub fn is_zero(self) -> bool {
        match self {
            Real::Rational(r) => r.is_zero(),
            Real::Float(f) => f == 0.0,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Real::Rational(_))
    }

    fn exact_op(
        a: Self,
        b: Self,
        exact: impl Fn(&Rational64, &Rational64) -> Option<Rational64>,
        float: impl Fn(f64, f64) -> f64,
    ) -> Self {
        if let (Real::Rational(x), Real::Rational(y)) = (a, b) {
            if let Some(r) = exact(&x, &y) {
                return Real::Rational(r);
            }
        }
        Real::Float(float(a.to_f64(), b.to_f64()))
    }

    pub fn add(self, o: Self) -> Self {
        Self::exact_op(self, o, |x, y| x.checked_add(y), |x, y| x + y)
    }

    pub fn sub(self, o: Self) -> Self {
        Self::exact_op(self, o, |x, y| x.checked_sub(y), |x, y| x - y)
    }

    pub fn mul(self, o: Self) -> Self {
        Self::exact_op(self, o, |x, y| x.checked_mul(y), |x, y| x * y)
    }

    pub fn div(self, o: Self) -> Option<Self> {
        if o.is_zero() {
            return None;
        }
        Some(Self::exact_op(self, o, |x, y| x.checked_div(y), |x, y| x / y))
    }

    pub fn neg(self) -> Self {
        match self {
            Real::Rational(r) => Real::Rational(-r),
            Real::Float(f) => Real::Float(-f),
        }
    }

    /// Integer value if this is an exact integer.
    pub fn as_integer(self) -> Option<i64> {
        match self {
            Real::Rational(r) if r.is_integer() => Some(*r.numer()),
            _ => None,
        }
    }

    pub fn as_rational(self) -> Option<Rational64> {
        match self {
            Real::Rational(r) => Some(r),
            Real::Float(_) => None,
        }
    }

    fn is_negative(self) -> bool {
        match self {
            Real::Rational(r) => r.is_negative(),
            Real::Float(f) => f < 0.0,
        }
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Real::Rational(a), Real::Rational(b)) => a.cmp(b),
            (Real::Rational(_), Real::Float(_)) => Ordering::Less,
            (Real::Float(_), Real::Rational(_)) => Ordering::Greater,
            (Real::Float(a), Real::Float(b)) => a.total_cmp(b),
        }
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Real::Rational(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Real::Rational(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            // Debug formatting of f64 round-trips exactly.
            Real::Float(x) => write!(f, "{:?}", x),
        }
    }
}

/// Complex constant `re + i·im`.
#[derive(Clone, Copy, Debug)]
pub struct Number {
    pub re: Real,
    pub im: Real,
}

impl Number {
    pub fn real(re: Real) -> Self {
        Number { re, im: Real::zero() }
    }

    pub fn int(n: i64) -> Self {
        Number::real(Real::int(n))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Number::real(Real::ratio(num, den))
    }

    pub fn imaginary_unit() -> Self {
        Number { re: Real::zero(), im: Real::int(1) }
    }

    pub fn from_f64(v: f64) -> Self {
        Number::real(Real::from_f64(v))
    }

    pub fn from_rational(r: Rational64) -> Self {
        Number::real(Real::Rational(r))
    }

    pub fn zero() -> Self {
        Number::int(0)
    }

    pub fn one() -> Self {
        Number::int(1)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.im.is_zero() && matches!(self.re, Real::Rational(r) if r.is_one())
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    /// True for an exact real that is strictly negative.
    pub fn is_negative_real(&self) -> bool {
        self.is_real() && self.re.is_negative()
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn as_integer(&self) -> Option<i64> {
        if self.im.is_zero() {
            self.re.as_integer()
        } else {
            None
        }
    }

    pub fn as_real_rational(&self) -> Option<Rational64> {
        if self.im.is_zero() {
            self.re.as_rational()
        } else {
            None
        }
    }

    pub fn add(self, o: Self) -> Self {
        Number { re: self.re.add(o.re), im: self.im.add(o.im) }
    }

    pub fn sub(self, o: Self) -> Self {
        Number { re: self.re.sub(o.re), im: self.im.sub(o.im) }
    }

    pub fn neg(self) -> Self {
        Number { re: self.re.neg(), im: self.im.neg() }
    }

    pub fn conj(self) -> Self {
        Number { re: self.re, im: self.im.neg() }
    }

    pub fn mul(self, o: Self) -> Self {
        if self.im.is_zero() && o.im.is_zero() {
            return Number::real(self.re.mul(o.re));
        }
        Number {
            re: self.re.mul(o.re).sub(self.im.mul(o.im)),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }

    pub fn recip(self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        if self.im.is_zero() {
            return Some(Number::real(Real::int(1).div(self.re)?));
        }
        let norm = self.re.mul(self.re).add(self.im.mul(self.im));
        Some(Number { re: self.re.div(norm)?, im: self.im.neg().div(norm)? })
    }

    pub fn div(self, o: Self) -> Option<Self> {
        Some(self.mul(o.recip()?))
    }

    /// Integer power by repeated squaring; `None` for `0^negative`.
    pub fn powi(self, n: i64) -> Option<Self> {
        if n < 0 {
            return self.recip()?.powi(n.checked_neg()?);
        }
        let mut result = Number::one();
        let mut base = self;
        let mut e = n as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(base);
            }
            base = base.mul(base);
            e >>= 1;
        }
        Some(result)
    }

    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.re.total_cmp(&other.re).then_with(|| self.im.total_cmp(&other.im))
    }
}

impl PartialEq for Number {
    fn eq(&self, other: &Self) -> bool {
        self.total_cmp(other).is_eq()
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", self.re),
            (true, false) => {
                if matches!(self.im, Real::Rational(r) if r.is_one()) {
                    write!(f, "i")
                } else {
                    write!(f, "{}*i", Paren(self.im))
                }
            }
            (false, false) => write!(f, "{} + {}*i", self.re, Paren(self.im)),
        }
    }
}

/// Wraps fractions and negatives in parentheses when used as a factor.
struct Paren(Real);

impl fmt::Display for Paren {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let needs = match self.0 {
            Real::Rational(r) => !r.is_integer() || r.is_negative(),
            Real::Float(x) => x < 0.0 || x.to_string().contains('e'),
        };
        if needs {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_rational_arithmetic() {
        let half = Number::ratio(1, 2);
        let third = Number::ratio(1, 3);
        let sum = half.add(third);
        assert_eq!(sum.as_real_rational(), Some(Rational64::new(5, 6)));
        assert!(half.mul(Number::int(2)).is_one());
    }

    #[test]
    fn imaginary_unit_squares_to_minus_one() {
        let i = Number::imaginary_unit();
        assert_eq!(i.mul(i).as_integer(), Some(-1));
    }

    #[test]
    fn overflow_falls_back_to_float() {
        let big = Number::int(i64::MAX / 2);
        let r = big.mul(Number::int(4));
        assert!(!r.re.is_exact());
        assert!(r.re.to_f64() > 1e18);
    }

    #[test]
    fn zero_has_no_inverse() {
        assert!(Number::zero().recip().is_none());
        assert!(Number::zero().powi(-1).is_none());
    }

    #[test]
    fn from_f64_keeps_small_integers_exact() {
        assert!(Real::from_f64(3.0).is_exact());
        assert!(!Real::from_f64(0.1).is_exact());
        assert!(!Real::from_f64(1e12).is_exact());
    }
}
