use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// An exact binary fraction `mantissa * 2^exponent`.
///
/// Always stored in canonical form: the mantissa is odd, or the value is zero
/// with exponent 0. Equality is therefore structural.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mantissa: BigInt,
    exponent: i64,
}

impl Dyadic {
    pub fn new(mantissa: BigInt, exponent: i64) -> Self {
        if mantissa.is_zero() {
            return Dyadic::zero();
        }
        let tz = mantissa.trailing_zeros().unwrap_or(0);
        Dyadic {
            mantissa: mantissa >> tz,
            exponent: exponent + tz as i64,
        }
    }

    pub fn zero() -> Self {
        Dyadic {
            mantissa: BigInt::zero(),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        Dyadic::from_int(1)
    }

    pub fn from_int(v: i64) -> Self {
        Dyadic::new(BigInt::from(v), 0)
    }

    pub fn from_bigint(v: BigInt) -> Self {
        Dyadic::new(v, 0)
    }

    /// `2^k`.
    pub fn pow2(k: i64) -> Self {
        Dyadic {
            mantissa: BigInt::one(),
            exponent: k,
        }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.mantissa.is_positive()
    }

    pub fn abs(&self) -> Self {
        Dyadic {
            mantissa: self.mantissa.abs(),
            exponent: self.exponent,
        }
    }

    /// Multiplication by `2^k`, exact.
    pub fn shl(&self, k: i64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        Dyadic {
            mantissa: self.mantissa.clone(),
            exponent: self.exponent + k,
        }
    }

    /// Largest multiple of `2^-precision` that is `<= self`.
    pub fn floor_to(&self, precision: i64) -> Self {
        self.round_to(precision, false)
    }

    /// Smallest multiple of `2^-precision` that is `>= self`.
    pub fn ceil_to(&self, precision: i64) -> Self {
        self.round_to(precision, true)
    }

    fn round_to(&self, precision: i64, up: bool) -> Self {
        if self.exponent >= -precision {
            return self.clone();
        }
        let drop = (-precision - self.exponent) as usize;
        let divisor = BigInt::one() << drop;
        let q = if up {
            self.mantissa.div_ceil(&divisor)
        } else {
            self.mantissa.div_floor(&divisor)
        };
        Dyadic::new(q, -precision)
    }

    pub fn floor(&self) -> BigInt {
        self.floor_to(0).to_bigint_exact()
    }

    pub fn ceil(&self) -> BigInt {
        self.ceil_to(0).to_bigint_exact()
    }

    fn to_bigint_exact(&self) -> BigInt {
        debug_assert!(self.exponent >= 0 || self.is_zero());
        &self.mantissa << (self.exponent.max(0) as usize)
    }

    /// Rounds a rational down onto the `2^-precision` grid.
    pub fn from_rational_floor(q: &BigRational, precision: i64) -> Self {
        let (num, den) = scaled(q, precision);
        Dyadic::new(num.div_floor(&den), -precision)
    }

    /// Rounds a rational up onto the `2^-precision` grid.
    pub fn from_rational_ceil(q: &BigRational, precision: i64) -> Self {
        let (num, den) = scaled(q, precision);
        Dyadic::new(num.div_ceil(&den), -precision)
    }

    /// `floor(a / b)` on the `2^-precision` grid. `b` must be nonzero.
    pub fn div_floor(a: &Dyadic, b: &Dyadic, precision: i64) -> Self {
        let (num, den) = quotient_parts(a, b, precision);
        Dyadic::new(num.div_floor(&den), -precision)
    }

    /// `ceil(a / b)` on the `2^-precision` grid. `b` must be nonzero.
    pub fn div_ceil(a: &Dyadic, b: &Dyadic, precision: i64) -> Self {
        let (num, den) = quotient_parts(a, b, precision);
        Dyadic::new(num.div_ceil(&den), -precision)
    }

    pub fn to_rational(&self) -> BigRational {
        if self.exponent >= 0 {
            BigRational::from_integer(&self.mantissa << self.exponent as usize)
        } else {
            BigRational::new(
                self.mantissa.clone(),
                BigInt::one() << (-self.exponent) as usize,
            )
        }
    }

    /// Nearest-ish `f64`; for reporting only, never for decisions.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mantissa.bits() as i64;
        let shift = (bits - 60).max(0);
        let m = (&self.mantissa >> shift as usize)
            .to_f64()
            .unwrap_or(f64::NAN);
        let e = self.exponent + shift;
        m * 2f64.powi(e.clamp(i32::MIN as i64, i32::MAX as i64) as i32)
    }

    /// Position of the most significant bit: `2^(msb) <= |self| < 2^(msb+1)`.
    pub fn msb(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.mantissa.bits() as i64 - 1 + self.exponent)
        }
    }
}

fn scaled(q: &BigRational, precision: i64) -> (BigInt, BigInt) {
    let mut num = q.numer().clone();
    let mut den = q.denom().clone();
    if precision >= 0 {
        num <<= precision as usize;
    } else {
        den <<= (-precision) as usize;
    }
    (num, den)
}

fn quotient_parts(a: &Dyadic, b: &Dyadic, precision: i64) -> (BigInt, BigInt) {
    assert!(!b.is_zero(), "division by zero dyadic");
    let shift = a.exponent - b.exponent + precision;
    let mut num = a.mantissa.clone();
    let mut den = b.mantissa.clone();
    if shift >= 0 {
        num <<= shift as usize;
    } else {
        den <<= (-shift) as usize;
    }
    if den.sign() == Sign::Minus {
        num = -num;
        den = -den;
    }
    (num, den)
}

fn aligned(a: &Dyadic, b: &Dyadic) -> (BigInt, BigInt, i64) {
    let e = a.exponent.min(b.exponent);
    let am = &a.mantissa << (a.exponent - e) as usize;
    let bm = &b.mantissa << (b.exponent - e) as usize;
    (am, bm, e)
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (s1, s2) = (self.mantissa.sign(), other.mantissa.sign());
        if s1 != s2 {
            return s1.cmp(&s2);
        }
        let (a, b, _) = aligned(self, other);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let (a, b, e) = aligned(self, rhs);
        Dyadic::new(a + b, e)
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        self + &(-rhs)
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() || rhs.is_zero() {
            return Dyadic::zero();
        }
        Dyadic {
            mantissa: &self.mantissa * &rhs.mantissa,
            exponent: self.exponent + rhs.exponent,
        }
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            mantissa: -&self.mantissa,
            exponent: self.exponent,
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Dyadic {
            type Output = Dyadic;
            fn $m(self, rhs: Dyadic) -> Dyadic {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Dyadic> for Dyadic {
            type Output = Dyadic;
            fn $m(self, rhs: &Dyadic) -> Dyadic {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        -&self
    }
}

impl From<i64> for Dyadic {
    fn from(v: i64) -> Self {
        Dyadic::from_int(v)
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.mantissa, self.exponent)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_rational())
    }
}
