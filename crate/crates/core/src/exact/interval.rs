use std::fmt;

use num_rational::BigRational;

use super::Dyadic;

/// A closed interval `[lo, hi]` of dyadic endpoints enclosing some real value.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntervalValue {
    lo: Dyadic,
    hi: Dyadic,
}

impl IntervalValue {
    /// Panics if `lo > hi`.
    pub fn new(lo: Dyadic, hi: Dyadic) -> Self {
        assert!(lo <= hi, "inverted interval [{lo:?}, {hi:?}]");
        IntervalValue { lo, hi }
    }

    pub fn point(v: Dyadic) -> Self {
        IntervalValue {
            lo: v.clone(),
            hi: v,
        }
    }

    pub fn from_int(v: i64) -> Self {
        IntervalValue::point(Dyadic::from_int(v))
    }

    pub fn zero() -> Self {
        IntervalValue::from_int(0)
    }

    pub fn one() -> Self {
        IntervalValue::from_int(1)
    }

    /// Outward-rounded enclosure of a rational, width at most `2^-precision`.
    pub fn from_rational(q: &BigRational, precision: i64) -> Self {
        let lo = Dyadic::from_rational_floor(q, precision);
        let hi = Dyadic::from_rational_ceil(q, precision);
        IntervalValue { lo, hi }
    }

    pub fn lo(&self) -> &Dyadic {
        &self.lo
    }

    pub fn hi(&self) -> &Dyadic {
        &self.hi
    }

    pub fn width(&self) -> Dyadic {
        &self.hi - &self.lo
    }

    /// `width <= 2^-precision`.
    pub fn is_within(&self, precision: i64) -> bool {
        self.width() <= Dyadic::pow2(-precision)
    }

    pub fn contains(&self, v: &Dyadic) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn contains_rational(&self, q: &BigRational) -> bool {
        &self.lo.to_rational() <= q && q <= &self.hi.to_rational()
    }

    pub fn contains_interval(&self, other: &IntervalValue) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersects(&self, other: &IntervalValue) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Intersection of two enclosures of the same value. `None` if disjoint.
    pub fn intersect(&self, other: &IntervalValue) -> Option<IntervalValue> {
        let lo = self.lo.clone().max(other.lo.clone());
        let hi = self.hi.clone().min(other.hi.clone());
        (lo <= hi).then_some(IntervalValue { lo, hi })
    }

    pub fn is_positive(&self) -> bool {
        self.lo.is_positive()
    }

    pub fn is_nonnegative(&self) -> bool {
        !self.lo.is_negative()
    }

    pub fn add(&self, other: &IntervalValue) -> IntervalValue {
        IntervalValue {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn sub(&self, other: &IntervalValue) -> IntervalValue {
        IntervalValue {
            lo: &self.lo - &other.hi,
            hi: &self.hi - &other.lo,
        }
    }

    pub fn neg(&self) -> IntervalValue {
        IntervalValue {
            lo: -&self.hi,
            hi: -&self.lo,
        }
    }

    /// Exact product (endpoints grow; call [`round_out`](Self::round_out) to trim).
    pub fn mul(&self, other: &IntervalValue) -> IntervalValue {
        if self.is_nonnegative() && other.is_nonnegative() {
            return IntervalValue {
                lo: &self.lo * &other.lo,
                hi: &self.hi * &other.hi,
            };
        }
        let products = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = products.iter().min().cloned().unwrap();
        let hi = products.iter().max().cloned().unwrap();
        IntervalValue { lo, hi }
    }

    pub fn scale_pow2(&self, k: i64) -> IntervalValue {
        IntervalValue {
            lo: self.lo.shl(k),
            hi: self.hi.shl(k),
        }
    }

    /// Enclosure of `self / other`, endpoints on the `2^-precision` grid.
    /// Panics if `other` contains zero.
    pub fn div(&self, other: &IntervalValue, precision: i64) -> IntervalValue {
        assert!(
            other.lo.is_positive() || other.hi.is_negative(),
            "interval division by an enclosure of zero"
        );
        let mut lo: Option<Dyadic> = None;
        let mut hi: Option<Dyadic> = None;
        for a in [&self.lo, &self.hi] {
            for b in [&other.lo, &other.hi] {
                let f = Dyadic::div_floor(a, b, precision);
                let c = Dyadic::div_ceil(a, b, precision);
                lo = Some(match lo {
                    Some(l) if l <= f => l,
                    _ => f,
                });
                hi = Some(match hi {
                    Some(h) if h >= c => h,
                    _ => c,
                });
            }
        }
        IntervalValue {
            lo: lo.unwrap(),
            hi: hi.unwrap(),
        }
    }

    /// Integer power, `k >= 0`, with outward rounding at `precision`
    /// after every multiplication.
    pub fn powi(&self, k: u64, precision: i64) -> IntervalValue {
        let mut result = IntervalValue::one();
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base).round_out(precision);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base).round_out(precision);
            }
        }
        result
    }

    /// Widens the endpoints outward onto the `2^-precision` grid.
    pub fn round_out(&self, precision: i64) -> IntervalValue {
        IntervalValue {
            lo: self.lo.floor_to(precision),
            hi: self.hi.ceil_to(precision),
        }
    }

    pub fn clamp_lo(&self, floor: &Dyadic) -> IntervalValue {
        let lo = if &self.lo < floor {
            floor.clone()
        } else {
            self.lo.clone()
        };
        let hi = if self.hi < lo {
            lo.clone()
        } else {
            self.hi.clone()
        };
        IntervalValue { lo, hi }
    }

    pub fn lo_f64(&self) -> f64 {
        self.lo.to_f64()
    }

    pub fn hi_f64(&self) -> f64 {
        self.hi.to_f64()
    }

    pub fn mid_f64(&self) -> f64 {
        (self.lo.to_f64() + self.hi.to_f64()) / 2.0
    }
}

impl fmt::Debug for IntervalValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.17e}, {:.17e}]", self.lo_f64(), self.hi_f64())
    }
}

/// A real quantity that can be enclosed to any requested absolute precision.
///
/// Implementations must return intervals of width at most `2^-precision`
/// whenever they can, and successive calls must enclose the same value.
pub trait Enclose {
    fn enclose(&self, precision: i64) -> IntervalValue;
}

impl Enclose for Dyadic {
    fn enclose(&self, _precision: i64) -> IntervalValue {
        IntervalValue::point(self.clone())
    }
}

impl Enclose for BigRational {
    fn enclose(&self, precision: i64) -> IntervalValue {
        IntervalValue::from_rational(self, precision)
    }
}

/// A fixed interval cannot be refined; it is returned as is.
impl Enclose for IntervalValue {
    fn enclose(&self, _precision: i64) -> IntervalValue {
        self.clone()
    }
}

impl<T: Enclose + ?Sized> Enclose for &T {
    fn enclose(&self, precision: i64) -> IntervalValue {
        (**self).enclose(precision)
    }
}

/// Adapts a closure to [`Enclose`].
pub struct EncloseFn<F>(pub F);

impl<F: Fn(i64) -> IntervalValue> Enclose for EncloseFn<F> {
    fn enclose(&self, precision: i64) -> IntervalValue {
        (self.0)(precision)
    }
}
