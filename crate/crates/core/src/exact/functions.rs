//! Enclosures of the transcendental quantities the mechanisms need.
//!
//! All functions return intervals whose width is at most `2^-precision`
//! (absolute) and which are guaranteed to contain the true real value.
//! Internally they evaluate with a few guard bits, check the achieved width,
//! and retry with more guard bits if rounding ate too much.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Dyadic, Enclose, IntervalValue};
use crate::error::{Error, Result};

/// Evaluates `f(working_precision)` with growing guard bits until the result
/// is narrow enough, then trims it onto a `2^-(precision+2)` grid.
pub(crate) fn refine(
    precision: i64,
    base_guard: i64,
    mut f: impl FnMut(i64) -> IntervalValue,
) -> IntervalValue {
    let mut guard = base_guard.max(8);
    for _ in 0..12 {
        let v = f(precision + guard).round_out(precision + 2);
        if v.is_within(precision) {
            return v;
        }
        guard *= 2;
    }
    f(precision + guard)
}

/// `e^{-y}` for `0 <= y <= 1/2` by the alternating Taylor series.
fn exp_neg_taylor(y: &Dyadic, w: i64) -> IntervalValue {
    let yi = IntervalValue::point(y.clone());
    let mut sum = IntervalValue::one();
    let mut term = IntervalValue::one();
    let cutoff = Dyadic::pow2(-(w + 4));
    let mut k: i64 = 1;
    loop {
        term = term.mul(&yi).div(&IntervalValue::from_int(k), w + 8);
        if term.hi() < &cutoff {
            // Alternating series with decreasing terms: the tail from k on is
            // bounded by the k-th term.
            let bound = term.hi().clone();
            sum = sum.add(&IntervalValue::new(-&bound, bound));
            return sum;
        }
        sum = if k % 2 == 1 {
            sum.sub(&term)
        } else {
            sum.add(&term)
        };
        sum = sum.round_out(w + 8);
        k += 1;
    }
}

/// Enclosure of `e^{-x}` for a dyadic `x >= 0`.
///
/// Panics if `x` is negative.
pub fn exp_neg(x: &Dyadic, precision: i64) -> IntervalValue {
    assert!(!x.is_negative(), "exp_neg requires x >= 0");
    if x.is_zero() {
        return IntervalValue::one();
    }
    // Halve the argument n times so the series converges fast, then square
    // back n times. Each squaring at most doubles the absolute width.
    let n = match x.msb() {
        Some(m) if m >= -2 => m + 3,
        _ => 0,
    };
    let y = x.shl(-n);
    let base = n + 64 - (n.max(1) as u64).leading_zeros() as i64 + 8;
    refine(precision, base, |w| {
        let mut v = exp_neg_taylor(&y, w).clamp_lo(&Dyadic::zero());
        for _ in 0..n {
            v = v.mul(&v).round_out(w);
        }
        v.clamp_lo(&Dyadic::zero())
    })
}

/// Enclosure of `e^{x}` for a dyadic `x >= 0`.
pub fn exp_pos(x: &Dyadic, precision: i64) -> IntervalValue {
    assert!(!x.is_negative(), "exp_pos requires x >= 0");
    if x.is_zero() {
        return IntervalValue::one();
    }
    // e^x = 1 / e^{-x}; relative error is amplified by e^{2x} < 2^{3x}.
    let lift = 3 * x.ceil().to_i64().unwrap_or(1 << 40) + 4;
    refine(precision, 8, |w| {
        let inv = exp_neg(x, w + lift);
        IntervalValue::one().div(&inv, w)
    })
}

/// Enclosure of `e^{-x}` for a nonnegative quantity given by enclosures.
pub fn exp_neg_of(x: &impl Enclose, precision: i64) -> IntervalValue {
    refine(precision, 4, |w| {
        let xe = x.enclose(w).clamp_lo(&Dyadic::zero());
        let lo = exp_neg(xe.hi(), w);
        let hi = exp_neg(xe.lo(), w);
        IntervalValue::new(lo.lo().clone(), hi.hi().clone())
    })
}

/// Enclosure of `e^{x}` for a nonnegative quantity given by enclosures.
pub fn exp_pos_of(x: &impl Enclose, precision: i64) -> IntervalValue {
    let rough = x.enclose(8);
    let lift = 3 * rough.hi().ceil().to_i64().unwrap_or(1 << 40) + 4;
    refine(precision, 8, |w| {
        let xe = x.enclose(w + lift).clamp_lo(&Dyadic::zero());
        let lo = exp_pos(xe.lo(), w);
        let hi = exp_pos(xe.hi(), w);
        IntervalValue::new(lo.lo().clone(), hi.hi().clone())
    })
}

/// `2 atanh(z) = ln((1+z)/(1-z))` for `|z| <= 1/3`, z given as an enclosure.
fn two_atanh(z: &IntervalValue, w: i64) -> IntervalValue {
    let z2 = z.mul(z).round_out(w + 8);
    let mut power = z.clone();
    let mut sum = IntervalValue::zero();
    let mut j: i64 = 0;
    let cutoff = Dyadic::pow2(-(w + 6));
    loop {
        let mag = power.lo().abs().max(power.hi().abs());
        if mag < cutoff {
            // |tail| <= |z|^{2j+1} / (1 - z^2) <= 2 |z|^{2j+1}
            let bound = mag.shl(1);
            sum = sum.add(&IntervalValue::new(-&bound, bound));
            return sum.scale_pow2(1);
        }
        sum = sum
            .add(&power.div(&IntervalValue::from_int(2 * j + 1), w + 8))
            .round_out(w + 8);
        power = power.mul(&z2).round_out(w + 8);
        j += 1;
    }
}

fn ln2_at(w: i64) -> IntervalValue {
    const CACHED: i64 = 1024;
    static LN2: OnceLock<IntervalValue> = OnceLock::new();
    if w <= CACHED {
        return LN2
            .get_or_init(|| {
                let third = IntervalValue::one().div(&IntervalValue::from_int(3), CACHED + 16);
                two_atanh(&third, CACHED + 8)
            })
            .clone();
    }
    let third = IntervalValue::one().div(&IntervalValue::from_int(3), w + 16);
    two_atanh(&third, w + 8)
}

/// Enclosure of `ln x` for a dyadic `x > 0`.
pub fn ln_enclose(x: &Dyadic, precision: i64) -> Result<IntervalValue> {
    if !x.is_positive() {
        return Err(Error::Domain(format!("ln of nonpositive value {x}")));
    }
    if *x == Dyadic::one() {
        return Ok(IntervalValue::zero());
    }
    // x = 2^k f with f in [2/3, 4/3).
    let mut k = x.msb().unwrap();
    let mut f = x.shl(-k);
    if f >= Dyadic::from_rational_floor(&BigRational::new(4.into(), 3.into()), 60) {
        f = f.shl(-1);
        k += 1;
    }
    let kbits = 64 - (k.unsigned_abs().max(1)).leading_zeros() as i64;
    Ok(refine(precision, kbits + 8, |w| {
        let fi = IntervalValue::point(f.clone());
        let one = IntervalValue::one();
        let z = fi.sub(&one).div(&fi.add(&one), w + 8);
        let frac = if f == Dyadic::one() {
            IntervalValue::zero()
        } else {
            two_atanh(&z, w)
        };
        let scale = IntervalValue::from_int(k);
        ln2_at(w + kbits + 4).mul(&scale).add(&frac)
    }))
}

/// Enclosure of `ln x` for a positive quantity given by enclosures.
pub fn ln_of(x: &impl Enclose, precision: i64) -> Result<IntervalValue> {
    let rough = x.enclose(64);
    if !rough.hi().is_positive() {
        return Err(Error::Domain("ln of nonpositive value".into()));
    }
    let mut guard = 8i64;
    loop {
        let xe = x.enclose(precision + guard);
        if xe.lo().is_positive() {
            // Relative width of the input bounds the width of the logarithm.
            let lo = ln_enclose(xe.lo(), precision + 2)?;
            let hi = ln_enclose(xe.hi(), precision + 2)?;
            let v = IntervalValue::new(lo.lo().clone(), hi.hi().clone());
            if v.is_within(precision) || guard > 1 << 16 {
                return Ok(v);
            }
        } else if guard > 1 << 16 {
            return Err(Error::Domain("ln argument not separable from zero".into()));
        }
        guard *= 2;
    }
}

/// Enclosure of `sqrt x` for a dyadic `x > 0`.
pub fn sqrt_enclose(x: &Dyadic, precision: i64) -> Result<IntervalValue> {
    if !x.is_positive() {
        return Err(Error::Domain(format!("sqrt of nonpositive value {x}")));
    }
    let mut w = precision.max(0) + 2;
    // x * 2^{2w}
    let scaled = x.shl(2 * w);
    let floor = scaled.floor();
    let ceil = scaled.ceil();
    let root_lo = floor.sqrt();
    if floor == ceil && &root_lo * &root_lo == floor {
        return Ok(IntervalValue::point(Dyadic::new(root_lo, -w)));
    }
    let mut root_hi = ceil.sqrt();
    if &root_hi * &root_hi != ceil {
        root_hi += BigInt::one();
    }
    let v = IntervalValue::new(Dyadic::new(root_lo, -w), Dyadic::new(root_hi, -w));
    if v.is_within(precision) {
        return Ok(v);
    }
    w += 2;
    let scaled = x.shl(2 * w);
    let lo = scaled.floor().sqrt();
    let hi = scaled.ceil().sqrt() + BigInt::one();
    Ok(IntervalValue::new(Dyadic::new(lo, -w), Dyadic::new(hi, -w)))
}

/// Enclosure of `sqrt x` for a positive quantity given by enclosures.
pub fn sqrt_of(x: &impl Enclose, precision: i64) -> Result<IntervalValue> {
    let mut guard = 8i64;
    loop {
        let xe = x.enclose(precision + guard);
        if xe.lo().is_positive() {
            let lo = sqrt_enclose(xe.lo(), precision + 2)?;
            let hi = sqrt_enclose(xe.hi(), precision + 2)?;
            let v = IntervalValue::new(lo.lo().clone(), hi.hi().clone());
            if v.is_within(precision) || guard > 1 << 16 {
                return Ok(v);
            }
        } else if !xe.hi().is_positive() || guard > 1 << 16 {
            return Err(Error::Domain("sqrt of nonpositive value".into()));
        }
        guard *= 2;
    }
}

/// Enclosure of the binomial probability `C(d,i) p^i (1-p)^(d-i)`.
///
/// `p` is queried at whatever precision the requested width needs; a fixed
/// [`IntervalValue`] argument is used as given, so the result can only be as
/// narrow as that input allows.
pub fn binom_prob_enclose(d: u64, i: u64, p: &impl Enclose, precision: i64) -> IntervalValue {
    assert!(i <= d, "binomial index out of range");
    let coeff = binomial(BigInt::from(d), BigInt::from(i));
    let cbits = coeff.bits() as i64;
    let dbits = 64 - d.max(1).leading_zeros() as i64;
    let coeff = IntervalValue::point(Dyadic::from_bigint(coeff));
    let unit = IntervalValue::new(Dyadic::zero(), Dyadic::one());
    let mut guard = cbits + 2 * dbits + 8;
    let mut last = None;
    for _ in 0..8 {
        let w = precision + guard;
        let pe = p.enclose(w);
        let pe = pe.intersect(&unit).unwrap_or(pe);
        let qe = IntervalValue::one().sub(&pe);
        let v = coeff
            .mul(&pe.powi(i, w))
            .mul(&qe.powi(d - i, w))
            .clamp_lo(&Dyadic::zero())
            .round_out(precision + 2);
        if v.is_within(precision) {
            return v;
        }
        last = Some(v);
        guard *= 2;
    }
    last.unwrap()
}

/// `e^{-q}` for a rational `q >= 0`.
pub fn exp_neg_rational(q: &BigRational, precision: i64) -> IntervalValue {
    assert!(!q.is_negative(), "exp_neg_rational requires q >= 0");
    if q.is_zero() {
        return IntervalValue::one();
    }
    exp_neg_of(q, precision)
}
