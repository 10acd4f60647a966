//! Exact output laws of the reference mechanisms.
//!
//! Laws conditional on a shift are pushforwards of a noise law under
//! `η ↦ ⌊sum + ω + η⌋_grid`; unconditional laws average those over the `s`
//! shifts. Joint laws over vectors mix products of the conditional
//! per-coordinate laws, since coordinates are only coupled through `ω`.

use std::collections::BTreeMap;

use meterdp::approx::ApproxParams;
use meterdp::exact::{exp_neg_rational, exp_pos_of};
use meterdp::pure::PureParams;
use meterdp::{floor_multiple, CountVector, Dyadic, IntervalValue};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::dist::{DiscreteDist, ORACLE_PRECISION};
use crate::{AuditError, Result};

/// Default bound on the mass an oracle may leave out.
pub const DEFAULT_TAIL_TOL: f64 = 1.0 / (1u64 << 30) as f64;

/// Largest support an oracle will enumerate per coordinate.
const MAX_POINTS: u64 = 1 << 20;

fn rat(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn uniform_weight(s: u64) -> IntervalValue {
    IntervalValue::one().div(&IntervalValue::from_int(s as i64), ORACLE_PRECISION)
}

fn normalize(
    weights: BTreeMap<i64, IntervalValue>,
    z: &IntervalValue,
    deficit: Dyadic,
) -> DiscreteDist<i64> {
    let mass = weights
        .into_iter()
        .map(|(k, w)| (k, w.div(z, ORACLE_PRECISION).clamp_lo(&Dyadic::zero())))
        .collect();
    DiscreteDist::new(mass, deficit)
}

fn gaussian_weight(eta: i64, two_sigma_sq: &BigRational) -> IntervalValue {
    exp_neg_rational(&(rat(eta * eta) / two_sigma_sq), ORACLE_PRECISION)
}

/// `N_Z(σ²)` conditioned on `|η| < r`. Exact up to enclosure width.
pub fn truncated_gaussian_law(sigma_sq: &BigRational, r: u64) -> Result<DiscreteDist<i64>> {
    if r == 0 || 2 * r > MAX_POINTS {
        return Err(AuditError::OracleSize(format!("truncation radius {r}")));
    }
    let two = rat(2) * sigma_sq;
    let r = r as i64;
    let weights: BTreeMap<i64, IntervalValue> =
        (1 - r..r).map(|e| (e, gaussian_weight(e, &two))).collect();
    let z = weights
        .values()
        .fold(IntervalValue::zero(), |a, w| a.add(w));
    Ok(normalize(weights, &z, Dyadic::zero()))
}

/// `N_Z(σ²)` on `|η| <= K` with the normalizer enclosing the omitted tails.
pub fn gaussian_law(sigma_sq: &BigRational, tail_tol: f64) -> Result<DiscreteDist<i64>> {
    let s2 = sigma_sq.to_f64().unwrap_or(f64::MAX);
    let k = (2.0 * s2 * (4.0 / tail_tol).ln()).sqrt().ceil() as u64 + 1;
    if 2 * k > MAX_POINTS {
        return Err(AuditError::OracleSize(format!(
            "Gaussian support radius {k}"
        )));
    }
    let k = k as i64;
    let two = rat(2) * sigma_sq;
    let weights: BTreeMap<i64, IntervalValue> =
        (-k..=k).map(|e| (e, gaussian_weight(e, &two))).collect();
    let kept = weights
        .values()
        .fold(IntervalValue::zero(), |a, w| a.add(w));
    // (K+j)² >= (K+1)² + 2(K+1)(j-1): geometric bound on each omitted tail.
    let first = gaussian_weight(k + 1, &two);
    let ratio = exp_neg_rational(&(rat(2 * (k + 1)) / &two), ORACLE_PRECISION);
    let tail = first
        .div(&IntervalValue::one().sub(&ratio), ORACLE_PRECISION)
        .scale_pow2(1);
    let z = IntervalValue::new(kept.lo().clone(), kept.add(&tail).hi().clone());
    let deficit = tail.div(&kept, ORACLE_PRECISION).hi().clone();
    Ok(normalize(weights, &z, deficit))
}

/// `P[X >= a]` for `X ~ Lap_Z(t)`.
pub fn laplace_upper_tail(t: &BigRational, a: i64) -> IntervalValue {
    let inv = t.recip();
    let denom = IntervalValue::one().add(&exp_neg_rational(&inv, ORACLE_PRECISION));
    let far =
        |k: i64| exp_neg_rational(&(rat(k) * &inv), ORACLE_PRECISION).div(&denom, ORACLE_PRECISION);
    if a >= 1 {
        far(a)
    } else {
        IntervalValue::one().sub(&far(1 - a))
    }
}

/// `P[a <= X <= b]` for `X ~ Lap_Z(t)`.
pub fn laplace_interval_mass(t: &BigRational, a: i64, b: i64) -> IntervalValue {
    if a > b {
        return IntervalValue::zero();
    }
    // Stay on the side of zero where the closed form does not cancel.
    if a >= 1 || b <= -1 {
        let (a, b) = if a >= 1 { (a, b) } else { (-b, -a) };
        return laplace_upper_tail(t, a)
            .sub(&laplace_upper_tail(t, b + 1))
            .clamp_lo(&Dyadic::zero());
    }
    IntervalValue::one()
        .sub(&laplace_upper_tail(t, b + 1))
        .sub(&laplace_upper_tail(t, 1 - a))
        .clamp_lo(&Dyadic::zero())
}

/// Radius `K` with `P[|Lap_Z(t)| >= K] <= tail_tol`, and that exact bound.
fn laplace_radius(t: &BigRational, tail_tol: f64) -> Result<(i64, Dyadic)> {
    let tf = t.to_f64().unwrap_or(f64::MAX);
    let k = (tf * (2.0 / tail_tol).ln()).ceil() as u64 + 1;
    if k > MAX_POINTS {
        return Err(AuditError::OracleSize(format!(
            "Laplace support radius {k}"
        )));
    }
    let k = k as i64;
    let tail = laplace_upper_tail(t, k).scale_pow2(1);
    Ok((k, tail.hi().clone()))
}

/// Pmf of `Lap_Z(t)` on `|x| < K`, the rest counted as deficit.
pub fn laplace_law(t: &BigRational, tail_tol: f64) -> Result<DiscreteDist<i64>> {
    let (k, deficit) = laplace_radius(t, tail_tol)?;
    let inv = t.recip();
    let e = exp_pos_of(&inv, ORACLE_PRECISION);
    let c = e
        .sub(&IntervalValue::one())
        .div(&e.add(&IntervalValue::one()), ORACLE_PRECISION);
    let mass = (1 - k..k)
        .map(|x| {
            let w = exp_neg_rational(&(rat(x.abs()) * &inv), ORACLE_PRECISION);
            (x, c.mul(&w).round_out(ORACLE_PRECISION))
        })
        .collect();
    Ok(DiscreteDist::new(mass, deficit))
}

/// Renormalized restriction of a finite law to keys satisfying `keep`.
pub fn conditioned(law: &DiscreteDist<i64>, keep: impl Fn(i64) -> bool) -> DiscreteDist<i64> {
    let weights: BTreeMap<i64, IntervalValue> = law
        .iter()
        .filter(|(k, _)| keep(**k))
        .map(|(k, p)| (*k, p.clone()))
        .collect();
    let z = weights
        .values()
        .fold(IntervalValue::zero(), |a, w| a.add(w));
    normalize(weights, &z, Dyadic::zero())
}

fn check_shift(s: u64) -> Result<()> {
    if s > MAX_POINTS {
        return Err(AuditError::OracleSize(format!("{s} shifts")));
    }
    Ok(())
}

/// Law of one coordinate of the shifted-and-rounded approximate mechanism
/// given `ω`, from a precomputed truncated noise law.
pub fn approx_coord_given_shift(
    sum: i64,
    omega: i64,
    noise: &DiscreteDist<i64>,
    grid: i64,
) -> DiscreteDist<i64> {
    noise.map(|e| floor_multiple(sum + omega + e, grid))
}

/// Per-coordinate law of the shifted-and-rounded approximate mechanism.
/// The law is finite; `tail_tol` bounds the total enclosure width.
pub fn oracle_coord_dist_approx(
    sum: i64,
    params: &ApproxParams,
    tail_tol: f64,
) -> Result<DiscreteDist<i64>> {
    check_shift(params.s())?;
    let noise = truncated_gaussian_law(params.sigma_sq(), params.r())?;
    let w = uniform_weight(params.s());
    let parts: Vec<_> = (1..=params.s())
        .map(|v| {
            let omega = (v * params.r()) as i64;
            (
                w.clone(),
                approx_coord_given_shift(sum, omega, &noise, params.grid()),
            )
        })
        .collect();
    let law = DiscreteDist::mixture(&parts);
    check_width(&law, tail_tol)?;
    Ok(law)
}

/// Per-coordinate law of the truncated approximate mechanism, `sum + η`.
pub fn oracle_truncated_approx(sum: i64, params: &ApproxParams) -> Result<DiscreteDist<i64>> {
    Ok(truncated_gaussian_law(params.sigma_sq(), params.r())?.map(|e| sum + e))
}

/// Joint law of the shifted-and-rounded approximate mechanism.
pub fn oracle_joint_approx(
    counts: &CountVector,
    params: &ApproxParams,
) -> Result<DiscreteDist<Vec<i64>>> {
    check_shift(params.s())?;
    let noise = truncated_gaussian_law(params.sigma_sq(), params.r())?;
    let w = uniform_weight(params.s());
    let parts: Vec<_> = (1..=params.s())
        .map(|v| {
            let omega = (v * params.r()) as i64;
            let coords: Vec<_> = counts
                .sums()
                .iter()
                .map(|s| approx_coord_given_shift(*s as i64, omega, &noise, params.grid()))
                .collect();
            (w.clone(), DiscreteDist::product(&coords))
        })
        .collect();
    Ok(DiscreteDist::mixture(&parts))
}

/// Law of one coordinate of the shifted-and-rounded pure mechanism given
/// `ω`: closed-form Laplace mass of each grid cell.
pub fn pure_coord_given_shift(
    sum: i64,
    omega: i64,
    params: &PureParams,
    tail_tol: f64,
) -> Result<DiscreteDist<i64>> {
    let t = params.scale().t();
    let (k, deficit) = laplace_radius(t, tail_tol)?;
    let grid = params.grid();
    let base = sum + omega;
    let first = floor_multiple(base - k + 1, grid);
    let last = floor_multiple(base + k - 1, grid);
    let mut mass = BTreeMap::new();
    let mut cell = first;
    while cell <= last {
        let lo = cell - base;
        let hi = cell + grid - 1 - base;
        mass.insert(
            cell,
            laplace_interval_mass(t, lo, hi).round_out(ORACLE_PRECISION),
        );
        cell += grid;
    }
    Ok(DiscreteDist::new(mass, deficit))
}

/// Per-coordinate law of the shifted-and-rounded pure mechanism.
pub fn oracle_coord_dist_pure(
    sum: i64,
    params: &PureParams,
    tail_tol: f64,
) -> Result<DiscreteDist<i64>> {
    check_shift(params.s())?;
    let w = uniform_weight(params.s());
    let parts = (1..=params.s())
        .map(|v| {
            let omega = (v * params.m()) as i64;
            Ok((
                w.clone(),
                pure_coord_given_shift(sum, omega, params, tail_tol)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscreteDist::mixture(&parts))
}

/// Joint law of the shifted-and-rounded pure mechanism.
pub fn oracle_joint_pure(
    counts: &CountVector,
    params: &PureParams,
    tail_tol: f64,
) -> Result<DiscreteDist<Vec<i64>>> {
    check_shift(params.s())?;
    let w = uniform_weight(params.s());
    let parts = (1..=params.s())
        .map(|v| {
            let omega = (v * params.m()) as i64;
            let coords = counts
                .sums()
                .iter()
                .map(|s| pure_coord_given_shift(*s as i64, omega, params, tail_tol))
                .collect::<Result<Vec<_>>>()?;
            Ok((w.clone(), DiscreteDist::product(&coords)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscreteDist::mixture(&parts))
}

fn check_width(law: &DiscreteDist<i64>, tail_tol: f64) -> Result<()> {
    let width: f64 = law.iter().map(|(_, p)| p.width().to_f64()).sum();
    if width > tail_tol {
        return Err(AuditError::OracleSize(format!(
            "enclosure widths sum to {width:e}, above {tail_tol:e}"
        )));
    }
    Ok(())
}

/// `P[|X| >= m]` for `X ~ Lap_Z(t)`, for cross-checking the tail mass `p`.
pub fn laplace_two_sided_tail(t: &BigRational, m: i64) -> IntervalValue {
    if m <= 0 {
        return IntervalValue::one();
    }
    laplace_upper_tail(t, m).scale_pow2(1)
}
