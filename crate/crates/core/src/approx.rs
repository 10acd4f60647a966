//! `(ε, δ)`-DP release with truncated discrete Gaussian noise.
//!
//! The reference chain is: plain discrete Gaussian noise
//! ([`ApproxVariant::Gaussian`]), the same noise truncated to `|η| < r`
//! ([`ApproxVariant::Truncated`]), and truncated noise plus a shared shift
//! `ω ∈ {r, 2r, ..., sr}` followed by rounding down to a multiple of `rs`
//! ([`ApproxVariant::ShiftedRounded`]). The production path, [`release`],
//! has the same output law as the last variant but skips the noise draw for
//! every coordinate whose value `sum + ω ± r` stays inside one grid cell.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::counts::{floor_multiple, CountVector};
use crate::error::{Error, Result};
use crate::exact::{exp_neg_rational, exp_pos_of, ln_of, Dyadic, IntervalValue, DEFAULT_PRECISION};
use crate::report::{MechanismResult, Meter};
use crate::samplers::{discrete_gaussian, truncated_sample, GaussParam};
use crate::tape::{BitTape, Category};

/// Fractional bits kept when rounding `σ²` up to a rational.
const SIGMA_SQ_BITS: i64 = 32;

/// Validated parameters of the approximate-DP mechanisms.
#[derive(Clone, Debug)]
pub struct ApproxParams {
    d: usize,
    s: u64,
    epsilon: Option<BigRational>,
    delta: Option<BigRational>,
    gamma: Option<IntervalValue>,
    sigma_sq_enclosure: Option<IntervalValue>,
    gauss: GaussParam,
    r: u64,
    grid: i64,
}

impl ApproxParams {
    /// Derives `γ = δ / (2(e^ε + 1))`, `σ² = 4d ln(2/δ) / ε²` and the
    /// smallest integer `r` certified to satisfy `2 e^{-r²/2σ²} <= γ/d`.
    pub fn derive(epsilon: &BigRational, delta: &BigRational, d: usize, s: u64) -> Result<Self> {
        if !epsilon.is_positive() {
            return Err(Error::Domain("epsilon must be positive".into()));
        }
        if !delta.is_positive() || delta >= &BigRational::one() {
            return Err(Error::Domain("delta must lie in (0, 1)".into()));
        }
        if d == 0 || s == 0 {
            return Err(Error::Domain("d and s must be at least 1".into()));
        }
        let half_eps = epsilon / BigRational::from_integer(2.into());
        if !certify_at_most(delta, |p| exp_neg_rational(&half_eps, p))? {
            return Err(Error::Domain(format!(
                "delta = {delta} violates delta <= e^(-epsilon/2) (the Gaussian privacy bound needs it)"
            )));
        }

        // Absolute precision that still resolves γ/d relatively.
        let tiny = Dyadic::from_rational_floor(delta, 4096)
            .msb()
            .unwrap_or(-4096)
            .min(0);
        let dbits = 64 - (d as u64).leading_zeros() as i64;
        let precision = DEFAULT_PRECISION - tiny + dbits + 16;

        let two = BigRational::from_integer(2.into());
        let e_eps = exp_pos_of(epsilon, precision);
        let denom = e_eps.add(&IntervalValue::one()).scale_pow2(1);
        let gamma = IntervalValue::from_rational(delta, precision + 8).div(&denom, precision);

        let ln_term = ln_of(&(&two / delta), precision)?;
        let factor = BigRational::from_integer(BigInt::from(4 * d as u64)) / (epsilon * epsilon);
        let sigma_sq_enclosure = ln_term
            .mul(&IntervalValue::from_rational(&factor, precision + 16))
            .round_out(precision);
        let sigma_sq = sigma_sq_enclosure.hi().ceil_to(SIGMA_SQ_BITS).to_rational();
        let gauss = GaussParam::new(sigma_sq)?;

        let r = certify_radius(&gauss, &gamma, d, precision)?;
        let grid = grid_size(r, s)?;
        Ok(ApproxParams {
            d,
            s,
            epsilon: Some(epsilon.clone()),
            delta: Some(delta.clone()),
            gamma: Some(gamma),
            sigma_sq_enclosure: Some(sigma_sq_enclosure),
            gauss,
            r,
            grid,
        })
    }

    /// Parameters given directly, for desk-scale experiments on the
    /// mechanisms themselves (no privacy accounting attached).
    pub fn explicit(d: usize, sigma_sq: BigRational, r: u64, s: u64) -> Result<Self> {
        if d == 0 || s == 0 || r == 0 {
            return Err(Error::Domain("d, r and s must be at least 1".into()));
        }
        let gauss = GaussParam::new(sigma_sq)?;
        let grid = grid_size(r, s)?;
        Ok(ApproxParams {
            d,
            s,
            epsilon: None,
            delta: None,
            gamma: None,
            sigma_sq_enclosure: None,
            gauss,
            r,
            grid,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn s(&self) -> u64 {
        self.s
    }
    pub fn r(&self) -> u64 {
        self.r
    }
    /// Grid size `r * s`.
    pub fn grid(&self) -> i64 {
        self.grid
    }
    pub fn epsilon(&self) -> Option<&BigRational> {
        self.epsilon.as_ref()
    }
    pub fn delta(&self) -> Option<&BigRational> {
        self.delta.as_ref()
    }
    pub fn gamma(&self) -> Option<&IntervalValue> {
        self.gamma.as_ref()
    }
    /// Enclosure of the real `4d ln(2/δ)/ε²`.
    pub fn sigma_sq_enclosure(&self) -> Option<&IntervalValue> {
        self.sigma_sq_enclosure.as_ref()
    }
    /// The rational variance the sampler actually uses (never below the
    /// enclosure).
    pub fn sigma_sq(&self) -> &BigRational {
        self.gauss.sigma_sq()
    }
    pub fn gauss(&self) -> &GaussParam {
        &self.gauss
    }

    /// Deterministic accuracy radius `r (2s + 1)`.
    pub fn accuracy_radius(&self) -> i64 {
        self.r as i64 * (2 * self.s as i64 + 1)
    }
}

fn grid_size(r: u64, s: u64) -> Result<i64> {
    r.checked_mul(s)
        .and_then(|g| i64::try_from(g).ok())
        .filter(|g| *g <= i64::MAX / 8)
        .ok_or(Error::Overflow("grid size r*s"))
}

/// Decides `value <= x` for a rational `value` and an irrational `x` given by
/// enclosures, refining until separated.
fn certify_at_most(value: &BigRational, x: impl Fn(i64) -> IntervalValue) -> Result<bool> {
    let mut precision = DEFAULT_PRECISION;
    while precision <= 1 << 13 {
        let enc = x(precision);
        if value <= &enc.lo().to_rational() {
            return Ok(true);
        }
        if value > &enc.hi().to_rational() {
            return Ok(false);
        }
        precision *= 2;
    }
    Err(Error::Domain(
        "could not separate delta from e^(-epsilon/2)".into(),
    ))
}

/// `2 d e^{-r²/2σ²} <= lo(γ)`, certified.
fn radius_certified(
    gauss: &GaussParam,
    gamma: &IntervalValue,
    d: usize,
    r: u64,
    precision: i64,
) -> bool {
    let r = BigRational::from_integer(BigInt::from(r));
    let exponent = &r * &r / (BigRational::from_integer(2.into()) * gauss.sigma_sq());
    let tail = exp_neg_rational(&exponent, precision);
    let lhs = tail.hi() * &Dyadic::from_int(2 * d as i64);
    &lhs <= gamma.lo()
}

fn certify_radius(
    gauss: &GaussParam,
    gamma: &IntervalValue,
    d: usize,
    precision: i64,
) -> Result<u64> {
    if !gamma.lo().is_positive() {
        return Err(Error::Domain(
            "gamma enclosure not separated from zero".into(),
        ));
    }
    // Starting guess from the upper enclosure of 2σ² ln(2d/γ); only used to
    // start the exact search near the answer.
    let two_d = IntervalValue::from_int(2 * d as i64);
    let ratio = two_d.div(gamma, precision);
    let ln_ratio = ln_of(&ratio, 32)?;
    let sigma_sq = IntervalValue::from_rational(gauss.sigma_sq(), 32);
    let x = ln_ratio.mul(&sigma_sq).scale_pow2(1);
    let guess = x.hi().ceil().max(BigInt::zero()).sqrt();
    let mut r = guess.to_u64().unwrap_or(1).max(1);
    while r > 1 && radius_certified(gauss, gamma, d, r - 1, precision) {
        r -= 1;
    }
    while !radius_certified(gauss, gamma, d, r, precision) {
        r = r
            .checked_add(1)
            .ok_or(Error::Overflow("truncation radius"))?;
    }
    Ok(r)
}

/// Reference mechanisms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ApproxVariant {
    /// `sum + N_Z(σ²)^d`.
    Gaussian,
    /// `sum + η` with `η` conditioned on `‖η‖∞ < r`.
    Truncated,
    /// `⌊sum + ω + η⌋_{rs}` with `ω ∈ {r, ..., sr}` uniform and truncated `η`.
    ShiftedRounded,
}

fn check_dims(counts: &CountVector, params: &ApproxParams) -> Result<()> {
    if counts.d() != params.d {
        return Err(Error::Domain(format!(
            "count vector has d = {}, parameters were derived for d = {}",
            counts.d(),
            params.d
        )));
    }
    Ok(())
}

fn add3(a: i64, b: i64, c: i64) -> Result<i64> {
    a.checked_add(b)
        .and_then(|x| x.checked_add(c))
        .ok_or(Error::Overflow("shifted count"))
}

/// `sum + ω + η` rounded down onto the grid.
pub fn shift_and_round(sum: i64, omega: i64, eta: i64, grid: i64) -> Result<i64> {
    Ok(floor_multiple(add3(sum, omega, eta)?, grid))
}

/// Whether `⌊sum + ω - r⌋ ≠ ⌊sum + ω + r⌋` on the grid, i.e. the noise
/// could move the coordinate across a cell edge.
pub fn crosses_boundary(sum: i64, omega: i64, radius: i64, grid: i64) -> bool {
    floor_multiple(sum + omega - radius, grid) != floor_multiple(sum + omega + radius, grid)
}

fn draw_shift(tape: &mut BitTape, params: &ApproxParams) -> Result<i64> {
    let v = tape.scoped(Category::Shift, |t| t.uniform_range(params.s))?;
    Ok(v as i64 * params.r as i64)
}

fn truncated_noise(tape: &mut BitTape, params: &ApproxParams) -> Result<(i64, u64)> {
    tape.scoped(Category::Gaussian, |t| {
        truncated_sample(t, |t| discrete_gaussian(t, &params.gauss), params.r)
    })
    .map(|tr| (tr.value, tr.attempts))
}

/// Runs one of the reference mechanisms.
pub fn release_reference(
    counts: &CountVector,
    params: &ApproxParams,
    variant: ApproxVariant,
    tape: &mut BitTape,
) -> Result<MechanismResult> {
    check_dims(counts, params)?;
    let meter = Meter::start(tape);
    let d = counts.d();
    let mut values = Vec::with_capacity(d);
    let mut attempts = vec![0u64; d];
    match variant {
        ApproxVariant::Gaussian => {
            for (i, slot) in attempts.iter_mut().enumerate() {
                let eta =
                    tape.scoped(Category::Gaussian, |t| discrete_gaussian(t, &params.gauss))?;
                *slot = 1;
                values.push(add3(counts.sum_i64(i), eta, 0)?);
            }
        }
        ApproxVariant::Truncated => {
            // The conditioning event is a product of per-coordinate events,
            // so truncating each coordinate separately has the same law.
            for (i, slot) in attempts.iter_mut().enumerate() {
                let (eta, n) = truncated_noise(tape, params)?;
                *slot = n;
                values.push(add3(counts.sum_i64(i), eta, 0)?);
            }
        }
        ApproxVariant::ShiftedRounded => {
            let omega = draw_shift(tape, params)?;
            return shifted_reference(counts, params, omega, tape, meter);
        }
    }
    let mut report = meter.finish(tape, d);
    report.draws_attempted = attempts;
    Ok(MechanismResult { values, report })
}

/// [`ApproxVariant::ShiftedRounded`] with the shift fixed to `ω = v r`,
/// `v ∈ {1..s}`.
pub fn release_reference_with_shift(
    counts: &CountVector,
    params: &ApproxParams,
    shift_index: u64,
    tape: &mut BitTape,
) -> Result<MechanismResult> {
    check_dims(counts, params)?;
    let omega = shift_value(params, shift_index)?;
    let meter = Meter::start(tape);
    shifted_reference(counts, params, omega, tape, meter)
}

fn shift_value(params: &ApproxParams, shift_index: u64) -> Result<i64> {
    if shift_index == 0 || shift_index > params.s {
        return Err(Error::Domain(format!(
            "shift index {shift_index} outside 1..={}",
            params.s
        )));
    }
    Ok(shift_index as i64 * params.r as i64)
}

fn shifted_reference(
    counts: &CountVector,
    params: &ApproxParams,
    omega: i64,
    tape: &mut BitTape,
    meter: Meter,
) -> Result<MechanismResult> {
    let d = counts.d();
    let mut values = Vec::with_capacity(d);
    let mut attempts = vec![0u64; d];
    for (i, slot) in attempts.iter_mut().enumerate() {
        let (eta, n) = truncated_noise(tape, params)?;
        *slot = n;
        values.push(shift_and_round(counts.sum_i64(i), omega, eta, params.grid)?);
    }
    let mut report = meter.finish(tape, d);
    report.draws_attempted = attempts;
    Ok(MechanismResult { values, report })
}

/// The low-randomness release. Same output law as
/// [`ApproxVariant::ShiftedRounded`].
pub fn release(
    counts: &CountVector,
    params: &ApproxParams,
    tape: &mut BitTape,
) -> Result<MechanismResult> {
    check_dims(counts, params)?;
    let meter = Meter::start(tape);
    let omega = draw_shift(tape, params)?;
    release_inner(counts, params, omega, tape, meter)
}

/// [`release`] with the shift fixed to `ω = v r`.
pub fn release_with_shift(
    counts: &CountVector,
    params: &ApproxParams,
    shift_index: u64,
    tape: &mut BitTape,
) -> Result<MechanismResult> {
    check_dims(counts, params)?;
    let omega = shift_value(params, shift_index)?;
    let meter = Meter::start(tape);
    release_inner(counts, params, omega, tape, meter)
}

fn release_inner(
    counts: &CountVector,
    params: &ApproxParams,
    omega: i64,
    tape: &mut BitTape,
    meter: Meter,
) -> Result<MechanismResult> {
    let d = counts.d();
    let r = params.r as i64;
    let mut values = Vec::with_capacity(d);
    let mut attempts = vec![0u64; d];
    let mut boundary = Vec::new();
    for (i, slot) in attempts.iter_mut().enumerate() {
        let sum = counts.sum_i64(i);
        if crosses_boundary(sum, omega, r, params.grid) {
            let (eta, n) = truncated_noise(tape, params)?;
            *slot = n;
            boundary.push(i);
            values.push(shift_and_round(sum, omega, eta, params.grid)?);
        } else {
            values.push(shift_and_round(sum, omega, 0, params.grid)?);
        }
    }
    let mut report = meter.finish(tape, d);
    report.draws_attempted = attempts;
    report.boundary_coordinates = boundary;
    Ok(MechanismResult { values, report })
}
