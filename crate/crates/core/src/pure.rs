//! `ε`-DP release with discrete Laplace noise.
//!
//! Reference chain: plain `Lap_Z(d/ε)` noise ([`PureVariant::Laplace`]), the
//! same noise plus a shared shift `ω ∈ {m, 2m, ..., sm}` and rounding down to
//! a multiple of `ms` ([`PureVariant::ShiftedRounded`] and its per-coordinate
//! form [`PureVariant::Unrolled`]), and the tail/body split
//! ([`PureVariant::TailBody`]) where each coordinate independently joins the
//! tail set with probability `p = P[|Lap_Z(d/ε)| >= m]`.
//!
//! [`release`] draws the tail set as a `Bin(d, p)` size followed by a uniform
//! subset, and releases body coordinates far from a grid edge without noise.

use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};

use crate::counts::{floor_multiple, CountVector};
use crate::error::{Error, Result};
use crate::exact::{
    exp_neg_rational, exp_pos_of, ln_of, refine, Enclose, IntervalValue, DEFAULT_PRECISION,
};
use crate::point_mass::BinomialCumulative;
use crate::report::{MechanismResult, Meter};
use crate::samplers::{
    bernoulli, discrete_laplace, laplace_tail_sample, truncated_sample, LaplaceScale,
};
use crate::tape::{BitTape, Category};

/// Smallest admissible scale `d/ε` for [`PureParams::derive`].
const MIN_SCALE: i64 = 10;

/// `p = 2 e^{-(m-1)/t} / (e^{1/t} + 1)`, the two-sided tail mass
/// `P[|Lap_Z(t)| >= m]`.
#[derive(Clone)]
pub struct TailMass {
    t: BigRational,
    m: u64,
    cached: Arc<OnceLock<IntervalValue>>,
}

impl TailMass {
    pub fn new(t: BigRational, m: u64) -> Self {
        TailMass {
            t,
            m,
            cached: Arc::new(OnceLock::new()),
        }
    }

    fn compute(&self, precision: i64) -> IntervalValue {
        let inv = self.t.recip();
        let decay = BigRational::from_integer(BigInt::from(self.m - 1)) * &inv;
        refine(precision, 16, |w| {
            let num = exp_neg_rational(&decay, w).scale_pow2(1);
            let den = exp_pos_of(&inv, w).add(&IntervalValue::one());
            num.div(&den, w)
        })
    }
}

impl Enclose for TailMass {
    fn enclose(&self, precision: i64) -> IntervalValue {
        if precision <= DEFAULT_PRECISION {
            self.cached
                .get_or_init(|| self.compute(DEFAULT_PRECISION))
                .clone()
        } else {
            self.compute(precision)
        }
    }
}

impl std::fmt::Debug for TailMass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TailMass(t = {}, m = {})", self.t, self.m)
    }
}

/// Validated parameters of the pure-DP mechanisms.
#[derive(Clone, Debug)]
pub struct PureParams {
    d: usize,
    s: u64,
    epsilon: Option<BigRational>,
    scale: LaplaceScale,
    m: u64,
    grid: i64,
    tail: TailMass,
    tail_size: BinomialCumulative<TailMass>,
}

impl PureParams {
    /// `t = d/ε` and `m = ⌈t ln t ln s⌉ + 1` (ceiling of the enclosure's
    /// upper end).
    pub fn derive(epsilon: &BigRational, d: usize, s: u64) -> Result<Self> {
        if !epsilon.is_positive() {
            return Err(Error::Domain("epsilon must be positive".into()));
        }
        if d == 0 || s == 0 {
            return Err(Error::Domain("d and s must be at least 1".into()));
        }
        let t = BigRational::from_integer(BigInt::from(d as u64)) / epsilon;
        if t <= BigRational::from_integer(MIN_SCALE.into()) {
            return Err(Error::Domain(format!(
                "pure mode requires d/epsilon > {MIN_SCALE}, got d/epsilon = {t}"
            )));
        }
        let m = if s == 1 {
            1
        } else {
            let ln_t = ln_of(&t, DEFAULT_PRECISION)?;
            let ln_s = ln_of(
                &BigRational::from_integer(BigInt::from(s)),
                DEFAULT_PRECISION,
            )?;
            let x = ln_t
                .mul(&ln_s)
                .mul(&IntervalValue::from_rational(&t, DEFAULT_PRECISION + 32));
            x.hi()
                .ceil()
                .to_u64()
                .and_then(|v| v.checked_add(1))
                .ok_or(Error::Overflow("body threshold m"))?
        };
        let mut params = Self::explicit(d, t, m, s)?;
        params.epsilon = Some(epsilon.clone());
        Ok(params)
    }

    /// Parameters given directly: scale `t`, threshold `m` and shift count `s`.
    pub fn explicit(d: usize, t: BigRational, m: u64, s: u64) -> Result<Self> {
        if d == 0 || s == 0 || m == 0 {
            return Err(Error::Domain("d, m and s must be at least 1".into()));
        }
        let scale = LaplaceScale::new(t.clone())?;
        let grid = m
            .checked_mul(s)
            .and_then(|g| i64::try_from(g).ok())
            .filter(|g| *g <= i64::MAX / 8)
            .ok_or(Error::Overflow("grid size m*s"))?;
        let tail = TailMass::new(t, m);
        let tail_size = BinomialCumulative::new(d as u64, tail.clone());
        Ok(PureParams {
            d,
            s,
            epsilon: None,
            scale,
            m,
            grid,
            tail,
            tail_size,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn s(&self) -> u64 {
        self.s
    }
    pub fn m(&self) -> u64 {
        self.m
    }
    /// Grid size `m * s`.
    pub fn grid(&self) -> i64 {
        self.grid
    }
    pub fn epsilon(&self) -> Option<&BigRational> {
        self.epsilon.as_ref()
    }
    /// Laplace scale `t = d/ε`.
    pub fn scale(&self) -> &LaplaceScale {
        &self.scale
    }
    /// The tail-membership probability `p`.
    pub fn tail_mass(&self) -> &TailMass {
        &self.tail
    }

    /// Enclosure of `t ln(d/β) + 2ms`: the `β`-probability accuracy radius.
    pub fn accuracy_radius(&self, beta: &BigRational) -> Result<IntervalValue> {
        if !beta.is_positive() || beta >= &BigRational::one() {
            return Err(Error::Domain("beta must lie in (0, 1)".into()));
        }
        let ratio = BigRational::from_integer(BigInt::from(self.d as u64)) / beta;
        let ln = ln_of(&ratio, DEFAULT_PRECISION)?;
        let t = IntervalValue::from_rational(self.scale.t(), DEFAULT_PRECISION + 32);
        Ok(ln.mul(&t).add(&IntervalValue::from_int(2 * self.grid)))
    }
}

/// Branch taken by one coordinate of [`release`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// Noise drawn from the conditioned tail `|η| >= m`.
    Tail,
    /// Released without noise: the whole body range rounds to one cell.
    Silent,
    /// Noise drawn from the truncated body `|η| < m`.
    Body,
}

/// Internal choices of one [`release`] run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PureTrace {
    /// Tail coordinates, in the order they were drawn.
    pub tail_set: Vec<usize>,
    pub tail_count: u64,
    pub shift: i64,
    pub branches: Vec<Branch>,
}

/// Reference mechanisms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PureVariant {
    /// `sum + Lap_Z(t)^d`.
    Laplace,
    /// `⌊sum + ω + η⌋_{ms}`, noise vector drawn first.
    ShiftedRounded,
    /// The same law with the noise drawn and rounded one coordinate at a time.
    Unrolled,
    /// Independent `Ber(p)` tail membership, tail or truncated body noise.
    TailBody,
}

fn check_dims(counts: &CountVector, params: &PureParams) -> Result<()> {
    if counts.d() != params.d {
        return Err(Error::Domain(format!(
            "count vector has d = {}, parameters were derived for d = {}",
            counts.d(),
            params.d
        )));
    }
    Ok(())
}

fn shift_and_round(sum: i64, omega: i64, eta: i64, grid: i64) -> Result<i64> {
    let v = sum
        .checked_add(omega)
        .and_then(|v| v.checked_add(eta))
        .ok_or(Error::Overflow("shifted count"))?;
    Ok(floor_multiple(v, grid))
}

fn shift_value(params: &PureParams, shift_index: u64) -> Result<i64> {
    if shift_index == 0 || shift_index > params.s {
        return Err(Error::Domain(format!(
            "shift index {shift_index} outside 1..={}",
            params.s
        )));
    }
    Ok(shift_index as i64 * params.m as i64)
}

fn draw_shift(tape: &mut BitTape, params: &PureParams) -> Result<i64> {
    let v = tape.scoped(Category::Shift, |t| t.uniform_range(params.s))?;
    Ok(v as i64 * params.m as i64)
}

fn laplace(tape: &mut BitTape, params: &PureParams) -> Result<i64> {
    tape.scoped(Category::Laplace, |t| discrete_laplace(t, &params.scale))
}

fn body_noise(tape: &mut BitTape, params: &PureParams) -> Result<(i64, u64)> {
    tape.scoped(Category::Laplace, |t| {
        truncated_sample(t, |t| discrete_laplace(t, &params.scale), params.m)
    })
    .map(|tr| (tr.value, tr.attempts))
}

fn tail_noise(tape: &mut BitTape, params: &PureParams) -> Result<i64> {
    tape.scoped(Category::Tail, |t| {
        laplace_tail_sample(t, &params.scale, params.m)
    })
}

/// Runs one of the reference mechanisms. [`PureVariant::TailBody`] draws its
/// shift after the membership coins.
pub fn release_reference(
    counts: &CountVector,
    params: &PureParams,
    variant: PureVariant,
    tape: &mut BitTape,
) -> Result<MechanismResult> {
    check_dims(counts, params)?;
    let meter = Meter::start(tape);
    let d = counts.d();
    match variant {
        PureVariant::Laplace => {
            let mut values = Vec::with_capacity(d);
            for i in 0..d {
                let eta = laplace(tape, params)?;
                values.push(shift_and_round(counts.sum_i64(i), eta, 0, 1)?);
            }
            let mut report = meter.finish(tape, d);
            report.draws_attempted = vec![1; d];
            Ok(MechanismResult { values, report })
        }
        PureVariant::ShiftedRounded => {
            let omega = draw_shift(tape, params)?;
            let noise = (0..d)
                .map(|_| laplace(tape, params))
                .collect::<Result<Vec<_>>>()?;
            let values = noise
                .iter()
                .enumerate()
                .map(|(i, eta)| shift_and_round(counts.sum_i64(i), omega, *eta, params.grid))
                .collect::<Result<Vec<_>>>()?;
            let mut report = meter.finish(tape, d);
            report.draws_attempted = vec![1; d];
            Ok(MechanismResult { values, report })
        }
        PureVariant::Unrolled => {
            let omega = draw_shift(tape, params)?;
            let mut values = Vec::with_capacity(d);
            for i in 0..d {
                let eta = laplace(tape, params)?;
                values.push(shift_and_round(counts.sum_i64(i), omega, eta, params.grid)?);
            }
            let mut report = meter.finish(tape, d);
            report.draws_attempted = vec![1; d];
            Ok(MechanismResult { values, report })
        }
        PureVariant::TailBody => {
            let members = draw_members(tape, params)?;
            let omega = draw_shift(tape, params)?;
            tail_body(counts, params, &members, omega, tape, meter)
        }
    }
}

/// [`PureVariant::TailBody`] with the shift fixed to `ω = v m`.
pub fn release_tail_body_with_shift(
    counts: &CountVector,
    params: &PureParams,
    shift_index: u64,
    tape: &mut BitTape,
) -> Result<MechanismResult> {
    check_dims(counts, params)?;
    let omega = shift_value(params, shift_index)?;
    let meter = Meter::start(tape);
    let members = draw_members(tape, params)?;
    tail_body(counts, params, &members, omega, tape, meter)
}

fn draw_members(tape: &mut BitTape, params: &PureParams) -> Result<Vec<bool>> {
    tape.scoped(Category::Subset, |t| {
        (0..params.d).map(|_| bernoulli(t, &params.tail)).collect()
    })
}

fn tail_body(
    counts: &CountVector,
    params: &PureParams,
    members: &[bool],
    omega: i64,
    tape: &mut BitTape,
    meter: Meter,
) -> Result<MechanismResult> {
    let d = counts.d();
    let mut values = Vec::with_capacity(d);
    let mut attempts = vec![0u64; d];
    let mut tails = Vec::new();
    for (i, slot) in attempts.iter_mut().enumerate() {
        let eta = if members[i] {
            tails.push(i);
            *slot = 1;
            tail_noise(tape, params)?
        } else {
            let (eta, n) = body_noise(tape, params)?;
            *slot = n;
            eta
        };
        values.push(shift_and_round(counts.sum_i64(i), omega, eta, params.grid)?);
    }
    let mut report = meter.finish(tape, d);
    report.draws_attempted = attempts;
    report.tail_coordinates = tails;
    Ok(MechanismResult { values, report })
}

/// The low-randomness release. Same output law as
/// [`PureVariant::ShiftedRounded`].
pub fn release(
    counts: &CountVector,
    params: &PureParams,
    tape: &mut BitTape,
) -> Result<(MechanismResult, PureTrace)> {
    check_dims(counts, params)?;
    let meter = Meter::start(tape);
    let (tail_count, tail_set) = draw_tail_set(tape, params)?;
    let omega = draw_shift(tape, params)?;
    release_inner(counts, params, tail_count, tail_set, omega, tape, meter)
}

/// [`release`] with the shift fixed to `ω = v m`.
pub fn release_with_shift(
    counts: &CountVector,
    params: &PureParams,
    shift_index: u64,
    tape: &mut BitTape,
) -> Result<(MechanismResult, PureTrace)> {
    check_dims(counts, params)?;
    let omega = shift_value(params, shift_index)?;
    let meter = Meter::start(tape);
    let (tail_count, tail_set) = draw_tail_set(tape, params)?;
    release_inner(counts, params, tail_count, tail_set, omega, tape, meter)
}

fn draw_tail_set(tape: &mut BitTape, params: &PureParams) -> Result<(u64, Vec<usize>)> {
    let set = sample_subset(tape, &params.tail_size, params.d)?;
    Ok((set.len() as u64, set))
}

/// A random subset of `{0..d-1}` containing each index independently with
/// probability `p`: the size is drawn from `size_law = Bin(d, p)`, then the
/// members by drawing indices uniformly and rejecting repeats. Members are
/// returned in draw order.
pub fn sample_subset<P: Enclose>(
    tape: &mut BitTape,
    size_law: &BinomialCumulative<P>,
    d: usize,
) -> Result<Vec<usize>> {
    let count = tape.scoped(Category::Binomial, |t| size_law.draw(t))?;
    if count > d as u64 {
        return Err(Error::Contract(format!(
            "subset size {count} exceeds d = {d}"
        )));
    }
    let mut chosen = vec![false; d];
    let mut order = Vec::with_capacity(count as usize);
    tape.scoped(Category::Subset, |t| {
        while (order.len() as u64) < count {
            let i = t.uniform_range(d as u64)? as usize - 1;
            if !chosen[i] {
                chosen[i] = true;
                order.push(i);
            }
        }
        Ok(())
    })?;
    Ok(order)
}

fn release_inner(
    counts: &CountVector,
    params: &PureParams,
    tail_count: u64,
    tail_set: Vec<usize>,
    omega: i64,
    tape: &mut BitTape,
    meter: Meter,
) -> Result<(MechanismResult, PureTrace)> {
    let d = counts.d();
    let m = params.m as i64;
    let mut in_tail = vec![false; d];
    for &i in &tail_set {
        in_tail[i] = true;
    }
    let mut values = Vec::with_capacity(d);
    let mut attempts = vec![0u64; d];
    let mut branches = Vec::with_capacity(d);
    let mut boundary = Vec::new();
    for i in 0..d {
        let sum = counts.sum_i64(i);
        if in_tail[i] {
            let eta = tail_noise(tape, params)?;
            attempts[i] = 1;
            branches.push(Branch::Tail);
            values.push(shift_and_round(sum, omega, eta, params.grid)?);
            continue;
        }
        let low = shift_and_round(sum, omega, -m, params.grid)?;
        let high = shift_and_round(sum, omega, m, params.grid)?;
        if low == high {
            branches.push(Branch::Silent);
            values.push(low);
        } else {
            let (eta, n) = body_noise(tape, params)?;
            attempts[i] = n;
            branches.push(Branch::Body);
            boundary.push(i);
            values.push(shift_and_round(sum, omega, eta, params.grid)?);
        }
    }
    let mut report = meter.finish(tape, d);
    report.draws_attempted = attempts;
    report.boundary_coordinates = boundary;
    let mut sorted = tail_set.clone();
    sorted.sort_unstable();
    report.tail_coordinates = sorted;
    let trace = PureTrace {
        tail_set,
        tail_count,
        shift: omega,
        branches,
    };
    Ok((MechanismResult { values, report }, trace))
}
