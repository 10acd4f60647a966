//! Exact samplers for the primitive distributions, all driven by a
//! [`BitTape`].
//!
//! Irrational probabilities are never rounded. A Bernoulli draw compares the
//! binary expansion of a uniform point, generated lazily bit by bit, with an
//! interval enclosure of the probability, refining the enclosure when the two
//! cannot be separated at the current precision.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};

use crate::error::{Error, Result};
use crate::exact::{exp_neg_rational, Dyadic, Enclose, IntervalValue, DEFAULT_PRECISION};
use crate::tape::BitTape;

/// Hard cap on rejection-loop attempts.
pub const MAX_ATTEMPTS: u64 = 1 << 20;

/// Beyond this many uniform bits a Bernoulli comparison is declared stuck:
/// the probability enclosure is not being refined.
const MAX_COMPARISON_BITS: i64 = 1 << 14;

/// Returns `true` with probability exactly `q`, where `q` is given by
/// refinable enclosures. Uses two fair bits in expectation.
pub fn bernoulli(tape: &mut BitTape, q: &impl Enclose) -> Result<bool> {
    let mut precision = DEFAULT_PRECISION;
    let mut enc = q.enclose(precision);
    if !enc.hi().is_positive() {
        return Ok(false);
    }
    if enc.lo() >= &Dyadic::one() {
        return Ok(true);
    }
    // u is the uniform point's prefix; the point lies in [u, u + 2^-depth).
    let mut u = Dyadic::zero();
    let mut depth: i64 = 0;
    loop {
        depth += 1;
        if tape.next_bit()? {
            u = &u + &Dyadic::pow2(-depth);
        }
        let upper = &u + &Dyadic::pow2(-depth);
        if &upper <= enc.lo() {
            return Ok(true);
        }
        if &u >= enc.hi() {
            return Ok(false);
        }
        if depth + 2 >= precision {
            if depth > MAX_COMPARISON_BITS {
                return Err(Error::Contract(
                    "probability enclosure does not refine".into(),
                ));
            }
            precision *= 2;
            let refined = q.enclose(precision);
            enc = refined.intersect(&enc).ok_or_else(|| {
                Error::Contract(
                    "refined probability enclosure is disjoint from the previous one".into(),
                )
            })?;
        }
    }
}

/// `Ber(n/d)` for an exact rational.
pub fn bernoulli_rational(tape: &mut BitTape, q: &BigRational) -> Result<bool> {
    bernoulli(tape, q)
}

/// Caches the default-precision enclosure of an expensive quantity.
#[derive(Clone)]
struct Cached<E> {
    inner: E,
    default: Arc<OnceLock<IntervalValue>>,
}

impl<E: Enclose> Cached<E> {
    fn new(inner: E) -> Self {
        Cached {
            inner,
            default: Arc::new(OnceLock::new()),
        }
    }
}

impl<E: Enclose> Enclose for Cached<E> {
    fn enclose(&self, precision: i64) -> IntervalValue {
        if precision <= DEFAULT_PRECISION {
            self.default
                .get_or_init(|| self.inner.enclose(DEFAULT_PRECISION))
                .clone()
        } else {
            self.inner.enclose(precision)
        }
    }
}

/// `e^{-q}` for a rational `q >= 0`.
#[derive(Clone, Debug)]
pub struct ExpNeg(pub BigRational);

impl Enclose for ExpNeg {
    fn enclose(&self, precision: i64) -> IntervalValue {
        exp_neg_rational(&self.0, precision)
    }
}

/// `1 - e^{-q}` for a rational `q >= 0`.
#[derive(Clone, Debug)]
pub struct OneMinusExpNeg(pub BigRational);

impl Enclose for OneMinusExpNeg {
    fn enclose(&self, precision: i64) -> IntervalValue {
        IntervalValue::one().sub(&exp_neg_rational(&self.0, precision))
    }
}

fn exp_neg_one() -> &'static Cached<ExpNeg> {
    static E1: OnceLock<Cached<ExpNeg>> = OnceLock::new();
    E1.get_or_init(|| Cached::new(ExpNeg(BigRational::one())))
}

/// Lazily filled table of `e^{-k/a}` enclosures for `k` in `0..len`.
#[derive(Clone)]
struct ExpTable {
    slots: Arc<Vec<OnceLock<IntervalValue>>>,
}

impl ExpTable {
    const MAX_LEN: u64 = 1 << 16;

    fn new(len: u64) -> Self {
        let len = len.min(Self::MAX_LEN) as usize;
        ExpTable {
            slots: Arc::new((0..len).map(|_| OnceLock::new()).collect()),
        }
    }

    fn get(&self, k: u64, precision: i64, exponent: impl Fn() -> BigRational) -> IntervalValue {
        match self.slots.get(k as usize) {
            Some(slot) if precision <= DEFAULT_PRECISION => slot
                .get_or_init(|| exp_neg_rational(&exponent(), DEFAULT_PRECISION))
                .clone(),
            _ => exp_neg_rational(&exponent(), precision),
        }
    }
}

/// Scale `t > 0` of a discrete Laplace / geometric law; the geometric success
/// probability is `1 - e^{-1/t}`.
#[derive(Clone)]
pub struct LaplaceScale {
    t: BigRational,
    numer: u64,
    denom: u64,
    continue_prob: Cached<ExpNeg>,
    residues: ExpTable,
}

impl LaplaceScale {
    pub fn new(t: BigRational) -> Result<Self> {
        if !t.is_positive() {
            return Err(Error::Domain(format!(
                "Laplace scale must be positive, got {t}"
            )));
        }
        let numer = t
            .numer()
            .to_u64()
            .ok_or_else(|| Error::Domain(format!("Laplace scale numerator too large: {t}")))?;
        let denom = t
            .denom()
            .to_u64()
            .ok_or_else(|| Error::Domain(format!("Laplace scale denominator too large: {t}")))?;
        let inv = t.recip();
        Ok(LaplaceScale {
            continue_prob: Cached::new(ExpNeg(inv)),
            residues: ExpTable::new(numer),
            t,
            numer,
            denom,
        })
    }

    pub fn from_int(t: u64) -> Result<Self> {
        Self::new(BigRational::from_integer(BigInt::from(t)))
    }

    pub fn t(&self) -> &BigRational {
        &self.t
    }

    /// Enclosure of the geometric success probability `1 - e^{-1/t}`.
    pub fn success_prob(&self, precision: i64) -> IntervalValue {
        IntervalValue::one().sub(&self.continue_prob.enclose(precision))
    }

    /// Enclosure of `e^{-1/t}`.
    pub fn decay(&self, precision: i64) -> IntervalValue {
        self.continue_prob.enclose(precision)
    }

    fn residue_accept(&self, u: u64) -> impl Enclose + '_ {
        crate::exact::EncloseFn(move |p: i64| {
            self.residues.get(u, p, || {
                BigRational::new(BigInt::from(u), BigInt::from(self.numer))
            })
        })
    }
}

impl fmt::Debug for LaplaceScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LaplaceScale")
            .field("t", &self.t.to_string())
            .finish()
    }
}

/// `Ber(1 - e^{-1/gamma})`.
pub fn bernoulli_exp(tape: &mut BitTape, gamma: &BigRational) -> Result<bool> {
    if !gamma.is_positive() {
        return Err(Error::Domain("bernoulli_exp requires gamma > 0".into()));
    }
    bernoulli(tape, &OneMinusExpNeg(gamma.recip()))
}

/// Number of failures before the first success of `Ber(1 - e^{-1/t})` coins.
///
/// Supported on `{0, 1, ...}`; costs `1/(1 - e^{-1/t}) = O(t)` coins on average.
pub fn geometric(tape: &mut BitTape, scale: &LaplaceScale) -> Result<u64> {
    let mut k = 0u64;
    // Ber(1 - c) as the complement of Ber(c): same law, same bit cost.
    while bernoulli(tape, &scale.continue_prob)? {
        k += 1;
    }
    Ok(k)
}

/// Geometric with the same law as [`geometric`], using polylog(t) bits.
///
/// With `t = a/b`, draws `u` uniform on `{0..a-1}` accepted with probability
/// `e^{-u/a}` and `v ~ Geo(1 - e^{-1})`; then `a v + u ~ Geo(1 - e^{-1/a})`
/// and dividing by `b` gives `Geo(1 - e^{-b/a})`.
pub fn geometric_fast(tape: &mut BitTape, scale: &LaplaceScale) -> Result<u64> {
    let mut attempts = 0u64;
    let u = loop {
        let u = tape.uniform_range(scale.numer)? - 1;
        if bernoulli(tape, &scale.residue_accept(u))? {
            break u;
        }
        attempts += 1;
        if attempts >= MAX_ATTEMPTS {
            return Err(Error::AttemptCapExceeded { attempts });
        }
    };
    let mut v = 0u64;
    while bernoulli(tape, exp_neg_one())? {
        v += 1;
    }
    let total = u128::from(scale.numer) * u128::from(v) + u128::from(u);
    u64::try_from(total / u128::from(scale.denom)).map_err(|_| Error::Overflow("geometric_fast"))
}

/// Discrete Laplace `Lap_Z(t)`, sampled as the difference of two i.i.d.
/// geometrics.
pub fn discrete_laplace(tape: &mut BitTape, scale: &LaplaceScale) -> Result<i64> {
    let a = geometric_fast(tape, scale)?;
    let b = geometric_fast(tape, scale)?;
    let a = i64::try_from(a).map_err(|_| Error::Overflow("discrete_laplace"))?;
    let b = i64::try_from(b).map_err(|_| Error::Overflow("discrete_laplace"))?;
    Ok(a - b)
}

/// Variance parameter of a discrete Gaussian, with the sampler's cached
/// proposal and acceptance constants.
#[derive(Clone)]
pub struct GaussParam {
    sigma_sq: BigRational,
    proposal_t: u64,
    proposal: LaplaceScale,
    accept: ExpTable,
}

impl GaussParam {
    pub fn new(sigma_sq: BigRational) -> Result<Self> {
        if !sigma_sq.is_positive() {
            return Err(Error::Domain(format!(
                "sigma^2 must be positive, got {sigma_sq}"
            )));
        }
        // floor(sqrt(x)) = floor(sqrt(floor(x)))
        let floor_sigma = sigma_sq.to_integer().sqrt();
        let t = floor_sigma
            .to_u64()
            .ok_or_else(|| Error::Domain("sigma too large".into()))?
            .max(1);
        Ok(GaussParam {
            proposal: LaplaceScale::from_int(t)?,
            accept: ExpTable::new(t.saturating_mul(48).saturating_add(64)),
            proposal_t: t,
            sigma_sq,
        })
    }

    pub fn sigma_sq(&self) -> &BigRational {
        &self.sigma_sq
    }

    /// Scale of the Laplace proposal, `max(1, floor(sigma))`.
    pub fn proposal_scale(&self) -> u64 {
        self.proposal_t
    }

    /// Acceptance exponent `(|y| - sigma^2/t)^2 / (2 sigma^2)`.
    fn accept_exponent(&self, y_abs: u64) -> BigRational {
        let t = BigRational::from_integer(BigInt::from(self.proposal_t));
        let y = BigRational::from_integer(BigInt::from(y_abs));
        let gap = y - &self.sigma_sq / t;
        &gap * &gap / (BigRational::from_integer(2.into()) * &self.sigma_sq)
    }
}

impl fmt::Debug for GaussParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaussParam")
            .field("sigma_sq", &self.sigma_sq.to_string())
            .field("proposal_t", &self.proposal_t)
            .finish()
    }
}

/// Discrete Gaussian `N_Z(0, sigma^2)` by rejection from a discrete Laplace
/// proposal with an exact `Ber(e^{-(|y| - sigma^2/t)^2 / 2 sigma^2})` test.
pub fn discrete_gaussian(tape: &mut BitTape, param: &GaussParam) -> Result<i64> {
    for _ in 0..MAX_ATTEMPTS {
        let y = discrete_laplace(tape, &param.proposal)?;
        let y_abs = y.unsigned_abs();
        let accept = crate::exact::EncloseFn(|p: i64| {
            param.accept.get(y_abs, p, || param.accept_exponent(y_abs))
        });
        if bernoulli(tape, &accept)? {
            return Ok(y);
        }
    }
    Err(Error::AttemptCapExceeded {
        attempts: MAX_ATTEMPTS,
    })
}

/// A draw from a conditioned sampler together with the number of base draws
/// it took.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Truncated {
    pub value: i64,
    pub attempts: u64,
}

/// Draws from `base` until `|value| < bound`.
pub fn truncated_sample(
    tape: &mut BitTape,
    mut base: impl FnMut(&mut BitTape) -> Result<i64>,
    bound: u64,
) -> Result<Truncated> {
    if bound == 0 {
        return Err(Error::Domain("truncation bound must be positive".into()));
    }
    for attempts in 1..=MAX_ATTEMPTS {
        let value = base(tape)?;
        if value.unsigned_abs() < bound {
            return Ok(Truncated { value, attempts });
        }
    }
    Err(Error::AttemptCapExceeded {
        attempts: MAX_ATTEMPTS,
    })
}

/// `Lap_Z(t)` conditioned on `|X| >= threshold`: a fair sign bit, then
/// `threshold + Geo(1 - e^{-1/t})`.
pub fn laplace_tail_sample(
    tape: &mut BitTape,
    scale: &LaplaceScale,
    threshold: u64,
) -> Result<i64> {
    if threshold == 0 {
        return Err(Error::Domain("tail threshold must be at least 1".into()));
    }
    let negative = tape.next_bit()?;
    let magnitude = threshold
        .checked_add(geometric(tape, scale)?)
        .and_then(|m| i64::try_from(m).ok())
        .ok_or(Error::Overflow("laplace_tail_sample"))?;
    Ok(if negative { -magnitude } else { magnitude })
}

/// Helper for callers holding a rational probability as numerator/denominator.
pub fn ratio(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draws<T>(n: usize, seed: u64, mut f: impl FnMut(&mut BitTape) -> T) -> Vec<T> {
        let mut tape = BitTape::seeded(seed);
        (0..n).map(|_| f(&mut tape)).collect()
    }

    #[test]
    fn bernoulli_dyadic_is_exact_and_cheap() {
        let half = ratio(1, 2);
        let mut tape = BitTape::seeded(1);
        let n = 20_000;
        let hits = (0..n)
            .filter(|_| bernoulli(&mut tape, &half).unwrap())
            .count();
        assert_eq!(tape.bits_consumed(), n as u64);
        assert!((hits as f64 / n as f64 - 0.5).abs() < 0.015);
        assert!(!bernoulli(&mut tape, &ratio(0, 1)).unwrap());
        assert!(bernoulli(&mut tape, &ratio(1, 1)).unwrap());
    }

    #[test]
    fn bernoulli_exp_at_gamma_one() {
        let one = ratio(1, 1);
        let n = 100_000;
        let hits = draws(n, 2, |t| bernoulli_exp(t, &one).unwrap())
            .into_iter()
            .filter(|b| *b)
            .count();
        let target = 1.0 - (-1f64).exp();
        assert!((hits as f64 / n as f64 - target).abs() < 0.01);
    }

    #[test]
    fn bernoulli_exp_large_gamma() {
        let gamma = ratio(1 << 20, 1);
        let n = 1_000_000;
        let hits = draws(n, 3, |t| bernoulli_exp(t, &gamma).unwrap())
            .into_iter()
            .filter(|b| *b)
            .count() as f64;
        let q = OneMinusExpNeg(gamma.recip()).enclose(64).mid_f64();
        let sd = (n as f64 * q * (1.0 - q)).sqrt();
        assert!((hits - n as f64 * q).abs() <= 3.0 * sd + 1.0, "hits {hits}");
    }

    #[test]
    fn bernoulli_exp_replays() {
        let g = ratio(3, 2);
        let a = draws(500, 9, |t| bernoulli_exp(t, &g).unwrap());
        let b = draws(500, 9, |t| bernoulli_exp(t, &g).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn geometric_zero_probability() {
        let scale = LaplaceScale::from_int(2).unwrap();
        let n = 100_000;
        let xs = draws(n, 4, |t| geometric(t, &scale).unwrap());
        let zeros = xs.iter().filter(|x| **x == 0).count() as f64 / n as f64;
        assert!((zeros - (1.0 - (-0.5f64).exp())).abs() < 0.01);
        let ones = xs.iter().filter(|x| **x == 1).count() as f64;
        let twos = xs.iter().filter(|x| **x == 2).count() as f64;
        assert!((twos / ones - (-0.5f64).exp()).abs() < 0.03);
    }

    #[test]
    fn geometric_tiny_scale_is_zero() {
        let scale = LaplaceScale::new(ratio(1, 64)).unwrap();
        assert!(draws(10_000, 5, |t| geometric(t, &scale).unwrap())
            .iter()
            .all(|x| *x == 0));
    }

    #[test]
    fn fast_geometric_matches_law() {
        let scale = LaplaceScale::new(ratio(5, 2)).unwrap();
        let n = 100_000;
        let xs = draws(n, 6, |t| geometric_fast(t, &scale).unwrap());
        let q = 1.0 - (-0.4f64).exp();
        for k in 0..4u64 {
            let emp = xs.iter().filter(|x| **x == k).count() as f64 / n as f64;
            let exact = q * (1.0 - q).powi(k as i32);
            assert!((emp - exact).abs() < 0.01, "k={k} emp={emp} exact={exact}");
        }
    }

    #[test]
    fn laplace_zero_mass_and_symmetry() {
        let scale = LaplaceScale::from_int(1).unwrap();
        let n = 100_000;
        let xs = draws(n, 7, |t| discrete_laplace(t, &scale).unwrap());
        let e = std::f64::consts::E;
        let p0 = xs.iter().filter(|x| **x == 0).count() as f64 / n as f64;
        assert!((p0 - (e - 1.0) / (e + 1.0)).abs() < 0.01);
        for k in 1..=3i64 {
            let pos = xs.iter().filter(|x| **x == k).count() as f64 / n as f64;
            let neg = xs.iter().filter(|x| **x == -k).count() as f64 / n as f64;
            assert!((pos - neg).abs() < 0.01);
        }
        let tail = xs.iter().filter(|x| **x >= 3).count() as f64 / n as f64;
        assert!((tail - (-2f64).exp() / (e + 1.0)).abs() < 0.005);
    }

    #[test]
    fn gaussian_tail_and_symmetry() {
        let param = GaussParam::new(ratio(4, 1)).unwrap();
        assert_eq!(param.proposal_scale(), 2);
        let n = 100_000;
        let xs = draws(n, 8, |t| discrete_gaussian(t, &param).unwrap());
        let bound = (-36.0f64 / 8.0).exp();
        let tail = xs.iter().filter(|x| **x >= 6).count() as f64;
        let sd = (n as f64 * bound * (1.0 - bound)).sqrt();
        assert!(tail <= n as f64 * bound + 3.0 * sd);
        for k in 1..=3i64 {
            let pos = xs.iter().filter(|x| **x == k).count() as f64 / n as f64;
            let neg = xs.iter().filter(|x| **x == -k).count() as f64 / n as f64;
            assert!((pos - neg).abs() < 0.01);
        }
    }

    #[test]
    fn gaussian_unit_variance_center_mass() {
        // Oracle: brute-force normalization over |x| <= 40.
        let z: f64 = (-40..=40).map(|x: i32| (-(x * x) as f64 / 2.0).exp()).sum();
        let p0 = 1.0 / z;
        let param = GaussParam::new(ratio(1, 1)).unwrap();
        let n = 100_000;
        let xs = draws(n, 10, |t| discrete_gaussian(t, &param).unwrap());
        let emp = xs.iter().filter(|x| **x == 0).count() as f64 / n as f64;
        assert!((emp - p0).abs() < 0.01, "emp {emp} oracle {p0}");
    }

    #[test]
    fn truncation_edge_cases() {
        let scale = LaplaceScale::from_int(1).unwrap();
        let mut tape = BitTape::seeded(11);
        for _ in 0..1000 {
            let t = truncated_sample(&mut tape, |t| discrete_laplace(t, &scale), 1).unwrap();
            assert_eq!(t.value, 0);
        }
        // A bound nobody reaches: one attempt, base value untouched.
        let mut a = BitTape::seeded(12);
        let mut b = BitTape::seeded(12);
        for _ in 0..1000 {
            let t = truncated_sample(&mut a, |t| discrete_laplace(t, &scale), u64::MAX).unwrap();
            assert_eq!(t.attempts, 1);
            assert_eq!(t.value, discrete_laplace(&mut b, &scale).unwrap());
        }
        let err = truncated_sample(&mut tape, |_| Ok(5), 3).unwrap_err();
        assert!(matches!(err, Error::AttemptCapExceeded { .. }));
    }

    #[test]
    fn tail_sample_support_and_sign() {
        let scale = LaplaceScale::from_int(3).unwrap();
        let n = 100_000;
        let xs = draws(n, 13, |t| laplace_tail_sample(t, &scale, 4).unwrap());
        assert!(xs.iter().all(|x| x.abs() >= 4));
        let pos = xs.iter().filter(|x| **x > 0).count() as f64 / n as f64;
        assert!((pos - 0.5).abs() < 0.01);
        let at_t = xs.iter().filter(|x| x.abs() == 4).count() as f64;
        let at_t1 = xs.iter().filter(|x| x.abs() == 5).count() as f64;
        assert!((at_t / at_t1 - (1.0f64 / 3.0).exp()).abs() < 0.05);
    }

    #[test]
    fn domain_errors() {
        assert!(LaplaceScale::new(ratio(0, 1)).is_err());
        assert!(GaussParam::new(BigRational::from_integer((-1).into())).is_err());
        let mut tape = BitTape::seeded(1);
        assert!(bernoulli_exp(&mut tape, &ratio(0, 1)).is_err());
        let scale = LaplaceScale::from_int(1).unwrap();
        assert!(laplace_tail_sample(&mut tape, &scale, 0).is_err());
    }
}
