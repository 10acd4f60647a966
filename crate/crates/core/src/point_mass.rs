//! Entropy-optimal sampling from a finite distribution whose cumulative
//! probabilities are only available as refinable enclosures.
//!
//! A uniform point `u` in `[0, 1)` is revealed one bit at a time. As soon as
//! the dyadic cell `[u, u + 2^-t]` fits between two consecutive cumulative
//! enclosures, the corresponding outcome is returned. This uses at most
//! `H(X) + O(1)` fair bits in expectation.

use std::sync::{Arc, OnceLock};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{binom_prob_enclose, Dyadic, Enclose, IntervalValue, DEFAULT_PRECISION};
use crate::tape::BitTape;

/// Cumulative probabilities `P_0 = 0 <= P_1 <= ... <= P_k = 1` of a law on
/// `{1, ..., k}`.
pub trait CumulativeOracle {
    /// Support size `k`.
    fn outcomes(&self) -> usize;

    /// Enclosure of `P_i` with width at most `2^-precision`, `0 <= i <= k`.
    fn cumulative(&self, i: usize, precision: i64) -> IntervalValue;

    /// All `k + 1` cumulative enclosures at once.
    fn table(&self, precision: i64) -> Vec<IntervalValue> {
        (0..=self.outcomes())
            .map(|i| self.cumulative(i, precision))
            .collect()
    }
}

/// Outcome of one draw plus the number of bits it read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PointMassDraw {
    /// Selected outcome in `1..=k`.
    pub index: usize,
    pub depth: u32,
}

fn validate(table: &[IntervalValue]) -> Result<()> {
    for (i, pair) in table.windows(2).enumerate() {
        if pair[1].hi() < pair[0].lo() {
            return Err(Error::Contract(format!(
                "cumulative probabilities decrease between {i} and {}",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Samples outcome `i` with probability `P_i - P_{i-1}`.
pub fn sample_point_mass(tape: &mut BitTape, target: &impl CumulativeOracle) -> Result<usize> {
    sample_point_mass_traced(tape, target).map(|d| d.index)
}

/// [`sample_point_mass`], also reporting the loop depth.
pub fn sample_point_mass_traced(
    tape: &mut BitTape,
    target: &impl CumulativeOracle,
) -> Result<PointMassDraw> {
    let k = target.outcomes();
    if k == 0 {
        return Err(Error::Contract("empty support".into()));
    }
    let mut precision = DEFAULT_PRECISION;
    let mut table = target.table(precision);
    if table.len() != k + 1 {
        return Err(Error::Contract("cumulative table has wrong length".into()));
    }
    validate(&table)?;

    let mut u = Dyadic::zero();
    let mut depth: i64 = 0;
    loop {
        let upper = &u + &Dyadic::pow2(-depth);
        // The only candidate is the first cell whose upper enclosure clears
        // the whole dyadic interval; it wins if its lower edge is also clear.
        if let Some(i) = (1..=k).find(|&i| table[i].lo() >= &upper) {
            if table[i - 1].hi() <= &u {
                return Ok(PointMassDraw {
                    index: i,
                    depth: depth as u32,
                });
            }
        }
        if depth + 2 >= precision {
            if precision >= 1 << 14 {
                return Err(Error::Contract(
                    "cumulative enclosures do not refine".into(),
                ));
            }
            precision *= 2;
            let refined = target.table(precision);
            validate(&refined)?;
            table = refined
                .iter()
                .zip(&table)
                .map(|(new, old)| {
                    new.intersect(old).ok_or_else(|| {
                        Error::Contract("refined enclosure is disjoint from a coarser one".into())
                    })
                })
                .collect::<Result<_>>()?;
        }
        depth += 1;
        if tape.next_bit()? {
            u = &u + &Dyadic::pow2(-depth);
        }
    }
}

/// A finite law with exact rational probabilities.
#[derive(Clone, Debug)]
pub struct RationalLaw {
    cumulative: Vec<BigRational>,
}

impl RationalLaw {
    pub fn new(probs: &[BigRational]) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|p| p.is_negative()) {
            return Err(Error::Domain(
                "probabilities must be nonnegative and non-empty".into(),
            ));
        }
        let mut cumulative = Vec::with_capacity(probs.len() + 1);
        let mut acc = BigRational::zero();
        cumulative.push(acc.clone());
        for p in probs {
            acc += p;
            cumulative.push(acc.clone());
        }
        if !acc.is_one() {
            return Err(Error::Domain(format!("probabilities sum to {acc}, not 1")));
        }
        Ok(RationalLaw { cumulative })
    }
}

impl CumulativeOracle for RationalLaw {
    fn outcomes(&self) -> usize {
        self.cumulative.len() - 1
    }

    fn cumulative(&self, i: usize, precision: i64) -> IntervalValue {
        IntervalValue::from_rational(&self.cumulative[i], precision)
    }
}

/// Cumulative law of `Bin(d, p)` on outcomes `1..=d+1` (outcome `i` is
/// `i - 1` successes). Caches the default-precision table.
pub struct BinomialCumulative<P> {
    d: u64,
    p: P,
    cached: Arc<OnceLock<Vec<IntervalValue>>>,
}

impl<P: Clone> Clone for BinomialCumulative<P> {
    fn clone(&self) -> Self {
        BinomialCumulative {
            d: self.d,
            p: self.p.clone(),
            cached: Arc::clone(&self.cached),
        }
    }
}

impl<P: std::fmt::Debug> std::fmt::Debug for BinomialCumulative<P> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BinomialCumulative")
            .field("d", &self.d)
            .field("p", &self.p)
            .finish()
    }
}

impl<P: Enclose> BinomialCumulative<P> {
    pub fn new(d: u64, p: P) -> Self {
        BinomialCumulative {
            d,
            p,
            cached: Arc::new(OnceLock::new()),
        }
    }

    fn compute(&self, precision: i64) -> Vec<IntervalValue> {
        let terms = self.d + 1;
        let extra = 64 - terms.leading_zeros() as i64 + 1;
        let mut out = Vec::with_capacity(terms as usize + 1);
        let mut acc = IntervalValue::zero();
        out.push(acc.clone());
        for j in 0..self.d {
            acc = acc.add(&binom_prob_enclose(self.d, j, &self.p, precision + extra));
            out.push(acc.clamp_lo(&Dyadic::zero()));
        }
        out.push(IntervalValue::one());
        out
    }

    /// Draws `Bin(d, p)`.
    pub fn draw(&self, tape: &mut BitTape) -> Result<u64> {
        sample_point_mass(tape, self).map(|i| i as u64 - 1)
    }
}

impl<P: Enclose> CumulativeOracle for BinomialCumulative<P> {
    fn outcomes(&self) -> usize {
        self.d as usize + 1
    }

    fn cumulative(&self, i: usize, precision: i64) -> IntervalValue {
        self.table(precision)[i].clone()
    }

    fn table(&self, precision: i64) -> Vec<IntervalValue> {
        if precision <= DEFAULT_PRECISION {
            self.cached
                .get_or_init(|| self.compute(DEFAULT_PRECISION))
                .clone()
        } else {
            self.compute(precision)
        }
    }
}

/// `Bin(d, p)` drawn through the point-mass sampler; `O(log d)` bits expected.
pub fn binomial_draw(tape: &mut BitTape, d: u64, p: &impl Enclose) -> Result<u64> {
    BinomialCumulative::new(d, p).draw(tape)
}

/// Shannon entropy in bits of a law given by `f64` probabilities; reporting only.
pub fn entropy_bits(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| -p * p.log2())
        .sum()
}
