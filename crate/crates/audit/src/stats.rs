use std::collections::BTreeSet;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::dist::{DiscreteDist, Histogram};
use crate::{AuditError, Result};

/// Bins with fewer expected counts are pooled with their neighbours.
const MIN_EXPECTED: f64 = 5.0;

/// Result of a chi-square test.
#[derive(Clone, Debug, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Bins left after pooling.
    pub bins: usize,
}

impl ChiSquare {
    fn from_bins(observed: &[f64], expected: &[f64]) -> Self {
        let statistic: f64 = observed
            .iter()
            .zip(expected)
            .map(|(o, e)| {
                if *e > 0.0 {
                    (o - e).powi(2) / e
                } else if *o > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            })
            .sum();
        let df = observed.len().saturating_sub(1);
        ChiSquare {
            statistic,
            df,
            p_value: p_value(statistic, df),
            bins: observed.len(),
        }
    }

    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

fn p_value(statistic: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    if !statistic.is_finite() {
        return 0.0;
    }
    let law = ChiSquared::new(df as f64).expect("df > 0");
    (1.0 - law.cdf(statistic)).clamp(0.0, 1.0)
}

/// Merges consecutive bins until each carries at least `MIN_EXPECTED`
/// expected counts; a short remainder joins the last full bin.
fn pool(cells: impl IntoIterator<Item = (f64, f64)>) -> (Vec<f64>, Vec<f64>) {
    let mut obs = Vec::new();
    let mut exp = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (co, ce) in cells {
        o += co;
        e += ce;
        if e >= MIN_EXPECTED {
            obs.push(o);
            exp.push(e);
            o = 0.0;
            e = 0.0;
        }
    }
    if o > 0.0 || e > 0.0 {
        match (obs.last_mut(), exp.last_mut()) {
            (Some(lo), Some(le)) => {
                *lo += o;
                *le += e;
            }
            _ => {
                obs.push(o);
                exp.push(e);
            }
        }
    }
    (obs, exp)
}

/// Goodness of fit of a sample against an oracle law. Outcomes outside the
/// oracle support share one bin whose expected count comes from the deficit.
pub fn chi_square<K: Ord + Clone>(
    sample: &Histogram<K>,
    reference: &DiscreteDist<K>,
) -> Result<ChiSquare> {
    if sample.total() == 0 {
        return Err(AuditError::EmptyHistogram);
    }
    let n = sample.total() as f64;
    let mut cells: Vec<(f64, f64)> = reference
        .iter()
        .map(|(k, p)| (sample.count(k) as f64, n * p.mid_f64()))
        .collect();
    let outside: u64 = sample
        .iter()
        .filter(|(k, _)| reference.mass(k).is_none())
        .map(|(_, c)| c)
        .sum();
    let outside_expected = n * reference.deficit().to_f64();
    if outside == 0 {
        cells.push((0.0, outside_expected));
    }
    let (mut obs, mut exp) = pool(cells);
    // Pooling would hide samples the oracle says are (almost) impossible.
    if outside > 0 {
        obs.push(outside as f64);
        exp.push(outside_expected);
    }
    Ok(ChiSquare::from_bins(&obs, &exp))
}

/// Homogeneity test between two samples.
pub fn chi_square_two_sample<K: Ord + Clone>(
    a: &Histogram<K>,
    b: &Histogram<K>,
) -> Result<ChiSquare> {
    if a.total() == 0 || b.total() == 0 {
        return Err(AuditError::EmptyHistogram);
    }
    let (na, nb) = (a.total() as f64, b.total() as f64);
    let n = na + nb;
    let keys: BTreeSet<&K> = a
        .iter()
        .map(|(k, _)| k)
        .chain(b.iter().map(|(k, _)| k))
        .collect();

    // Pool on the smaller expected count of the two rows.
    let mut rows: Vec<(f64, f64)> = Vec::new();
    let (mut ca, mut cb) = (0.0, 0.0);
    for k in keys {
        ca += a.count(k) as f64;
        cb += b.count(k) as f64;
        let total = ca + cb;
        if total * na.min(nb) / n >= MIN_EXPECTED {
            rows.push((ca, cb));
            ca = 0.0;
            cb = 0.0;
        }
    }
    if ca + cb > 0.0 {
        match rows.last_mut() {
            Some(last) => {
                last.0 += ca;
                last.1 += cb;
            }
            None => rows.push((ca, cb)),
        }
    }
    let mut statistic = 0.0;
    for (oa, ob) in &rows {
        let t = oa + ob;
        let ea = t * na / n;
        let eb = t * nb / n;
        statistic += (oa - ea).powi(2) / ea + (ob - eb).powi(2) / eb;
    }
    let df = rows.len().saturating_sub(1);
    Ok(ChiSquare {
        statistic,
        df,
        p_value: p_value(statistic, df),
        bins: rows.len(),
    })
}

/// Total variation distance between a sample and an oracle law.
pub fn tv_distance<K: Ord + Clone>(
    sample: &Histogram<K>,
    reference: &DiscreteDist<K>,
) -> Result<f64> {
    if sample.total() == 0 {
        return Err(AuditError::EmptyHistogram);
    }
    let keys: BTreeSet<&K> = sample
        .iter()
        .map(|(k, _)| k)
        .chain(reference.support())
        .collect();
    Ok(0.5
        * keys
            .into_iter()
            .map(|k| (sample.freq(k) - reference.prob(k)).abs())
            .sum::<f64>())
}

/// Total variation distance between two samples.
pub fn tv_hist<K: Ord + Clone>(a: &Histogram<K>, b: &Histogram<K>) -> Result<f64> {
    if a.total() == 0 || b.total() == 0 {
        return Err(AuditError::EmptyHistogram);
    }
    let keys: BTreeSet<&K> = a
        .iter()
        .map(|(k, _)| k)
        .chain(b.iter().map(|(k, _)| k))
        .collect();
    Ok(0.5
        * keys
            .into_iter()
            .map(|k| (a.freq(k) - b.freq(k)).abs())
            .sum::<f64>())
}

/// Total variation distance between two oracle laws (midpoint masses).
pub fn tv_dists<K: Ord + Clone>(a: &DiscreteDist<K>, b: &DiscreteDist<K>) -> f64 {
    let keys: BTreeSet<&K> = a.support().chain(b.support()).collect();
    0.5 * keys
        .into_iter()
        .map(|k| (a.prob(k) - b.prob(k)).abs())
        .sum::<f64>()
}
