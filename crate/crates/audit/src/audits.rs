use std::collections::BTreeMap;

use meterdp::exact::exp_pos_of;
use meterdp::{CountVector, Dyadic, IntervalValue, RandomnessReport, Rational};
use serde::Serialize;

use crate::dist::{DiscreteDist, ORACLE_PRECISION};
use crate::{AuditError, Result};

/// Bit usage over a batch of runs.
#[derive(Clone, Debug, Serialize)]
pub struct RandomnessSummary {
    pub runs: u64,
    pub mean_bits: f64,
    pub p50_bits: u64,
    pub p90_bits: u64,
    pub p99_bits: u64,
    pub max_bits: u64,
    pub mean_noise_bits: f64,
    pub mean_bits_by_category: BTreeMap<String, f64>,
    pub mean_boundary_coordinates: f64,
    pub mean_tail_coordinates: f64,
}

pub fn randomness_audit(reports: &[RandomnessReport]) -> Result<RandomnessSummary> {
    if reports.is_empty() {
        return Err(AuditError::InsufficientTrials {
            trials: 0,
            beta: 0.0,
            needed: 1,
        });
    }
    let n = reports.len() as f64;
    let mut totals: Vec<u64> = reports.iter().map(|r| r.bits_total).collect();
    totals.sort_unstable();
    let quantile = |q: f64| totals[((totals.len() - 1) as f64 * q).round() as usize];
    let mut by_category = BTreeMap::new();
    for r in reports {
        for (cat, bits) in r.bits_by_category.iter() {
            *by_category.entry(cat.name().to_string()).or_insert(0.0) += bits as f64 / n;
        }
    }
    Ok(RandomnessSummary {
        runs: reports.len() as u64,
        mean_bits: totals.iter().sum::<u64>() as f64 / n,
        p50_bits: quantile(0.5),
        p90_bits: quantile(0.9),
        p99_bits: quantile(0.99),
        max_bits: *totals.last().unwrap(),
        mean_noise_bits: reports.iter().map(|r| r.noise_bits() as f64).sum::<f64>() / n,
        mean_bits_by_category: by_category,
        mean_boundary_coordinates: reports
            .iter()
            .map(|r| r.boundary_coordinates.len() as f64)
            .sum::<f64>()
            / n,
        mean_tail_coordinates: reports
            .iter()
            .map(|r| r.tail_coordinates.len() as f64)
            .sum::<f64>()
            / n,
    })
}

/// Empirical `(α, β)` accuracy check.
#[derive(Clone, Debug, Serialize)]
pub struct AccuracyAudit {
    pub runs: u64,
    /// Lower end of the enclosure of `α`.
    pub alpha: f64,
    pub beta: f64,
    pub exceedances: u64,
    pub rate: f64,
    /// `β + 3 sqrt(β(1-β)/runs)`.
    pub allowed_rate: f64,
    pub max_error: u64,
    pub pass: bool,
}

/// Counts runs with `‖y - sum‖∞ > α`. An error inside the enclosure of `α`
/// counts as an exceedance.
pub fn accuracy_audit(
    outputs: &[Vec<i64>],
    sums: &[u64],
    alpha: &IntervalValue,
    beta: f64,
) -> Result<AccuracyAudit> {
    let runs = outputs.len() as u64;
    let needed = if beta > 0.0 {
        (9.0 * (1.0 - beta) / beta).ceil() as u64
    } else {
        1
    };
    if runs < needed.max(1) {
        return Err(AuditError::InsufficientTrials {
            trials: runs,
            beta,
            needed,
        });
    }
    let mut exceedances = 0;
    let mut max_error = 0u64;
    for y in outputs {
        let err = y
            .iter()
            .zip(sums)
            .map(|(v, s)| v.abs_diff(*s as i64))
            .max()
            .unwrap_or(0);
        max_error = max_error.max(err);
        if &Dyadic::from_int(err as i64) > alpha.lo() {
            exceedances += 1;
        }
    }
    let rate = exceedances as f64 / runs as f64;
    let allowed_rate = beta + 3.0 * (beta * (1.0 - beta) / runs as f64).sqrt();
    Ok(AccuracyAudit {
        runs,
        alpha: alpha.lo().to_f64(),
        beta,
        exceedances,
        rate,
        allowed_rate,
        max_error,
        pass: rate <= allowed_rate,
    })
}

/// Oracle privacy check between the output laws on two neighbouring inputs.
#[derive(Clone, Debug, Serialize)]
pub struct PrivacyAuditResult {
    /// Largest `|ln(P(y)/Q(y))|` over outcomes with positive mass on both sides.
    pub epsilon_hat: f64,
    /// Outcomes possible under one input only.
    pub one_sided_events: usize,
    /// Upper bound on `max(D_ε(P‖Q), D_ε(Q‖P))`, the hockey-stick divergence,
    /// including the oracles' omitted mass.
    pub delta_slack: f64,
    pub delta_allowed: f64,
    pub events_examined: usize,
    /// Oracle audits draw no samples.
    pub samples: u64,
    /// No singleton event certifiably violates `P(y) <= e^ε Q(y)` either way.
    pub ratio_respected: bool,
    pub delta_respected: bool,
    pub pass: bool,
}

/// Compares two oracle laws against `(ε, δ)`. With `δ = 0` the pointwise
/// ratio is checked; otherwise the hockey-stick divergence bound.
pub fn privacy_audit<K: Ord + Clone>(
    p: &DiscreteDist<K>,
    q: &DiscreteDist<K>,
    epsilon: &Rational,
    delta: &IntervalValue,
) -> PrivacyAuditResult {
    let e_eps = exp_pos_of(epsilon, ORACLE_PRECISION);
    // Off the support a mass is only known to lie in [0, deficit].
    let unknown_p = IntervalValue::new(Dyadic::zero(), p.deficit().clone());
    let unknown_q = IntervalValue::new(Dyadic::zero(), q.deficit().clone());
    let keys: std::collections::BTreeSet<&K> = p.support().chain(q.support()).collect();
    let mut epsilon_hat: f64 = 0.0;
    let mut one_sided = 0;
    let mut ratio_respected = true;
    let mut div_pq = Dyadic::zero();
    let mut div_qp = Dyadic::zero();
    for k in &keys {
        let pk = p.mass(k).unwrap_or(&unknown_p);
        let qk = q.mass(k).unwrap_or(&unknown_q);
        let (pm, qm) = (pk.mid_f64(), qk.mid_f64());
        if pm > 0.0 && qm > 0.0 {
            epsilon_hat = epsilon_hat.max((pm / qm).ln().abs());
        } else if pk.hi().is_positive() != qk.hi().is_positive() {
            one_sided += 1;
        }
        let bound_q = e_eps.mul(qk);
        let bound_p = e_eps.mul(pk);
        if pk.lo() > bound_q.hi() || qk.lo() > bound_p.hi() {
            ratio_respected = false;
        }
        let excess_p = pk.hi() - bound_q.lo();
        if excess_p.is_positive() {
            div_pq = &div_pq + &excess_p;
        }
        let excess_q = qk.hi() - bound_p.lo();
        if excess_q.is_positive() {
            div_qp = &div_qp + &excess_q;
        }
    }
    let omitted = p.deficit() + q.deficit();
    let slack = std::cmp::max(div_pq, div_qp) + omitted;
    let delta_respected = &slack <= delta.lo();
    let pass = if delta.hi().is_zero() {
        ratio_respected
    } else {
        delta_respected
    };
    PrivacyAuditResult {
        epsilon_hat,
        one_sided_events: one_sided,
        delta_slack: slack.to_f64(),
        delta_allowed: delta.lo().to_f64(),
        events_examined: keys.len(),
        samples: 0,
        ratio_respected,
        delta_respected,
        pass,
    }
}

/// Neighbours of a count vector under one row insertion or deletion, for the
/// adversarial rows all-zeros, all-ones and each single-one row.
pub fn neighbors(counts: &CountVector) -> Vec<CountVector> {
    let d = counts.d();
    let mut rows: Vec<Vec<u64>> = vec![vec![0; d], vec![1; d]];
    for j in 0..d {
        let mut row = vec![0; d];
        row[j] = 1;
        rows.push(row);
    }
    rows.sort();
    rows.dedup();
    let mut out = Vec::new();
    for row in &rows {
        let added: Vec<u64> = counts.sums().iter().zip(row).map(|(s, r)| s + r).collect();
        if let Ok(c) = CountVector::new(counts.n() + 1, added) {
            out.push(c);
        }
        if counts.n() == 0 {
            continue;
        }
        let removable = counts.sums().iter().zip(row).all(|(s, r)| {
            // A row with a 0 in column i needs another row with a 0 there.
            if *r == 1 {
                *s >= 1
            } else {
                *s < counts.n()
            }
        });
        if removable {
            let removed: Vec<u64> = counts.sums().iter().zip(row).map(|(s, r)| s - r).collect();
            if let Ok(c) = CountVector::new(counts.n() - 1, removed) {
                out.push(c);
            }
        }
    }
    out.sort_by(|a, b| (a.n(), a.sums()).cmp(&(b.n(), b.sums())));
    out.dedup_by(|a, b| a.n() == b.n() && a.sums() == b.sums());
    out
}
