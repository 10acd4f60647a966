use std::collections::BTreeMap;
use std::time::Instant;

use meterdp::exact::DEFAULT_PRECISION;
use meterdp::{
    approx, pure, ApproxParams, BitTape, CountVector, Enclose, IntervalValue, PureParams,
};
use meterdp_audit::oracle::{oracle_coord_dist_approx, oracle_coord_dist_pure};
use meterdp_audit::{
    accuracy_audit, chi_square, randomness_audit, run_batch, tv_distance, AuditError, Histogram,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

/// Oracle mass allowed to go unaccounted in the equivalence audit.
const ORACLE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Approx,
    Pure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum AuditMode {
    None,
    Randomness,
    Accuracy,
    Equivalence,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mode: Mode,
    pub epsilon: BigRational,
    pub delta: Option<BigRational>,
    /// Number of shifts; defaults to `d`.
    pub s: Option<u64>,
    /// `None` draws from the operating system.
    pub seed: Option<u64>,
    pub audit: AuditMode,
    pub trials: u64,
}

#[derive(Clone, Debug)]
pub enum Params {
    Approx(ApproxParams),
    Pure(PureParams),
}

impl Params {
    pub fn derive(cfg: &RunConfig, d: usize) -> Result<Self, CliError> {
        let s = cfg.s.unwrap_or(d as u64);
        match (cfg.mode, &cfg.delta) {
            (Mode::Approx, Some(delta)) => Ok(Params::Approx(ApproxParams::derive(
                &cfg.epsilon,
                delta,
                d,
                s,
            )?)),
            (Mode::Approx, None) => Err(CliError::Domain("approx mode requires --delta".into())),
            (Mode::Pure, None) => Ok(Params::Pure(PureParams::derive(&cfg.epsilon, d, s)?)),
            (Mode::Pure, Some(_)) => {
                Err(CliError::Domain("pure mode does not take --delta".into()))
            }
        }
    }

    fn release(
        &self,
        counts: &CountVector,
        tape: &mut BitTape,
    ) -> meterdp::Result<meterdp::MechanismResult> {
        match self {
            Params::Approx(p) => approx::release(counts, p, tape),
            Params::Pure(p) => pure::release(counts, p, tape).map(|(r, _)| r),
        }
    }

    pub fn to_json(&self, cfg: &RunConfig) -> Value {
        match self {
            Params::Approx(p) => json!({
                "mode": Mode::Approx,
                "epsilon": cfg.epsilon.to_string(),
                "delta": cfg.delta.as_ref().map(|q| q.to_string()),
                "d": p.d(),
                "s": p.s(),
                "gamma": p.gamma().map(interval_json),
                "sigma_sq_enclosure": p.sigma_sq_enclosure().map(interval_json),
                "sigma_sq": p.sigma_sq().to_string(),
                "r": p.r(),
                "grid": p.grid(),
                "accuracy_radius": p.accuracy_radius(),
            }),
            Params::Pure(p) => json!({
                "mode": Mode::Pure,
                "epsilon": cfg.epsilon.to_string(),
                "d": p.d(),
                "s": p.s(),
                "t": p.scale().t().to_string(),
                "m": p.m(),
                "grid": p.grid(),
                "tail_mass": interval_json(&p.tail_mass().enclose(DEFAULT_PRECISION)),
            }),
        }
    }
}

fn interval_json(v: &IntervalValue) -> Value {
    json!({
        "lo": v.lo().to_rational().to_string(),
        "hi": v.hi().to_rational().to_string(),
        "approx": v.lo().to_f64(),
    })
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub values: Vec<i64>,
    pub params: Value,
    pub randomness: Randomness,
    pub meta: Meta,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit: Option<Value>,
}

#[derive(Debug, Serialize)]
pub struct Randomness {
    pub bits_total: u64,
    pub bits_by_category: BTreeMap<&'static str, u64>,
    pub boundary_count: usize,
    pub tail_count: usize,
}

#[derive(Debug, Serialize)]
pub struct Meta {
    pub n: u64,
    pub d: usize,
    pub seed: Option<u64>,
    pub mode: Mode,
    pub wall_time_ms: f64,
}

/// Derives parameters, releases `counts` once and runs the requested audit.
pub fn execute(cfg: &RunConfig, counts: &CountVector) -> Result<Report, CliError> {
    let started = Instant::now();
    let params = Params::derive(cfg, counts.d())?;
    let mut tape = match cfg.seed {
        Some(seed) => BitTape::seeded(seed),
        None => BitTape::from_os(),
    };
    let result = params.release(counts, &mut tape)?;
    let wall_time_ms = started.elapsed().as_secs_f64() * 1e3;

    let report = &result.report;
    let randomness = Randomness {
        bits_total: report.bits_total,
        bits_by_category: report
            .bits_by_category
            .iter()
            .map(|(c, b)| (c.name(), b))
            .collect(),
        boundary_count: report.boundary_coordinates.len(),
        tail_count: report.tail_coordinates.len(),
    };
    let audit = match cfg.audit {
        AuditMode::None => None,
        mode => {
            let base = match cfg.seed {
                Some(seed) => seed,
                None => BitTape::from_os().next_bits(64)?,
            };
            Some(run_audit(mode, &params, counts, cfg.trials, base)?)
        }
    };
    Ok(Report {
        values: result.values,
        params: params.to_json(cfg),
        randomness,
        meta: Meta {
            n: counts.n(),
            d: counts.d(),
            seed: cfg.seed,
            mode: cfg.mode,
            wall_time_ms,
        },
        audit,
    })
}

fn run_audit(
    mode: AuditMode,
    params: &Params,
    counts: &CountVector,
    trials: u64,
    base_seed: u64,
) -> Result<Value, CliError> {
    let runs = run_batch(trials, base_seed, |tape| params.release(counts, tape))?;
    let body = match mode {
        AuditMode::None => unreachable!("no audit requested"),
        AuditMode::Randomness => {
            let reports: Vec<_> = runs.into_iter().map(|r| r.report).collect();
            to_value(&randomness_audit(&reports).map_err(audit_err)?)
        }
        AuditMode::Accuracy => {
            let outputs: Vec<_> = runs.into_iter().map(|r| r.values).collect();
            let (alpha, beta) = match params {
                Params::Approx(p) => (IntervalValue::from_int(p.accuracy_radius()), 0.0),
                Params::Pure(p) => {
                    let beta = BigRational::new(BigInt::from(1), BigInt::from(10));
                    (p.accuracy_radius(&beta)?, 0.1)
                }
            };
            to_value(&accuracy_audit(&outputs, counts.sums(), &alpha, beta).map_err(audit_err)?)
        }
        AuditMode::Equivalence => {
            let sum = counts.sums()[0] as i64;
            let oracle = match params {
                Params::Approx(p) => oracle_coord_dist_approx(sum, p, ORACLE_TOL),
                Params::Pure(p) => oracle_coord_dist_pure(sum, p, ORACLE_TOL),
            }
            .map_err(audit_err)?;
            let hist: Histogram<i64> = runs.iter().map(|r| r.values[0]).collect();
            let test = chi_square(&hist, &oracle).map_err(audit_err)?;
            json!({
                "coordinate": 0,
                "chi_square": test,
                "tv_distance": tv_distance(&hist, &oracle).map_err(audit_err)?,
                "oracle_support": oracle.len(),
            })
        }
    };
    Ok(json!({
        "kind": format!("{mode:?}").to_lowercase(),
        "trials": trials,
        "base_seed": base_seed,
        "result": body,
    }))
}

fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("audit summaries serialize")
}

fn audit_err(e: AuditError) -> CliError {
    match e {
        AuditError::InsufficientTrials { .. } => CliError::Domain(e.to_string()),
        other => other.into(),
    }
}
