//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::Instant;

use meterdp::approx::{self, crosses_boundary, ApproxParams, ApproxVariant};
use meterdp::exact::{exp_neg_rational, exp_pos_of};
use meterdp::point_mass::{
    entropy_bits, sample_point_mass_traced, BinomialCumulative, CumulativeOracle, RationalLaw,
};
use meterdp::pure::{self, PureParams, PureVariant};
use meterdp::samplers::{discrete_gaussian, discrete_laplace, GaussParam, LaplaceScale};
use meterdp::{BitTape, CountVector, IntervalValue, Rational};
use meterdp_audit::oracle::{
    gaussian_law, laplace_law, oracle_coord_dist_approx, oracle_coord_dist_pure,
    oracle_joint_approx, oracle_joint_pure, oracle_truncated_approx, DEFAULT_TAIL_TOL,
};
use meterdp_audit::{
    accuracy_audit, chi_square, chi_square_two_sample, privacy_audit, randomness_audit, run_batch,
    tv_distance, DiscreteDist, Histogram,
};
use num_bigint::BigInt;

const ALPHA: f64 = 0.001;
const TV_MAX: f64 = 0.02;
const RUNS: u64 = 100_000;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn c1_equivalence_approx() -> Outcome {
    let start = Instant::now();
    let params = ApproxParams::explicit(2, rat(2, 1), 2, 3).map_err(fail)?;
    let counts = CountVector::new(20, vec![5, 11]).map_err(fail)?;
    let outputs = run_batch(RUNS, 0xA1, |tape| {
        approx::release(&counts, &params, tape).map(|r| r.values)
    })
    .map_err(fail)?;
    let hist: Histogram<Vec<i64>> = outputs.into_iter().collect();
    let oracle = oracle_joint_approx(&counts, &params).map_err(fail)?;
    let chi = chi_square(&hist, &oracle).map_err(fail)?;
    let tv = tv_distance(&hist, &oracle).map_err(fail)?;
    let secs = start.elapsed().as_secs_f64();
    check(
        chi.passes(ALPHA) && tv <= TV_MAX && secs < 60.0,
        format!(
            "p = {:.4}, TV = {tv:.4}, {} bins, {secs:.1} s",
            chi.p_value, chi.bins
        ),
    )
}

fn c2_equivalence_pure() -> Outcome {
    let params = PureParams::explicit(2, rat(2, 1), 2, 2).map_err(fail)?;
    let counts = CountVector::new(20, vec![3, 7]).map_err(fail)?;
    let efficient: Histogram<Vec<i64>> = run_batch(RUNS, 0xB1, |tape| {
        pure::release(&counts, &params, tape).map(|(r, _)| r.values)
    })
    .map_err(fail)?
    .into_iter()
    .collect();
    let oracle = oracle_joint_pure(&counts, &params, DEFAULT_TAIL_TOL).map_err(fail)?;
    let chi = chi_square(&efficient, &oracle).map_err(fail)?;
    let tv = tv_distance(&efficient, &oracle).map_err(fail)?;

    let reference = |variant, seed| -> Result<Histogram<Vec<i64>>, String> {
        Ok(run_batch(RUNS, seed, |tape| {
            pure::release_reference(&counts, &params, variant, tape).map(|r| r.values)
        })
        .map_err(fail)?
        .into_iter()
        .collect())
    };
    let unrolled = reference(PureVariant::Unrolled, 0xB3)?;
    let tail_body = reference(PureVariant::TailBody, 0xB4)?;
    let p34 = chi_square_two_sample(&unrolled, &tail_body).map_err(fail)?;
    let p45 = chi_square_two_sample(&tail_body, &efficient).map_err(fail)?;
    let p35 = chi_square_two_sample(&unrolled, &efficient).map_err(fail)?;
    check(
        chi.passes(ALPHA)
            && tv <= TV_MAX
            && p34.passes(ALPHA)
            && p45.passes(ALPHA)
            && p35.passes(ALPHA),
        format!(
            "p = {:.4}, TV = {tv:.4}; two-sample p: 3v4 {:.4}, 4v5 {:.4}, 3v5 {:.4}",
            chi.p_value, p34.p_value, p45.p_value, p35.p_value
        ),
    )
}

fn c3_deterministic_accuracy() -> Outcome {
    let params = ApproxParams::derive(&rat(1, 1), &rat(1, 1_000_000), 8, 4).map_err(fail)?;
    let sums = vec![0, 1, 7, 33, 50, 64, 99, 100];
    let counts = CountVector::new(100, sums.clone()).map_err(fail)?;
    let outputs = run_batch(10_000, 0xC1, |tape| {
        approx::release(&counts, &params, tape).map(|r| r.values)
    })
    .map_err(fail)?;
    let alpha = IntervalValue::from_int(params.accuracy_radius());
    let audit = accuracy_audit(&outputs, &sums, &alpha, 0.0).map_err(fail)?;
    check(
        audit.exceedances == 0,
        format!(
            "r = {}, alpha = r(2s+1) = {}, violations = {}, max error = {}",
            params.r(),
            params.accuracy_radius(),
            audit.exceedances,
            audit.max_error
        ),
    )
}

fn c4_probabilistic_accuracy() -> Outcome {
    let params = PureParams::derive(&rat(1, 1), 16, 2).map_err(fail)?;
    let sums: Vec<u64> = (0..16).map(|i| i * 6).collect();
    let counts = CountVector::new(100, sums.clone()).map_err(fail)?;
    let outputs = run_batch(10_000, 0xD1, |tape| {
        pure::release(&counts, &params, tape).map(|(r, _)| r.values)
    })
    .map_err(fail)?;
    let alpha = params.accuracy_radius(&rat(1, 10)).map_err(fail)?;
    let audit = accuracy_audit(&outputs, &sums, &alpha, 0.1).map_err(fail)?;
    check(
        audit.pass,
        format!(
            "m = {}, alpha = {:.2}, exceedance rate = {:.4} (allowed {:.4}), max error = {}",
            params.m(),
            audit.alpha,
            audit.rate,
            audit.allowed_rate,
            audit.max_error
        ),
    )
}

fn c5_boundary_law() -> Outcome {
    let mut tape = BitTape::seeded(0xE1);
    let mut worst = 0;
    for s in [3u64, 8, 17] {
        for radius in [1i64, 2, 5, 13] {
            let grid = radius * s as i64;
            for _ in 0..100 {
                let sum = tape.uniform_range(10_000).map_err(fail)? as i64 - 1;
                let crossing = (1..=s as i64)
                    .filter(|v| crosses_boundary(sum, v * radius, radius, grid))
                    .count();
                worst = worst.max(crossing);
            }
        }
    }
    check(
        worst <= 2,
        format!("max crossing shifts per coordinate = {worst}"),
    )
}

fn c6_randomness_scaling() -> Outcome {
    let d = 256;
    let counts =
        CountVector::new(1000, (0..d as u64).map(|i| (i * 37) % 1000).collect()).map_err(fail)?;
    let eps = rat(1, 1);
    let delta = rat(1, 1_000_000);
    let mut scaled = Vec::new();
    let mut notes = Vec::new();
    for (i, s) in [4u64, 16, 64].into_iter().enumerate() {
        let params = ApproxParams::derive(&eps, &delta, d, s).map_err(fail)?;
        let reports = run_batch(200, 0xF0 + i as u64, |tape| {
            approx::release(&counts, &params, tape).map(|r| r.report)
        })
        .map_err(fail)?;
        let summary = randomness_audit(&reports).map_err(fail)?;
        scaled.push(summary.mean_noise_bits * s as f64);
        notes.push(format!("s={s}: noise {:.0}", summary.mean_noise_bits));
    }
    let ratio = scaled.iter().cloned().fold(f64::MIN, f64::max)
        / scaled.iter().cloned().fold(f64::MAX, f64::min);

    let params = ApproxParams::derive(&eps, &delta, d, d as u64).map_err(fail)?;
    let reports = run_batch(500, 0xFA, |tape| {
        approx::release(&counts, &params, tape).map(|r| r.report)
    })
    .map_err(fail)?;
    let total = randomness_audit(&reports).map_err(fail)?.mean_bits;
    let budget = 40.0 * (d as f64).log2();
    check(
        ratio <= 2.0 && total <= budget,
        format!(
            "{}; max/min of s * noise = {ratio:.2}; total at s = d: {total:.1} bits (budget {budget:.0})",
            notes.join(", ")
        ),
    )
}

fn law(probs: &[(i64, i64)]) -> Result<(RationalLaw, Vec<IntervalValue>), String> {
    let probs: Vec<Rational> = probs.iter().map(|(n, d)| rat(*n, *d)).collect();
    let law = RationalLaw::new(&probs).map_err(fail)?;
    Ok((
        law,
        probs
            .iter()
            .map(|p| IntervalValue::from_rational(p, 80))
            .collect(),
    ))
}

fn entropy_case(
    name: &str,
    target: &(impl CumulativeOracle + Sync),
    probs: &[IntervalValue],
    seed: u64,
) -> Result<String, String> {
    let draws = run_batch(RUNS, seed, |tape| sample_point_mass_traced(tape, target)).map_err(fail)?;
    let mean_bits = draws.iter().map(|d| d.depth as f64).sum::<f64>() / draws.len() as f64;
    let max_depth = draws.iter().map(|d| d.depth).max().unwrap_or(0);
    let hist: Histogram<i64> = draws.iter().map(|d| d.index as i64).collect();
    let oracle = DiscreteDist::from_points(
        probs
            .iter()
            .enumerate()
            .map(|(i, p)| (i as i64 + 1, p.clone())),
    );
    let chi = chi_square(&hist, &oracle).map_err(fail)?;
    let h = entropy_bits(&probs.iter().map(IntervalValue::mid_f64).collect::<Vec<_>>());
    let line = format!(
        "{name}: bits {mean_bits:.2} vs H {h:.2}, p = {:.3}, max depth {max_depth}",
        chi.p_value
    );
    if mean_bits <= h + 8.0 && chi.passes(ALPHA) && max_depth <= 40 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn c7_entropy_sampler() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let mut record = |r: Result<String, String>| match r {
        Ok(l) => lines.push(l),
        Err(l) => {
            ok = false;
            lines.push(l)
        }
    };
    let cases = [
        ("uniform-2", vec![(1, 2); 2]),
        ("uniform-8", vec![(1, 8); 8]),
        ("(1/2,1/4,1/8,1/8)", vec![(1, 2), (1, 4), (1, 8), (1, 8)]),
    ];
    for (i, (name, probs)) in cases.into_iter().enumerate() {
        let (target, probs) = law(&probs)?;
        record(entropy_case(name, &target, &probs, 0x71 + i as u64));
    }
    let third = rat(1, 3);
    let binom = BinomialCumulative::new(16, third.clone());
    let probs: Vec<IntervalValue> = (0..=16u64)
        .map(|i| meterdp::exact::binom_prob_enclose(16, i, &third, 80))
        .collect();
    record(entropy_case("Bin(16,1/3)", &binom, &probs, 0x74));
    check(ok, lines.join("; "))
}

fn c8_oracle_privacy() -> Outcome {
    // Pure: d = 1, t = 2 (epsilon = 1/2), m = 2, s = 2.
    let eps = rat(1, 2);
    let pure_params = PureParams::explicit(1, rat(2, 1), 2, 2).map_err(fail)?;
    let base = CountVector::new(3, vec![1]).map_err(fail)?;
    let mut pure_ok = true;
    let mut pure_eps: f64 = 0.0;
    let p = oracle_coord_dist_pure(1, &pure_params, DEFAULT_TAIL_TOL).map_err(fail)?;
    for nb in meterdp_audit::neighbors(&base) {
        let q = oracle_coord_dist_pure(nb.sums()[0] as i64, &pure_params, DEFAULT_TAIL_TOL)
            .map_err(fail)?;
        let audit = privacy_audit(&p, &q, &eps, &IntervalValue::zero());
        pure_ok &= audit.pass;
        pure_eps = pure_eps.max(audit.epsilon_hat);
    }

    // Approx: derived parameters at d = 1; truncated variant and its
    // shifted-rounded post-processing.
    let eps = rat(1, 1);
    let delta = rat(1, 100);
    let params = ApproxParams::derive(&eps, &delta, 1, 4).map_err(fail)?;
    let e_eps = exp_pos_of(&eps, 80);
    let envelope = e_eps
        .add(&IntervalValue::one())
        .mul(params.gamma().unwrap())
        .add(&IntervalValue::from_rational(&delta, 80));
    let mut approx_ok = true;
    let mut slack: f64 = 0.0;
    let p_trunc = oracle_truncated_approx(1, &params).map_err(fail)?;
    let p_round = oracle_coord_dist_approx(1, &params, 1e-9).map_err(fail)?;
    for nb in meterdp_audit::neighbors(&base) {
        let sum = nb.sums()[0] as i64;
        let q_trunc = oracle_truncated_approx(sum, &params).map_err(fail)?;
        let q_round = oracle_coord_dist_approx(sum, &params, 1e-9).map_err(fail)?;
        for audit in [
            privacy_audit(&p_trunc, &q_trunc, &eps, &envelope),
            privacy_audit(&p_round, &q_round, &eps, &envelope),
        ] {
            approx_ok &= audit.pass;
            slack = slack.max(audit.delta_slack);
        }
    }
    check(
        pure_ok && approx_ok,
        format!(
            "pure: max |log ratio| = {pure_eps:.4} vs eps = 0.5; approx: hockey-stick {slack:.2e} vs envelope {:.2e}",
            envelope.lo_f64()
        ),
    )
}

fn c9_sampler_marginals() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (i, s2) in [rat(1, 1), rat(4, 1)].into_iter().enumerate() {
        let param = GaussParam::new(s2.clone()).map_err(fail)?;
        let draws = run_batch(RUNS, 0x90 + i as u64, |tape| {
            discrete_gaussian(tape, &param)
        })
        .map_err(fail)?;
        let oracle = gaussian_law(&s2, DEFAULT_TAIL_TOL).map_err(fail)?;
        let chi = chi_square(&draws.iter().copied().collect(), &oracle).map_err(fail)?;
        ok &= chi.passes(ALPHA);
        lines.push(format!("N_Z({s2}) p = {:.3}", chi.p_value));
        if s2 == rat(4, 1) {
            let bound = exp_neg_rational(&rat(36, 8), 64).hi_f64();
            let freq = draws.iter().filter(|x| **x >= 6).count() as f64 / RUNS as f64;
            let allowed = bound + 3.0 * (bound * (1.0 - bound) / RUNS as f64).sqrt();
            ok &= freq <= allowed;
            lines.push(format!("P[X>=6] = {freq:.4} <= {allowed:.4}"));
        }
    }
    for (i, t) in [1u64, 2].into_iter().enumerate() {
        let scale = LaplaceScale::from_int(t).map_err(fail)?;
        let draws = run_batch(RUNS, 0x9A + i as u64, |tape| discrete_laplace(tape, &scale))
            .map_err(fail)?;
        let oracle = laplace_law(scale.t(), DEFAULT_TAIL_TOL).map_err(fail)?;
        let chi = chi_square(&draws.iter().copied().collect(), &oracle).map_err(fail)?;
        ok &= chi.passes(ALPHA);
        lines.push(format!("Lap_Z({t}) p = {:.3}", chi.p_value));
        if t == 1 {
            // P[X >= 3] = e^{-2}/(e + 1).
            let e = exp_pos_of(&rat(1, 1), 64);
            let bound = exp_neg_rational(&rat(2, 1), 64)
                .div(&e.add(&IntervalValue::one()), 64)
                .hi_f64();
            let freq = draws.iter().filter(|x| **x >= 3).count() as f64 / RUNS as f64;
            let allowed = bound + 3.0 * (bound * (1.0 - bound) / RUNS as f64).sqrt();
            ok &= freq <= allowed;
            lines.push(format!("P[X>=3] = {freq:.4} <= {allowed:.4}"));
        }
    }
    check(ok, lines.join("; "))
}

fn c10_determinism() -> Outcome {
    let approx_params = ApproxParams::derive(&rat(1, 1), &rat(1, 1000), 16, 4).map_err(fail)?;
    let pure_params = PureParams::derive(&rat(1, 1), 16, 4).map_err(fail)?;
    let counts = CountVector::new(100, (0..16).map(|i| i * 5).collect()).map_err(fail)?;
    let run = |seed| -> Result<_, String> {
        let mut tape = BitTape::seeded(seed);
        let a = approx::release(&counts, &approx_params, &mut tape).map_err(fail)?;
        let r = approx::release_reference(
            &counts,
            &approx_params,
            ApproxVariant::ShiftedRounded,
            &mut tape,
        )
        .map_err(fail)?;
        let (p, trace) = pure::release(&counts, &pure_params, &mut tape).map_err(fail)?;
        Ok((a, r, p, trace, tape.bits_consumed()))
    };
    let first = run(0x10)?;
    let second = run(0x10)?;
    let other = run(0x11)?;
    check(
        first == second && first != other,
        format!(
            "seed replay identical across values, reports and traces ({} bits)",
            first.4
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("equivalence (approx)", c1_equivalence_approx),
        ("equivalence (pure)", c2_equivalence_pure),
        ("deterministic accuracy (approx)", c3_deterministic_accuracy),
        ("probabilistic accuracy (pure)", c4_probabilistic_accuracy),
        ("boundary law", c5_boundary_law),
        ("randomness scaling", c6_randomness_scaling),
        ("entropy sampler", c7_entropy_sampler),
        ("oracle privacy", c8_oracle_privacy),
        ("sampler marginals", c9_sampler_marginals),
        ("determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!(
                "criterion {:>2} PASS  {name}: {detail} [{secs:.1} s]",
                i + 1
            ),
            Err(detail) => {
                failed += 1;
                println!(
                    "criterion {:>2} FAIL  {name}: {detail} [{secs:.1} s]",
                    i + 1
                );
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
