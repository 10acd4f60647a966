use std::collections::BTreeMap;

use meterdp::approx::{self, crosses_boundary, ApproxParams, ApproxVariant};
use meterdp::point_mass::BinomialCumulative;
use meterdp::pure::{self, sample_subset, Branch, PureParams, PureVariant};
use meterdp::samplers::ratio;
use meterdp::{BitTape, Category, CountVector, Error, Rational};

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

#[test]
fn at_most_two_shifts_cross_a_boundary() {
    let mut tape = BitTape::seeded(1);
    for s in [1u64, 2, 3, 8, 17, 64] {
        for r in [1i64, 3, 10] {
            for _ in 0..200 {
                let sum = tape.uniform_range(5000).unwrap() as i64 - 1;
                let crossing = (1..=s as i64)
                    .filter(|v| crosses_boundary(sum, v * r, r, r * s as i64))
                    .count();
                assert!(crossing <= 2, "s = {s}, r = {r}, sum = {sum}");
            }
        }
    }
}

#[test]
fn boundary_rate_per_run() {
    let d = 256;
    let s = 16;
    let params = ApproxParams::derive(&rat(1, 1), &rat(1, 10_000), d, s).unwrap();
    let counts = CountVector::new(500, (0..d as u64).map(|i| (i * 13) % 500).collect()).unwrap();
    let mut tape = BitTape::seeded(2);
    let runs = 300;
    let mut per_run = Vec::with_capacity(runs);
    for _ in 0..runs {
        let out = approx::release(&counts, &params, &mut tape).unwrap();
        per_run.push(out.report.boundary_coordinates.len() as f64);
        assert_eq!(
            out.report.boundary_coordinates.len(),
            out.report
                .draws_attempted
                .iter()
                .filter(|a| **a > 0)
                .count()
        );
    }
    // Coordinates share the shift, so the spread is measured across runs.
    let mean = per_run.iter().sum::<f64>() / runs as f64;
    let var = per_run.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
    let bound = 2.0 * d as f64 / s as f64 + 3.0 * (var / runs as f64).sqrt();
    assert!(mean <= bound, "{mean} > {bound}");
}

#[test]
fn reference_variants_share_the_envelope() {
    let params = ApproxParams::explicit(3, rat(5, 2), 4, 3).unwrap();
    let counts = CountVector::new(40, vec![0, 20, 40]).unwrap();
    let mut tape = BitTape::seeded(3);
    for _ in 0..2000 {
        let t = approx::release_reference(&counts, &params, ApproxVariant::Truncated, &mut tape)
            .unwrap();
        for (y, s) in t.values.iter().zip(counts.sums()) {
            assert!((y - *s as i64).abs() < params.r() as i64);
        }
        let r =
            approx::release_reference(&counts, &params, ApproxVariant::ShiftedRounded, &mut tape)
                .unwrap();
        for (y, s) in r.values.iter().zip(counts.sums()) {
            assert_eq!(y % params.grid(), 0);
            assert!((y - *s as i64).abs() <= params.accuracy_radius());
        }
        assert!(r.report.bits_by_category.get(Category::Shift) > 0);
    }
}

#[test]
fn noise_bits_fall_with_s() {
    let d = 128;
    let counts = CountVector::new(1000, (0..d as u64).map(|i| i * 7).collect()).unwrap();
    let mean_noise = |s: u64| {
        let params = ApproxParams::derive(&rat(1, 1), &rat(1, 1000), d, s).unwrap();
        let mut tape = BitTape::seeded(s);
        let runs = 100;
        let total: u64 = (0..runs)
            .map(|_| {
                approx::release(&counts, &params, &mut tape)
                    .unwrap()
                    .report
                    .noise_bits()
            })
            .sum();
        total as f64 / runs as f64
    };
    let (a, b) = (mean_noise(4), mean_noise(32));
    assert!(a / b > 4.0 && a / b < 16.0, "{a} vs {b}");
}

#[test]
fn subset_law_is_product_of_coins() {
    let d = 3;
    let size_law = BinomialCumulative::new(d as u64, ratio(1, 4));
    let mut tape = BitTape::seeded(4);
    let n = 100_000;
    let mut freq: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    for _ in 0..n {
        let mut set = sample_subset(&mut tape, &size_law, d).unwrap();
        set.sort_unstable();
        *freq.entry(set).or_insert(0) += 1;
    }
    assert_eq!(freq.len(), 8);
    for (set, count) in freq {
        let k = set.len() as i32;
        let want = 0.25f64.powi(k) * 0.75f64.powi(d as i32 - k);
        let sd = (want * (1.0 - want) / n as f64).sqrt();
        assert!((count as f64 / n as f64 - want).abs() < 4.0 * sd, "{set:?}");
    }
}

#[test]
fn pure_branches_and_categories() {
    let params = PureParams::derive(&rat(1, 2), 8, 4).unwrap();
    let counts = CountVector::new(30, vec![0, 3, 9, 12, 15, 22, 27, 30]).unwrap();
    let mut tape = BitTape::seeded(5);
    let mut silent = 0;
    let mut body = 0;
    for _ in 0..500 {
        let (out, trace) = pure::release(&counts, &params, &mut tape).unwrap();
        let tail_bits = out.report.bits_by_category.get(Category::Tail);
        assert_eq!(trace.tail_count == 0, tail_bits == 0);
        for (i, b) in trace.branches.iter().enumerate() {
            match b {
                Branch::Silent => silent += 1,
                Branch::Body => body += 1,
                Branch::Tail => assert!(out.report.tail_coordinates.contains(&i)),
            }
            let err = (out.values[i] - counts.sums()[i] as i64).abs();
            if *b != Branch::Tail {
                assert!(err <= params.m() as i64 + params.grid());
            }
        }
    }
    // Crossing probability is at most 2/s = 1/2 per body coordinate.
    assert!(body <= silent + 200, "body {body}, silent {silent}");
}

#[test]
fn reference_laplace_tail_rate() {
    // P[η >= m] = e^{-(m-1)/t} / (e^{1/t} + 1) at t = 2, m = 3.
    let params = PureParams::explicit(1, rat(2, 1), 3, 1).unwrap();
    let counts = CountVector::new(0, vec![0]).unwrap();
    let mut tape = BitTape::seeded(6);
    let n = 100_000;
    let hits = (0..n)
        .filter(|_| {
            pure::release_reference(&counts, &params, PureVariant::Laplace, &mut tape)
                .unwrap()
                .values[0]
                >= 3
        })
        .count();
    let want = (-1.0f64).exp() / ((0.5f64).exp() + 1.0);
    let sd = (want * (1.0 - want) / n as f64).sqrt();
    assert!((hits as f64 / n as f64 - want).abs() < 4.0 * sd);
}

#[test]
fn forced_shift_variants() {
    let params = PureParams::explicit(1, rat(2, 1), 2, 3).unwrap();
    let counts = CountVector::new(20, vec![10]).unwrap();
    let mut tape = BitTape::seeded(7);
    for _ in 0..100 {
        let out = pure::release_tail_body_with_shift(&counts, &params, 2, &mut tape).unwrap();
        if out.report.tail_coordinates.is_empty() {
            // 10 + 4 + η with |η| < 2 stays in [12, 18).
            assert_eq!(out.values, vec![12]);
        }
    }
    assert!(matches!(
        pure::release_with_shift(&counts, &params, 4, &mut tape),
        Err(Error::Domain(_))
    ));
    let aparams = ApproxParams::explicit(1, rat(2, 1), 2, 3).unwrap();
    let out = approx::release_reference_with_shift(&counts, &aparams, 2, &mut tape).unwrap();
    assert_eq!(out.values, vec![12]);
}
