use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use proptest::prelude::*;
use rwdiff_core::montecarlo::*;
use rwdiff_core::transport::site_probability;
use rwdiff_core::McHistogram;

/// Seed-42 statistics at N = 10⁶, t = 100, frozen from the first run.
const GOLDEN_COUNT_AT_ORIGIN: u64 = 79_447;
const GOLDEN_CHI2: f64 = 43.402_251_751_901_25;
const GOLDEN_DOF: usize = 42;

fn exact_probability(x: i64, t: u64) -> f64 {
    let k = (t - x.unsigned_abs()) / 2;
    let mut c = BigUint::from(1u32);
    for i in 0..k {
        c = c * (t - i) / (i + 1);
    }
    c.to_f64().unwrap() / 2f64.powi(t as i32)
}

#[test]
fn two_steps_return_half_the_time() {
    let h = simulate(1_000_000, 2, 42).unwrap();
    let p0 = h.count(0) as f64 / 1e6;
    assert!((p0 - 0.5).abs() < 4.0 * 5e-4, "{p0}");
    assert_eq!(h.counts().len(), 3);
}

#[test]
fn moments_at_hundred_steps() {
    let h = simulate(1_000_000, 100, 42).unwrap();
    assert!(h.mean().abs() < 4.0 * (100.0f64 / 1e6).sqrt());
    assert!((h.variance() / 100.0 - 1.0).abs() < 0.05);
}

#[test]
fn agrees_with_the_lattice_law() {
    let h = simulate(1_000_000, 100, 42).unwrap();
    let cmp = histogram_compare(&h);
    assert!(cmp.max_z < 4.5, "{}", cmp.max_z);
    assert!(cmp.p_value > 1e-3, "{}", cmp.p_value);
    assert_eq!(h.count(0), GOLDEN_COUNT_AT_ORIGIN);
    assert_eq!(cmp.dof, GOLDEN_DOF);
    assert!((cmp.chi2 - GOLDEN_CHI2).abs() < 1e-9 * GOLDEN_CHI2, "{}", cmp.chi2);
}

#[test]
fn site_probabilities_match_big_binomials() {
    for t in [1u64, 2, 17, 100, 120, 121, 400] {
        let ti = t as i64;
        // Exact integer binomials up to 120 steps, log-space beyond.
        let tol = if t <= 120 { 1e-14 } else { 1e-11 };
        for x in (-ti..=ti).step_by(2) {
            let exact = exact_probability(x, t);
            assert!((site_probability(x, t) - exact).abs() <= tol * exact, "x={x} t={t}");
        }
        assert_eq!(site_probability(ti + 1, t), 0.0);
    }
}

#[test]
fn identical_across_thread_counts() {
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate(200_000, 57, 9).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(3));
    assert_ne!(one, simulate(200_000, 57, 10).unwrap());
}

#[test]
fn perfect_histogram_scores_low() {
    let (n, t) = (1_000_000u64, 100u64);
    let ti = t as i64;
    let mut counts: BTreeMap<i64, u64> =
        (-ti..=ti).step_by(2).map(|x| (x, (n as f64 * site_probability(x, t)).round() as u64)).collect();
    let total: u64 = counts.values().sum();
    *counts.get_mut(&0).unwrap() = counts[&0] + n - total;
    let h = McHistogram::from_counts(t, n, 0, counts).unwrap();
    let cmp = histogram_compare(&h);
    assert!(cmp.max_z < 1.0, "{}", cmp.max_z);
    assert!(cmp.p_value > 0.99);
}

#[test]
fn doubled_site_is_detected() {
    let h = simulate(1_000_000, 100, 42).unwrap();
    let mut counts = h.counts().clone();
    let extra = counts[&10];
    *counts.get_mut(&10).unwrap() += extra;
    let bad = McHistogram::from_counts(100, h.walkers + extra, 42, counts).unwrap();
    let cmp = histogram_compare(&bad);
    assert!(cmp.max_z > 45.0, "{}", cmp.max_z);
    assert!(cmp.p_value < 1e-12);
}

#[test]
fn max_z_does_not_grow_with_walkers() {
    for n in [10_000u64, 100_000, 1_000_000] {
        let cmp = histogram_compare(&simulate(n, 100, 42).unwrap());
        assert!(cmp.max_z < 4.5, "N={n}: {}", cmp.max_z);
    }
}

#[test]
fn csv_layout() {
    let h = simulate(1000, 4, 1).unwrap();
    let csv = comparison_csv(&histogram_compare(&h));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x,count,expected,z");
    assert_eq!(lines.len(), 6);
    for line in &lines[1..] {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 4);
        let expected: f64 = cols[2].parse().unwrap();
        assert_eq!(expected.to_bits(), format!("{expected:.16e}").parse::<f64>().unwrap().to_bits());
    }
    // Edge sites expect 62.5 walkers, so every z is present.
    assert!(lines[1].split(',').nth(3).is_some_and(|z| !z.is_empty()));
}

#[test]
fn sparse_tails_have_no_z() {
    let cmp = histogram_compare(&simulate(1000, 100, 3).unwrap());
    let first = &cmp.sites[0];
    assert_eq!(first.x, -100);
    assert!(first.z.is_none());
    assert!(cmp.sites.iter().filter(|s| s.expected >= MIN_EXPECTED).all(|s| s.z.is_some()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parity_and_cone(walkers in 1u64..3000, steps in 0u64..300, seed in any::<u64>()) {
        let h = simulate(walkers, steps, seed).unwrap();
        prop_assert_eq!(h.counts().values().sum::<u64>(), walkers);
        for &x in h.counts().keys() {
            prop_assert!(x.unsigned_abs() <= steps);
            prop_assert_eq!((x.unsigned_abs() + steps) % 2, 0);
        }
    }

    #[test]
    fn walks_are_reproducible(seed in any::<u64>(), i in any::<u64>(), steps in 0u64..500) {
        let x = walk(seed, i, steps);
        prop_assert_eq!(x, walk(seed, i, steps));
        prop_assert!(x.unsigned_abs() <= steps);
    }
}
