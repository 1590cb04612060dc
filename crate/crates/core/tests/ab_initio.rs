use mdlab_core::anqie_flow::{window_census, RigidityClosedForm};
use mdlab_core::correlation::{shift_correlation, MirskyTable};
use mdlab_core::dirichlet::{characters_mod, parseval_ratio};
use mdlab_core::mean_state::{cesaro_inner, CesaroMean};
use mdlab_core::pretentious::m_of_f;
use mdlab_core::short_progression::second_moment;
use mdlab_core::sieve::cache::{read_file, write_file};
use mdlab_core::sieve::{
    evaluate_spec, liouville_sieve, mobius_sieve, power_free_sieve, FunctionTag,
    MultiplicativeSpec, SeqWindow,
};
use num_complex::Complex64;
use proptest::prelude::*;
use std::collections::HashSet;

/// μ by trial division.
fn mobius_naive(mut n: u64) -> i8 {
    let mut sign = 1;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

fn omega_total(mut n: u64) -> u32 {
    let mut count = 0;
    let mut p = 2;
    while p * p <= n {
        while n % p == 0 {
            n /= p;
            count += 1;
        }
        p += 1;
    }
    count + u32::from(n > 1)
}

fn cube_free(mut n: u64) -> bool {
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        if e >= 3 {
            return false;
        }
        p += 1;
    }
    true
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sieves_match_trial_division(start in 1u64..5_000_000, len in 1usize..600) {
        let mu = mobius_sieve(start, len).unwrap();
        let lambda = liouville_sieve(start, len).unwrap();
        let mu3 = power_free_sieve(start, len, 3).unwrap();
        for i in 0..len {
            let n = start + i as u64;
            prop_assert_eq!(mu.small().unwrap()[i], mobius_naive(n));
            let l = if omega_total(n) % 2 == 0 { 1 } else { -1 };
            prop_assert_eq!(lambda.small().unwrap()[i], l);
            prop_assert_eq!(mu3.small().unwrap()[i], i8::from(cube_free(n)));
        }
    }

    #[test]
    fn characters_are_completely_multiplicative(k in 1u64..400, a in 1u64..2_000, b in 1u64..2_000) {
        for chi in characters_mod(k).unwrap() {
            let lhs = chi.eval(a * b);
            let rhs = chi.eval(a) * chi.eval(b);
            prop_assert!((lhs - rhs).norm() < 1e-9, "{} at {a}·{b}", chi.label());
        }
    }

    #[test]
    fn census_matches_string_set(start in 1u64..1_000_000, l in 1usize..14) {
        let n = 3_000u64;
        let w = power_free_sieve(start, n as usize, 2).unwrap();
        let bits: String = w.small().unwrap().iter().map(|&b| if b == 1 { '1' } else { '0' }).collect();
        let words: HashSet<&str> = (0..=bits.len() - l).map(|i| &bits[i..i + l]).collect();
        let census = window_census(&w, l, n).unwrap();
        prop_assert_eq!(census.distinct_count as usize, words.len());
        prop_assert_eq!(census.total(), n - l as u64 + 1);
    }
}

#[test]
fn cache_file_round_trips_every_tag() {
    let dir = tempfile::tempdir().unwrap();
    for tag in [
        FunctionTag::Mobius,
        FunctionTag::MobiusSquared,
        FunctionTag::PowerFree(4),
        FunctionTag::Liouville,
    ] {
        let w = tag.sieve(123_456, 5_000).unwrap();
        let path = dir.path().join(format!("{tag}.mdl"));
        write_file(&path, tag, &w).unwrap();
        let (back_tag, back) = read_file(&path).unwrap();
        assert_eq!(back_tag, tag);
        assert_eq!(back.start(), 123_456);
        assert_eq!(back.small(), w.small());
    }
}

#[test]
fn second_moment_matches_direct_sums() {
    let (n, h, k) = (3_000u64, 7u64, 4u64);
    let rep = second_moment(n, h, k).unwrap();
    let direct: u64 = (1..=n)
        .map(|m| {
            let s: i64 = (1..=h).map(|l| mobius_naive(m + k * l) as i64).sum();
            (s * s) as u64
        })
        .sum();
    assert_eq!(rep.sum_of_squares, direct);
}

#[test]
fn mirsky_matches_empirical_correlations() {
    let n = 2_000_000u64;
    let w = power_free_sieve(1, n as usize + 40, 2).unwrap();
    let table = MirskyTable::new(2, 100_000).unwrap();
    for m in [1u64, 4, 12, 36] {
        let e = shift_correlation(&w, &w, m as usize, n).unwrap().re;
        let o = table.oracle(m).unwrap().partial_value;
        assert!((e - o).abs() < 2e-3, "m = {m}: {e} vs {o}");
    }
}

#[test]
fn closed_form_rigidity_matches_lag_defect() {
    let n = 2_000_000usize;
    let closed = RigidityClosedForm::new(2, 100_000).unwrap();
    let w = power_free_sieve(1, n + 36 * 3, 2).unwrap();
    let v = w.small().unwrap();
    for l in 1..=3u64 {
        let lag = (36 * l) as usize;
        let mismatches = (0..n).filter(|&i| v[i] != v[i + lag]).count();
        let empirical = mismatches as f64 / n as f64;
        let (c, err) = closed.at(l);
        assert!(err < 1e-4);
        assert!((empirical - c).abs() < 3e-3, "l = {l}: {empirical} vs {c}");
    }
}

#[test]
fn cesaro_density_of_squarefree_numbers() {
    let w = power_free_sieve(1, 1_000_000, 2).unwrap();
    let one = SeqWindow::constant(1, 1_000_000, 1).unwrap();
    let trace = cesaro_inner(&w, &one, &CesaroMean::new(vec![1_000, 1_000_000]).unwrap()).unwrap();
    assert_eq!(trace.partial_values[0], Complex64::new(608.0 / 1000.0, 0.0));
    assert!((trace.last().re - 6.0 / std::f64::consts::PI.powi(2)).abs() < 1e-3);
}

#[test]
fn archimedean_function_pretends_to_itself() {
    let t0 = 1.7;
    let rep = m_of_f(&MultiplicativeSpec::archimedean(t0), 100_000, 5.0, 1, 64).unwrap();
    assert!((rep.argmin_t - t0).abs() < 1e-4, "{}", rep.argmin_t);
    assert!(rep.min_value < 1e-6);
}

#[test]
fn parseval_lhs_by_direct_windows() {
    let (x, h) = (400u64, 20u64);
    let coeffs = evaluate_spec(&MultiplicativeSpec::liouville(), 1, 4 * x as usize + 1).unwrap();
    let rep = parseval_ratio(&coeffs, h, x).unwrap();
    let a = |n: u64| coeffs.get((n - 1) as usize).re;
    let direct: f64 = (x..2 * x)
        .map(|m| {
            let s: f64 = (m + 1..=m + h).map(a).sum::<f64>() / h as f64;
            s * s
        })
        .sum::<f64>()
        / x as f64;
    assert!((rep.lhs - direct).abs() < 1e-12);
    assert!(rep.ratio.is_finite() && rep.ratio > 0.0);
}
