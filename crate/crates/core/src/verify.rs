//! The acceptance grid: fifteen desk-scale checks, each with a pinned
//! tolerance and a wall-clock budget. Shared by the `acceptance` test target
//! and `mdlab verify`.

use crate::anqie_flow::entropy_profile;
use crate::correlation::{product_of_shifts, rigidity_norm_on, shift_correlation, MirskyTable};
use crate::dirichlet::{
    characters_mod, hybrid_mean_value_ratio, orthogonality_check, parseval_ratio,
};
use crate::error::Result;
use crate::mean_state::{
    block_eperiodic, cesaro_inner, eperiod_defect, sampler, CesaroMean, SamplerKind,
};
use crate::pretentious::{halasz_bound_pair, m_of_f, m_over_characters, MIN_GRID_POINTS};
use crate::short_progression::{second_moment_on, DEFAULT_H, DEFAULT_K};
use crate::sieve::{
    euler_phi, liouville_sieve, mobius_sieve, power_free_sieve, FactorizationOracle,
    MultiplicativeSpec, SeqWindow,
};
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

/// Tolerances and budgets, one block per criterion.
pub mod tolerances {
    pub const SIEVE_RANGE: u64 = 1_000_000;
    pub const SIEVE_BUDGET: f64 = 10.0;

    pub const DENSITY_N: u64 = 10_000_000;
    pub const DENSITY_TOL: f64 = 0.002;
    pub const DENSITY_BUDGET: f64 = 5.0;

    pub const MIRSKY_N: u64 = 10_000_000;
    pub const MIRSKY_CUTOFF: u64 = 1_000_000;
    pub const MIRSKY_TOL: f64 = 0.003;
    pub const MIRSKY_TAIL: f64 = 1e-4;
    pub const MIRSKY_BUDGET: f64 = 30.0;

    pub const RIGIDITY_N: u64 = 10_000_000;
    pub const RIGIDITY_TOL: f64 = 0.005;
    pub const RIGIDITY_BUDGET: f64 = 60.0;

    pub const MOMENT_N: u64 = 10_000_000;
    pub const MOMENT_CONSTANT: f64 = 10.0;
    pub const BRUTE_N: u64 = 100_000;
    pub const BRUTE_MAX_H: u64 = 50;
    pub const BRUTE_MAX_K: u64 = 12;
    pub const MOMENT_BUDGET: f64 = 300.0;

    pub const CHOWLA_H: u64 = 100;
    pub const CHOWLA_RANGE: (f64, f64) = (0.3, 1.2);
    pub const CHOWLA_BUDGET: f64 = 60.0;

    pub const DECOMP_X: u64 = 100_000;
    pub const DECOMP_H: u64 = 10;
    pub const DECOMP_GROWTH: f64 = 2.0;
    pub const DECOMP_BUDGET: f64 = 60.0;

    pub const CHARACTER_MAX_K: u64 = 200;
    pub const ORTHOGONALITY_TOL: f64 = 1e-9;
    pub const CHARACTER_BUDGET: f64 = 10.0;

    pub const DISTANCE_X: u64 = 1_000_000;
    pub const DISTANCE_T: f64 = 10.0;
    pub const DISTANCE_FLOOR: f64 = 0.5;
    pub const PRETENDER_T0: f64 = 0.3;
    pub const PRETENDER_DT: f64 = 1e-4;
    pub const PRETENDER_MIN: f64 = 1e-6;
    pub const DISTANCE_BUDGET: f64 = 60.0;

    pub const HALASZ_X: u64 = 1_000_000;
    pub const HALASZ_MU_X: u64 = 10_000_000;
    pub const HALASZ_T: f64 = 10.0;
    pub const HALASZ_RATIO: f64 = 3.0;
    pub const HALASZ_MU_LHS: f64 = 1e-2;
    pub const HALASZ_BUDGET: f64 = 30.0;

    pub const HYBRID_N: u64 = 512;
    pub const HYBRID_T: f64 = 50.0;
    pub const HYBRID_TRIALS: usize = 50;
    pub const HYBRID_SEED: u64 = 0x6d64_6c61_6201;
    pub const HYBRID_RATIO: f64 = 10.0;
    pub const HYBRID_CONVERGENCE: f64 = 1e-6;
    pub const HYBRID_BUDGET: f64 = 120.0;

    pub const PARSEVAL_X: u64 = 10_000;
    pub const PARSEVAL_H: u64 = 100;
    pub const PARSEVAL_RATIO: f64 = 10.0;
    pub const PARSEVAL_BUDGET: f64 = 60.0;

    pub const ENTROPY_N: u64 = 10_000_000;
    pub const ENTROPY_L: (usize, usize) = (10, 20);
    pub const ENTROPY_BAND: (f64, f64) = (0.50, 0.61);
    pub const PRODUCT_L: usize = 12;
    pub const PRODUCT_FLOOR: f64 = 0.2;
    pub const ENTROPY_BUDGET: f64 = 60.0;

    pub const QUADRATIC_N: u64 = 10_000_000;
    pub const QUADRATIC_MAX_SHIFT: usize = 5;
    pub const QUADRATIC_TOL: f64 = 1e-3;
    pub const QUADRATIC_BUDGET: f64 = 30.0;

    pub const BLOCK_K: usize = 3;
    pub const BLOCK_LENGTH: usize = 1_000_000;
    pub const BLOCK_AT_PERIOD: f64 = 0.01;
    pub const BLOCK_BELOW_PERIOD: f64 = 0.1;
    pub const BLOCK_BUDGET: f64 = 5.0;
}

use tolerances::*;

pub const CRITERIA: [(u8, &str); 15] = [
    (1, "sieve exactness"),
    (2, "square-free density"),
    (3, "Mirsky correlations"),
    (4, "rigidity of mu^2"),
    (5, "second-moment bound"),
    (6, "Chowla-scale sanity"),
    (7, "divisor decomposition"),
    (8, "character algebra"),
    (9, "pretentious floors"),
    (10, "Halasz shape"),
    (11, "hybrid mean value"),
    (12, "Parseval bound"),
    (13, "flow entropy"),
    (14, "e(n^2 theta) orthogonality"),
    (15, "block e-periodicity"),
];

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed_secs: f64,
    pub budget_secs: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {}: {} ({:.2}s of {:.0}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.elapsed_secs,
            self.budget_secs
        )
    }
}

struct Outcome {
    passed: bool,
    detail: String,
    budget: f64,
}

fn timed(id: u8, run: impl FnOnce() -> Result<Outcome>) -> CriterionResult {
    let title = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map(|c| c.1)
        .unwrap_or("unknown")
        .to_string();
    let start = Instant::now();
    let outcome = run();
    let elapsed = start.elapsed();
    match outcome {
        Ok(o) => {
            let within = elapsed <= Duration::from_secs_f64(o.budget);
            let mut detail = o.detail;
            if !within {
                let _ = write!(detail, "; over the {:.0}s budget", o.budget);
            }
            CriterionResult {
                id,
                title,
                passed: o.passed && within,
                detail,
                elapsed_secs: elapsed.as_secs_f64(),
                budget_secs: o.budget,
            }
        }
        Err(e) => CriterionResult {
            id,
            title,
            passed: false,
            detail: format!("error: {e}"),
            elapsed_secs: elapsed.as_secs_f64(),
            budget_secs: 0.0,
        },
    }
}

fn sieve_exactness() -> Result<Outcome> {
    let n = SIEVE_RANGE;
    let oracle = FactorizationOracle::new(n)?;
    let mu = mobius_sieve(1, n as usize)?;
    let mu2 = power_free_sieve(1, n as usize, 2)?;
    let mu3 = power_free_sieve(1, n as usize, 3)?;
    let lambda = liouville_sieve(1, n as usize)?;
    let (mu, mu2, mu3, lambda) = (
        mu.small().unwrap(),
        mu2.small().unwrap(),
        mu3.small().unwrap(),
        lambda.small().unwrap(),
    );
    let mut mismatches = 0u64;
    let mut first = None;
    for m in 1..=n {
        let i = (m - 1) as usize;
        let ok = mu[i] == oracle.mobius(m)
            && mu2[i] == oracle.power_free(m, 2)
            && mu3[i] == oracle.power_free(m, 3)
            && lambda[i] == oracle.liouville(m);
        if !ok {
            mismatches += 1;
            first.get_or_insert(m);
        }
    }
    Ok(Outcome {
        passed: mismatches == 0,
        detail: match first {
            None => format!("mu, mu_2, mu_3, lambda match the oracle for all n <= {n}"),
            Some(m) => format!("{mismatches} mismatches, first at n = {m}"),
        },
        budget: SIEVE_BUDGET,
    })
}

fn squarefree_density() -> Result<Outcome> {
    let w = power_free_sieve(1, DENSITY_N as usize, 2)?;
    let count: u64 = w.small().unwrap().iter().map(|&v| v as u64).sum();
    let density = count as f64 / DENSITY_N as f64;
    let target = 6.0 / (PI * PI);
    Ok(Outcome {
        passed: (density - target).abs() <= DENSITY_TOL,
        detail: format!("density {density:.6} vs 6/pi^2 = {target:.6} (tol {DENSITY_TOL})"),
        budget: DENSITY_BUDGET,
    })
}

fn mirsky() -> Result<Outcome> {
    let w = power_free_sieve(1, MIRSKY_N as usize + 10, 2)?;
    let table = MirskyTable::new(2, MIRSKY_CUTOFF)?;
    let mut worst: f64 = 0.0;
    let mut worst_tail: f64 = 0.0;
    for m in 1..=10u64 {
        let emp = shift_correlation(&w, &w, m as usize, MIRSKY_N)?.re;
        let o = table.oracle(m)?;
        worst = worst.max((emp - o.partial_value).abs());
        worst_tail = worst_tail.max(o.tail_bound);
    }
    Ok(Outcome {
        passed: worst <= MIRSKY_TOL && worst_tail < MIRSKY_TAIL,
        detail: format!(
            "max |empirical - oracle| = {worst:.2e} over m = 1..10, tail bound {worst_tail:.2e}"
        ),
        budget: MIRSKY_BUDGET,
    })
}

fn rigidity() -> Result<Outcome> {
    let table = MirskyTable::new(2, MIRSKY_CUTOFF)?;
    let w = power_free_sieve(1, RIGIDITY_N as usize + 2 * 900, 2)?;
    let mut worst: f64 = 0.0;
    let mut decreasing = true;
    let mut detail = String::new();
    for l in [1u64, 2] {
        let a = rigidity_norm_on(&w, &table, 2, l, RIGIDITY_N)?;
        let b = rigidity_norm_on(&w, &table, 3, l, RIGIDITY_N)?;
        worst = worst
            .max((a.empirical - a.closed_form).abs())
            .max((b.empirical - b.closed_form).abs());
        decreasing &= b.closed_form < a.closed_form;
        let _ = write!(
            detail,
            "l={l}: j=2 {:.5}/{:.5}, j=3 {:.5}/{:.5}; ",
            a.empirical, a.closed_form, b.empirical, b.closed_form
        );
    }
    let _ = write!(
        detail,
        "max deviation {worst:.2e}, closed form decreasing in j: {decreasing}"
    );
    Ok(Outcome {
        passed: worst <= RIGIDITY_TOL && decreasing,
        detail,
        budget: RIGIDITY_BUDGET,
    })
}

fn mobius_cover(n: u64) -> Result<SeqWindow> {
    mobius_sieve(1, n as usize)
}

fn brute_sum_of_squares(v: &[i8], n: usize, h: usize, k: usize) -> u64 {
    (0..n)
        .map(|i| {
            let s: i64 = (1..=h).map(|l| v[i + k * l] as i64).sum();
            (s * s) as u64
        })
        .sum()
}

fn second_moment_grid() -> Result<Outcome> {
    let hmax = *DEFAULT_H.iter().max().unwrap();
    let kmax = *DEFAULT_K.iter().max().unwrap();
    let mu = mobius_cover(MOMENT_N + hmax * kmax)?;
    let mut c_max: f64 = 0.0;
    let mut all_below = true;
    let mut worst = (0, 0);
    for &h in &DEFAULT_H {
        for &k in &DEFAULT_K {
            let r = second_moment_on(&mu, MOMENT_N, h, k)?;
            let ratio = r.ratio.unwrap();
            all_below &= r.s <= MOMENT_CONSTANT * r.bound.unwrap();
            if ratio > c_max {
                c_max = ratio;
                worst = (h, k);
            }
        }
    }
    let v = mu.small().unwrap();
    let mut mismatches = 0;
    for h in 2..=BRUTE_MAX_H {
        for k in 1..=BRUTE_MAX_K {
            let r = second_moment_on(&mu, BRUTE_N, h, k)?;
            if r.sum_of_squares != brute_sum_of_squares(v, BRUTE_N as usize, h as usize, k as usize)
            {
                mismatches += 1;
            }
        }
    }
    Ok(Outcome {
        passed: all_below && mismatches == 0,
        detail: format!(
            "C_max = {c_max:.3} at (h, k) = {worst:?} (ceiling {MOMENT_CONSTANT}); sliding vs brute force mismatches: {mismatches}"
        ),
        budget: MOMENT_BUDGET,
    })
}

fn chowla() -> Result<Outcome> {
    let mu = mobius_cover(MOMENT_N + CHOWLA_H)?;
    let r = second_moment_on(&mu, MOMENT_N, CHOWLA_H, 1)?;
    let (lo, hi) = CHOWLA_RANGE;
    Ok(Outcome {
        passed: (lo..=hi).contains(&r.chowla_ratio),
        detail: format!(
            "S/h = {:.4} (heuristic 6/pi^2 = {:.4}, window [{lo}, {hi}])",
            r.chowla_ratio,
            6.0 / (PI * PI)
        ),
        budget: CHOWLA_BUDGET,
    })
}

fn decomposition() -> Result<Outcome> {
    let x2 = 2 * DECOMP_X;
    let mu = mobius_cover(2 * x2 + DECOMP_H * 6 + 6)?;
    let mut passed = true;
    let mut detail = String::new();
    for k in [1u64, 6] {
        let a = crate::short_progression::divisor_decomposition_on(&mu, DECOMP_X, DECOMP_H, k)?;
        let b = crate::short_progression::divisor_decomposition_on(&mu, x2, DECOMP_H, k)?;
        let growth = b.residual_over_x / a.residual_over_x;
        passed &= (1.0 / DECOMP_GROWTH..=DECOMP_GROWTH).contains(&growth);
        let _ = write!(
            detail,
            "k={k}: residual/X {:.4} -> {:.4}; ",
            a.residual_over_x, b.residual_over_x
        );
    }
    Ok(Outcome {
        passed,
        detail: detail.trim_end_matches("; ").to_string(),
        budget: DECOMP_BUDGET,
    })
}

fn characters() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut bad_counts = Vec::new();
    for k in 1..=CHARACTER_MAX_K {
        if characters_mod(k)?.len() as u64 != euler_phi(k) {
            bad_counts.push(k);
        }
        worst = worst.max(orthogonality_check(k)?);
    }
    Ok(Outcome {
        passed: bad_counts.is_empty() && worst <= ORTHOGONALITY_TOL,
        detail: format!("phi(k) characters for all k <= {CHARACTER_MAX_K} except {bad_counts:?}; max orthogonality deviation {worst:.2e}"),
        budget: CHARACTER_BUDGET,
    })
}

fn pretentious_floors() -> Result<Outcome> {
    let mu = MultiplicativeSpec::mobius();
    let m1 = m_of_f(&mu, DISTANCE_X, DISTANCE_T, 1, MIN_GRID_POINTS)?;
    let restricted = MultiplicativeSpec::mobius().coprime_to(6)?;
    let m6 = m_over_characters(&restricted, 6, DISTANCE_X, DISTANCE_T)?;
    let pretender = m_of_f(
        &MultiplicativeSpec::archimedean(PRETENDER_T0),
        DISTANCE_X,
        DISTANCE_T,
        1,
        MIN_GRID_POINTS,
    )?;
    let dt = (pretender.argmin_t - PRETENDER_T0).abs();
    Ok(Outcome {
        passed: m1.min_value >= DISTANCE_FLOOR
            && m6.min_value >= DISTANCE_FLOOR
            && dt <= PRETENDER_DT
            && pretender.min_value <= PRETENDER_MIN,
        detail: format!(
            "M_1(mu) = {:.4} at t = {:.4}; M_6(mu 1_(n,6)=1) = {:.4} via {}; pretender |dt| = {dt:.1e}, min = {:.1e}",
            m1.min_value,
            m1.argmin_t,
            m6.min_value,
            m6.character.as_deref().unwrap_or("-"),
            pretender.min_value
        ),
        budget: DISTANCE_BUDGET,
    })
}

fn halasz() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for k in [2u64, 6, 30] {
        let r = halasz_bound_pair(&MultiplicativeSpec::one(), HALASZ_X, k, HALASZ_T)?;
        worst = worst.max(r.ratio);
    }
    let mu = halasz_bound_pair(&MultiplicativeSpec::mobius(), HALASZ_MU_X, 1, HALASZ_T)?;
    Ok(Outcome {
        passed: worst <= HALASZ_RATIO && mu.lhs <= HALASZ_MU_LHS,
        detail: format!(
            "spec=1 max lhs/rhs_shape = {worst:.3} over k in {{2,6,30}}; mu: lhs = {:.2e}, rhs_shape = {:.3}",
            mu.lhs, mu.rhs_shape
        ),
        budget: HALASZ_BUDGET,
    })
}

fn hybrid() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut conv: f64 = 0.0;
    for k in [1u64, 3, 8] {
        let s = hybrid_mean_value_ratio(k, HYBRID_N, HYBRID_T, HYBRID_TRIALS, HYBRID_SEED)?;
        worst = worst.max(s.max_ratio);
        conv = conv.max(s.max_relative_convergence);
    }
    Ok(Outcome {
        passed: worst <= HYBRID_RATIO && conv < HYBRID_CONVERGENCE,
        detail: format!(
            "max ratio {worst:.4} over {HYBRID_TRIALS} trials x k in {{1,3,8}} (seed {HYBRID_SEED:#x}); step-halving change {conv:.1e}"
        ),
        budget: HYBRID_BUDGET,
    })
}

fn parseval() -> Result<Outcome> {
    let mu = mobius_cover(4 * PARSEVAL_X + 1)?;
    let r = parseval_ratio(&mu, PARSEVAL_H, PARSEVAL_X)?;
    Ok(Outcome {
        passed: r.ratio <= PARSEVAL_RATIO,
        detail: format!(
            "lhs {:.3e}, rhs {:.3e}, ratio {:.4} (quadrature error {:.1e})",
            r.lhs, r.rhs, r.ratio, r.quadrature_error
        ),
        budget: PARSEVAL_BUDGET,
    })
}

fn flow_entropy() -> Result<Outcome> {
    let (l0, l1) = ENTROPY_L;
    let mu2 = power_free_sieve(1, ENTROPY_N as usize, 2)?;
    let profile = entropy_profile(&mu2, l0..=l1, ENTROPY_N)?;
    let (lo, hi) = ENTROPY_BAND;
    let in_band = profile
        .rows
        .iter()
        .all(|r| (lo..=hi).contains(&r.bits_per_symbol));
    let limit = 6.0 / (PI * PI);
    let below_limit = profile.rows.iter().all(|r| r.bits_per_symbol <= limit);
    let product = product_of_shifts(&[0, 1], 1, ENTROPY_N as usize)?;
    let witness = entropy_profile(&product, [PRODUCT_L], ENTROPY_N)?.rows[0].bits_per_symbol;
    let bits: Vec<String> = profile
        .rows
        .iter()
        .map(|r| format!("{}:{:.3}", r.l, r.bits_per_symbol))
        .collect();
    Ok(Outcome {
        passed: in_band && below_limit && witness >= PRODUCT_FLOOR,
        detail: format!(
            "mu^2 bits/symbol {} (band [{lo}, {hi}], below 6/pi^2: {below_limit}); product of shifts at L={PRODUCT_L}: {witness:.3}",
            bits.join(" ")
        ),
        budget: ENTROPY_BUDGET,
    })
}

fn quadratic_phase() -> Result<Outcome> {
    let n = QUADRATIC_N;
    let m_max = QUADRATIC_MAX_SHIFT;
    let f = sampler(
        SamplerKind::ExpQuadratic(2f64.sqrt()),
        1,
        n as usize + m_max,
    )?;
    let mean = CesaroMean::single(n)?;
    let mut worst_inner: f64 = 0.0;
    for l in 0..m_max {
        for m in l + 1..=m_max {
            let v = cesaro_inner(&f.shifted(l)?, &f.shifted(m)?, &mean)?.last();
            worst_inner = worst_inner.max(v.norm());
        }
    }
    let mut worst_norm: f64 = 0.0;
    for m in 1..=m_max {
        worst_norm = worst_norm.max((eperiod_defect(&f, m, n)? - 2.0).abs());
    }
    Ok(Outcome {
        passed: worst_inner <= QUADRATIC_TOL && worst_norm <= QUADRATIC_TOL,
        detail: format!("max |<A^l f, A^m f>| = {worst_inner:.2e}; max | ||f - A^m f||^2 - 2 | = {worst_norm:.2e}"),
        budget: QUADRATIC_BUDGET,
    })
}

fn block_periodicity() -> Result<Outcome> {
    let k = BLOCK_K;
    let f = block_eperiodic(k, |j| j, |j| j, BLOCK_LENGTH)?;
    let n = (BLOCK_LENGTH - k) as u64;
    let at_k = eperiod_defect(&f, k, n)?;
    let below: Vec<f64> = (1..k)
        .map(|l| eperiod_defect(&f, l, n))
        .collect::<Result<_>>()?;
    let min_below = below.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Outcome {
        passed: at_k <= BLOCK_AT_PERIOD && min_below >= BLOCK_BELOW_PERIOD,
        detail: format!("defect at lag {k}: {at_k:.2e}; min defect at lags < {k}: {min_below:.4}"),
        budget: BLOCK_BUDGET,
    })
}

/// Runs one criterion by number.
pub fn run(id: u8) -> CriterionResult {
    match id {
        1 => timed(id, sieve_exactness),
        2 => timed(id, squarefree_density),
        3 => timed(id, mirsky),
        4 => timed(id, rigidity),
        5 => timed(id, second_moment_grid),
        6 => timed(id, chowla),
        7 => timed(id, decomposition),
        8 => timed(id, characters),
        9 => timed(id, pretentious_floors),
        10 => timed(id, halasz),
        11 => timed(id, hybrid),
        12 => timed(id, parseval),
        13 => timed(id, flow_entropy),
        14 => timed(id, quadratic_phase),
        15 => timed(id, block_periodicity),
        _ => CriterionResult {
            id,
            title: "unknown".into(),
            passed: false,
            detail: format!("no criterion numbered {id}"),
            elapsed_secs: 0.0,
            budget_secs: 0.0,
        },
    }
}

/// Runs every criterion in order, calling `report` after each.
pub fn run_all(mut report: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .map(|&(id, _)| {
            let r = run(id);
            report(&r);
            r
        })
        .collect()
}
