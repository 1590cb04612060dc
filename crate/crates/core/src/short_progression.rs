//! Second moments of Möbius sums over short arithmetic progressions,
//!
//! ```text
//! S = (1/N) Σ_{n=1}^{N} |Σ_{l=1}^{h} μ(n + kl)|²,
//! ```
//!
//! compared against h²·(k/φ(k))·log log h / log h, together with the
//! residue/divisor decomposition of the same sum and the admissibility test
//! Σ_{p|k} 1/p ≤ (1 − ε) Σ_{p≤h} 1/p.

use crate::error::{invalid, Result};
use crate::numerics::KahanSum;
use crate::sieve::oracle::{euler_phi, prime_divisors};
use crate::sieve::{primes_up_to, SeqWindow, ValuesRef};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

/// Default sweep grid.
pub const DEFAULT_H: [u64; 3] = [10, 100, 1_000];
pub const DEFAULT_K: [u64; 5] = [1, 2, 6, 30, 210];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    #[serde(rename = "N")]
    pub n: u64,
    pub h: u64,
    pub k: u64,
    /// Σ_n |Σ_l μ(n + kl)|², exact.
    pub sum_of_squares: u64,
    #[serde(rename = "S")]
    pub s: f64,
    /// h²·(k/φ(k))·ln ln h / ln h; absent for h = 2 where ln ln 2 < 0.
    pub bound: Option<f64>,
    pub ratio: Option<f64>,
    pub chowla_ratio: f64,
}

impl MomentReport {
    pub const CSV_HEADER: &'static str = "N,h,k,S,bound,ratio,chowla_ratio";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            self.n,
            self.h,
            self.k,
            self.s,
            opt(self.bound),
            opt(self.ratio),
            self.chowla_ratio
        )
    }
}

/// h²·(k/φ(k))·ln ln h / ln h, defined for h ≥ 3.
pub fn moment_bound(h: u64, k: u64) -> Option<f64> {
    if h < 3 || k == 0 {
        return None;
    }
    let hf = h as f64;
    Some(hf * hf * (k as f64 / euler_phi(k) as f64) * hf.ln().ln() / hf.ln())
}

const BLOCK: usize = 1 << 18;

/// Σ_{i<n} (Σ_{l=1}^{h} v[i + kl])² by a sliding update along each residue
/// class mod k. Blocks of indices are processed independently; each block
/// seeds its first k inner sums directly.
fn sliding_sum_squares(v: &[i8], n: usize, h: usize, k: usize) -> u64 {
    let starts: Vec<usize> = (0..n).step_by(BLOCK).collect();
    starts
        .into_par_iter()
        .map(|lo| {
            let hi = n.min(lo + BLOCK);
            let mut ring = vec![0i64; k];
            let mut total = 0u64;
            for i in lo..hi {
                let slot = (i - lo) % k;
                let s = if i - lo < k {
                    (1..=h).map(|l| v[i + k * l] as i64).sum()
                } else {
                    ring[slot] - v[i] as i64 + v[i + k * h] as i64
                };
                ring[slot] = s;
                total += (s * s) as u64;
            }
            total
        })
        .sum()
}

fn require_mu(mu: &SeqWindow, need: u64) -> Result<&[i8]> {
    if mu.start() != 1 {
        return invalid(format!(
            "μ window must start at 1, starts at {}",
            mu.start()
        ));
    }
    let v = mu
        .small()
        .ok_or_else(|| crate::LabError::InvalidArgument("μ window must be compact".into()))?;
    if (v.len() as u64) < need {
        return invalid(format!(
            "μ window has length {} but {need} values are needed",
            v.len()
        ));
    }
    Ok(v)
}

/// Second moment of Möbius sums in short progressions, on a μ window
/// starting at 1 and covering N + hk.
pub fn second_moment_on(mu: &SeqWindow, n: u64, h: u64, k: u64) -> Result<MomentReport> {
    if h < 2 {
        return invalid(format!("h must be >= 2, got {h}"));
    }
    if k < 1 || n < 1 {
        return invalid("k and N must be >= 1");
    }
    let v = require_mu(mu, n + h * k)?;
    let sum_of_squares = sliding_sum_squares(v, n as usize, h as usize, k as usize);
    let s = sum_of_squares as f64 / n as f64;
    let bound = moment_bound(h, k);
    Ok(MomentReport {
        n,
        h,
        k,
        sum_of_squares,
        s,
        bound,
        ratio: bound.map(|b| s / b),
        chowla_ratio: s / h as f64,
    })
}

pub fn second_moment(n: u64, h: u64, k: u64) -> Result<MomentReport> {
    if h < 2 {
        return invalid(format!("h must be >= 2, got {h}"));
    }
    let mu = crate::sieve::mobius_sieve(1, (n + h * k) as usize)?;
    second_moment_on(&mu, n, h, k)
}

/// ‖(1/h) Σ_{l=1}^{h} A^{kl} f‖²_N over the first N + hk entries of f.
pub fn averaged_shift_norm(f: &SeqWindow, h: u64, k: u64, n: u64) -> Result<f64> {
    if h < 1 || k < 1 || n < 1 {
        return invalid("h, k and N must be >= 1");
    }
    let (h_us, k_us, n_us) = (h as usize, k as usize, n as usize);
    if f.len() < n_us + h_us * k_us {
        return invalid(format!(
            "window of length {} does not cover N + hk = {}",
            f.len(),
            n_us + h_us * k_us
        ));
    }
    let h2 = (h as f64) * (h as f64);
    Ok(match f.values() {
        ValuesRef::Small(v) => sliding_sum_squares(v, n_us, h_us, k_us) as f64 / n as f64 / h2,
        ValuesRef::Complex(v) => {
            let starts: Vec<usize> = (0..n_us).step_by(4096).collect();
            let parts: Vec<KahanSum> = starts
                .into_par_iter()
                .map(|lo| {
                    let hi = n_us.min(lo + 4096);
                    let mut ring = vec![Complex64::new(0.0, 0.0); k_us];
                    let mut acc = KahanSum::new();
                    for i in lo..hi {
                        let slot = (i - lo) % k_us;
                        let s = if i - lo < k_us {
                            (1..=h_us).map(|l| v[i + k_us * l]).sum()
                        } else {
                            ring[slot] - v[i] + v[i + k_us * h_us]
                        };
                        ring[slot] = s;
                        acc.add(s.norm_sqr());
                    }
                    acc
                })
                .collect();
            let mut total = KahanSum::new();
            for p in &parts {
                total.merge(p);
            }
            total.value() / n as f64 / h2
        }
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Admissibility {
    pub k: u64,
    pub h: u64,
    pub epsilon: f64,
    /// Σ_{p | k} 1/p
    pub lhs: f64,
    /// Σ_{p ≤ h} 1/p
    pub prime_sum: f64,
    /// (1 − ε)·Σ_{p ≤ h} 1/p
    pub rhs: f64,
    pub admissible: bool,
}

pub fn admissible_pair(k: u64, h: u64, epsilon: f64) -> Result<Admissibility> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return invalid(format!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    if k == 0 {
        return invalid("k must be >= 1");
    }
    let lhs: f64 = prime_divisors(k)
        .iter()
        .map(|&p| 1.0 / p as f64)
        .collect::<KahanSum>()
        .value();
    let prime_sum = primes_up_to(h)
        .iter()
        .map(|&p| 1.0 / p as f64)
        .collect::<KahanSum>()
        .value();
    let rhs = (1.0 - epsilon) * prime_sum;
    Ok(Admissibility {
        k,
        h,
        epsilon,
        lhs,
        prime_sum,
        rhs,
        admissible: lhs <= rhs,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    #[serde(rename = "X")]
    pub x: u64,
    pub h: u64,
    pub k: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub residual_over_x: f64,
}

fn gcd(a: u64, b: u64) -> u64 {
    crate::sieve::spec::gcd(a, b)
}

/// Σ_{n ∈ [lo, hi], n ≡ a (mod q)} g(n) from per-class prefix sums
/// P[n] = g(n) + P[n − q].
fn class_sum(prefix: &[i64], q: u64, a: u64, lo: u64, hi: u64) -> i64 {
    let first = lo + (a + q - lo % q) % q;
    if first > hi {
        return 0;
    }
    let last = hi - (hi + q - a % q) % q;
    let before = if first >= q {
        prefix[(first - q) as usize]
    } else {
        0
    };
    prefix[last as usize] - before
}

/// Both sides of the residue/divisor decomposition
///
/// ```text
/// Σ_{n=X}^{2X} |Σ_{l=1}^{h} μ(n+kl)|²
///   ≈ (1/k) Σ_{d|k} d Σ_{a ≤ k/d, (a,k/d)=1} Σ_{X/d ≤ x ≤ 2X/d} |Σ_{x ≤ n ≤ x+hk/d, n ≡ a (k/d)} μ(n)1_{(n,k)=1}|²
/// ```
///
/// evaluated exactly; x runs over the integers in [⌈X/d⌉, ⌊2X/d⌋].
pub fn divisor_decomposition_on(
    mu: &SeqWindow,
    x: u64,
    h: u64,
    k: u64,
) -> Result<DecompositionReport> {
    if x < 1 || h < 1 || k < 1 {
        return invalid("X, h and k must be >= 1");
    }
    let top = 2 * x + h * k;
    let v = require_mu(mu, top)?;
    let at = |n: u64| v[(n - 1) as usize] as i64;

    let mut lhs: i128 = 0;
    for n in x..=2 * x {
        let s: i64 = (1..=h).map(|l| at(n + k * l)).sum();
        lhs += (s * s) as i128;
    }

    // g(n) = μ(n)·1_{(n,k)=1}, index 0 holds g(0) = 0
    let g: Vec<i64> = (0..=top)
        .map(|n| if n == 0 || gcd(n, k) > 1 { 0 } else { at(n) })
        .collect();
    let mut weighted: i128 = 0;
    for d in (1..=k).filter(|d| k % d == 0) {
        let q = k / d;
        let mut prefix = vec![0i64; g.len()];
        for n in 1..g.len() {
            prefix[n] = g[n]
                + if n as u64 >= q {
                    prefix[n - q as usize]
                } else {
                    0
                };
        }
        let span = h * k / d;
        let mut inner: i128 = 0;
        for a in (1..=q).filter(|&a| gcd(a, q) == 1) {
            for xx in x.div_ceil(d)..=(2 * x) / d {
                let s = class_sum(&prefix, q, a % q, xx, xx + span);
                inner += (s * s) as i128;
            }
        }
        weighted += d as i128 * inner;
    }
    let lhs = lhs as f64;
    let rhs = weighted as f64 / k as f64;
    let residual = (lhs - rhs).abs();
    Ok(DecompositionReport {
        x,
        h,
        k,
        lhs,
        rhs,
        residual,
        residual_over_x: residual / x as f64,
    })
}

pub fn divisor_decomposition(x: u64, h: u64, k: u64) -> Result<DecompositionReport> {
    let mu = crate::sieve::mobius_sieve(1, (2 * x + h * k + k) as usize)?;
    divisor_decomposition_on(&mu, x, h, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sieve::mobius_sieve;

    fn brute_force(v: &[i8], n: usize, h: usize, k: usize) -> u64 {
        (0..n)
            .map(|i| {
                let s: i64 = (1..=h).map(|l| v[i + k * l] as i64).sum();
                (s * s) as u64
            })
            .sum()
    }

    #[test]
    fn bound_arithmetic() {
        let b = moment_bound(100, 1).unwrap();
        let expected = 1e4 * 100f64.ln().ln() / 100f64.ln();
        assert!((b - expected).abs() < 1e-9);
        assert!((b - 3316.2).abs() < 0.5, "{b}");
        assert!(moment_bound(2, 1).is_none());
        assert!((moment_bound(10, 6).unwrap() / moment_bound(10, 1).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn h_two_keeps_s_but_drops_bound() {
        let r = second_moment(1_000, 2, 3).unwrap();
        assert!(r.bound.is_none() && r.ratio.is_none());
        assert!(r.s > 0.0);
        assert!(second_moment(1_000, 1, 3).is_err());
    }

    #[test]
    fn sliding_matches_brute_force_at_1e5() {
        let mu = mobius_sieve(1, 100_000 + 10).unwrap();
        let r = second_moment_on(&mu, 100_000 - 10, 10, 1).unwrap();
        assert_eq!(
            r.sum_of_squares,
            brute_force(mu.small().unwrap(), 100_000 - 10, 10, 1)
        );
    }

    #[test]
    fn averaged_norm_is_scaled_moment() {
        let mu = mobius_sieve(1, 50_000).unwrap();
        let r = second_moment_on(&mu, 40_000, 20, 6).unwrap();
        let a = averaged_shift_norm(&mu, 20, 6, 40_000).unwrap();
        assert!((a * 400.0 - r.s).abs() <= 1e-9 * r.s);
        let one = SeqWindow::constant(1, 1_000, 1).unwrap();
        assert_eq!(averaged_shift_norm(&one, 7, 3, 500).unwrap(), 1.0);
    }

    #[test]
    fn complex_path_agrees_with_integer_path() {
        let mu = mobius_sieve(1, 30_000).unwrap();
        let as_complex = SeqWindow::from_complex(1, mu.to_complex_vec()).unwrap();
        let a = averaged_shift_norm(&mu, 13, 5, 20_000).unwrap();
        let b = averaged_shift_norm(&as_complex, 13, 5, 20_000).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn admissibility_examples() {
        let a = admissible_pair(1 << 10, 100, 0.1).unwrap();
        assert_eq!(a.lhs, 0.5);
        assert!((a.prime_sum - 1.802_817).abs() < 1e-6, "{}", a.prime_sum);
        assert!(a.admissible);
        assert!(admissible_pair(1, 3, 0.5).unwrap().admissible);
        let primorial: u64 = [2u64, 3, 5, 7, 11, 13, 17, 19, 23].iter().product();
        assert!(!admissible_pair(primorial, 5, 0.1).unwrap().admissible);
        assert!(admissible_pair(6, 10, 1.0).is_err());
    }

    #[test]
    fn decomposition_full_enumeration_h2_k2() {
        let mu = mobius_sieve(1, 2_100).unwrap();
        let r = divisor_decomposition_on(&mu, 1_000, 2, 2).unwrap();
        let v = mu.small().unwrap();
        let at = |n: u64| v[(n - 1) as usize] as i64;
        let lhs: i64 = (1_000..=2_000u64)
            .map(|n| (at(n + 2) + at(n + 4)).pow(2))
            .sum();
        // d = 1: q = 2, a = 1, x in [1000, 2000], n in [x, x+4] odd
        // d = 2: q = 1, a = 1, x in [500, 1000], n in [x, x+2]
        let g = |n: u64| if n % 2 == 0 { 0 } else { at(n) };
        let d1: i64 = (1_000..=2_000u64)
            .map(|x| {
                (x..=x + 4)
                    .filter(|n| n % 2 == 1)
                    .map(g)
                    .sum::<i64>()
                    .pow(2)
            })
            .sum();
        let d2: i64 = (500..=1_000u64)
            .map(|x| (x..=x + 2).map(g).sum::<i64>().pow(2))
            .sum();
        assert_eq!(r.lhs, lhs as f64);
        assert_eq!(r.rhs, (d1 + 2 * d2) as f64 / 2.0);
    }

    #[test]
    fn decomposition_k1_is_a_reindexing() {
        let mu = mobius_sieve(1, 200_100).unwrap();
        let r = divisor_decomposition_on(&mu, 100_000, 10, 1).unwrap();
        assert!(r.residual <= 10.0 * 10.0 * r.x as f64, "{r:?}");
    }

    #[test]
    fn class_sums() {
        // g = 1 on 1..=20
        let g: Vec<i64> = (0..=20).map(|n| i64::from(n > 0)).collect();
        let q = 3;
        let mut p = vec![0i64; g.len()];
        for n in 1..g.len() {
            p[n] = g[n] + if n >= q { p[n - q] } else { 0 };
        }
        assert_eq!(class_sum(&p, 3, 1, 1, 20), 7); // 1,4,...,19
        assert_eq!(class_sum(&p, 3, 0, 5, 12), 3); // 6,9,12
        assert_eq!(class_sum(&p, 3, 2, 6, 7), 0);
    }
}
