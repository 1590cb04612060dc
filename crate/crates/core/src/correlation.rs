//! Shift correlations of μ_r, Mirsky's Euler product for them, and the
//! rigidity sequence n_j = (p₁⋯p_j)^r along which μ_r is almost periodic.

use crate::error::{invalid, LabError, Result};
use crate::numerics::{ComplexKahan, KahanSum};
use crate::sieve::oracle::factor_small;
use crate::sieve::{power_free_sieve, primes_up_to, SeqWindow, ValuesRef};
use num_complex::Complex64;
use serde::Serialize;

/// Default prime cutoff for the Euler-product oracles.
pub const DEFAULT_ORACLE_CUTOFF: u64 = 1_000_000;

/// A truncated Euler product ∏_{p ≤ P} L(p), times an exactly known finite
/// adjustment, with a rigorous bound on |log(true / partial)|.
#[derive(Debug, Clone, Serialize)]
pub struct EulerProductTruncation {
    pub cutoff_prime: u64,
    /// ∏_{p ≤ P} L(p), accumulated in log-space.
    pub truncated_value: f64,
    /// Finite correction factor known in closed form (1 when absent).
    pub adjustment: f64,
    pub partial_value: f64,
    pub tail_bound: f64,
}

impl EulerProductTruncation {
    /// Interval guaranteed to contain the infinite product.
    pub fn enclosure(&self) -> (f64, f64) {
        let a = self.partial_value * (-self.tail_bound).exp();
        let b = self.partial_value * self.tail_bound.exp();
        (a.min(b), a.max(b))
    }

    /// Absolute error bound on `partial_value`.
    pub fn abs_error(&self) -> f64 {
        self.partial_value.abs() * self.tail_bound.exp_m1()
    }
}

/// ∏_{p ≤ P} (1 − c/p^r) in log-space. Also returns the tail bound
/// Σ_{p > P} |log(1 − c/p^r)| ≤ c/(1 − c·P^{−r}) · ∫_P^∞ t^{−r} dt,
/// which overcounts by summing over all integers above P.
fn local_product(primes: &[u64], cutoff: u64, c: f64, r: u32) -> (f64, f64) {
    let mut log = KahanSum::new();
    for &p in primes.iter().take_while(|&&p| p <= cutoff) {
        let x = c / (p as f64).powi(r as i32);
        log.add((-x).ln_1p());
    }
    let big_p = cutoff as f64;
    let first = c * big_p.powi(-(r as i32));
    let tail = c / (1.0 - first) * big_p.powi(1 - r as i32) / (r as f64 - 1.0);
    (log.value().exp(), tail)
}

/// Mirsky's product ∏_p (1 − 2/p^r) · ∏_{p^r | m} (1 + 1/(p^r − 2)) with the
/// truncated part cached, so many lags m can be evaluated cheaply.
#[derive(Debug, Clone)]
pub struct MirskyTable {
    r: u32,
    cutoff: u64,
    base: f64,
    base_tail: f64,
    inverse_zeta: f64,
    inverse_zeta_tail: f64,
}

impl MirskyTable {
    pub fn new(r: u32, cutoff: u64) -> Result<Self> {
        if r < 2 {
            return invalid(format!("r must be >= 2, got {r}"));
        }
        if cutoff < 100 {
            return invalid(format!("oracle cutoff must be >= 100, got {cutoff}"));
        }
        let primes = primes_up_to(cutoff);
        let (base, base_tail) = local_product(&primes, cutoff, 2.0, r);
        let (inverse_zeta, inverse_zeta_tail) = local_product(&primes, cutoff, 1.0, r);
        Ok(Self {
            r,
            cutoff,
            base,
            base_tail,
            inverse_zeta,
            inverse_zeta_tail,
        })
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    /// Limit of (1/N) Σ μ_r(n) μ_r(n + m).
    pub fn oracle(&self, m: u64) -> Result<EulerProductTruncation> {
        if m == 0 {
            return invalid("Mirsky lag m must be >= 1");
        }
        let adjustment = mirsky_adjustment(self.r, m);
        Ok(EulerProductTruncation {
            cutoff_prime: self.cutoff,
            truncated_value: self.base,
            adjustment,
            partial_value: self.base * adjustment,
            tail_bound: self.base_tail,
        })
    }

    /// 1/ζ(r) = ∏_p (1 − 1/p^r), the density of r-th power-free integers.
    pub fn density(&self) -> EulerProductTruncation {
        EulerProductTruncation {
            cutoff_prime: self.cutoff,
            truncated_value: self.inverse_zeta,
            adjustment: 1.0,
            partial_value: self.inverse_zeta,
            tail_bound: self.inverse_zeta_tail,
        }
    }

    /// 2(⟨μ_r, μ_r⟩ − ⟨μ_r, A^s μ_r⟩), the limiting value of
    /// (1/N) Σ |μ_r(n) − μ_r(n + s)|², with an absolute error bound.
    pub fn defect(&self, s: u64) -> Result<(f64, f64)> {
        if s == 0 {
            return Ok((0.0, 0.0));
        }
        let corr = self.oracle(s)?;
        let dens = self.density();
        let value = 2.0 * (dens.partial_value - corr.partial_value);
        Ok((value, 2.0 * (dens.abs_error() + corr.abs_error())))
    }
}

/// ∏_{p^r | m} (1 + 1/(p^r − 2)), exact over the prime factorization of m.
pub fn mirsky_adjustment(r: u32, m: u64) -> f64 {
    factor_small(m)
        .into_iter()
        .filter(|&(_, e)| e >= r)
        .map(|(p, _)| {
            let pr = (p as f64).powi(r as i32);
            1.0 + 1.0 / (pr - 2.0)
        })
        .product()
}

pub fn mirsky_oracle(r: u32, m: u64, cutoff: u64) -> Result<EulerProductTruncation> {
    MirskyTable::new(r, cutoff)?.oracle(m)
}

/// (1/N) Σ_{n ≤ N} f(n)·conj(g(n + m)), both windows read from their first entry.
pub fn shift_correlation(f: &SeqWindow, g: &SeqWindow, m: usize, n: u64) -> Result<Complex64> {
    let n_us = n as usize;
    if n == 0 || f.len() < n_us || g.len() < n_us + m {
        return invalid(format!(
            "correlation at lag {m} over N = {n} needs windows of length {n} and {}, got {} and {}",
            n_us + m,
            f.len(),
            g.len()
        ));
    }
    Ok(match (f.values(), g.values()) {
        (ValuesRef::Small(a), ValuesRef::Small(b)) => {
            let s: i64 = a[..n_us]
                .iter()
                .zip(&b[m..m + n_us])
                .map(|(&x, &y)| x as i64 * y as i64)
                .sum();
            Complex64::new(s as f64 / n as f64, 0.0)
        }
        _ => {
            let mut acc = ComplexKahan::new();
            for i in 0..n_us {
                acc.add(f.get(i) * g.get(i + m).conj());
            }
            acc.value() / n as f64
        }
    })
}

/// n_j = (p₁ p₂ ⋯ p_j)^r.
pub fn rigidity_sequence(r: u32, j: usize) -> Result<u64> {
    if j == 0 {
        return invalid("rigidity index j must be >= 1");
    }
    let mut primes = primes_up_to(64);
    let mut bound = 64;
    while primes.len() < j {
        bound *= 2;
        primes = primes_up_to(bound);
    }
    primes[..j]
        .iter()
        .try_fold(1u64, |acc, &p| acc.checked_mul(p.checked_pow(r)?))
        .ok_or_else(|| LabError::Overflow(format!("(p_1...p_{j})^{r} does not fit in 64 bits")))
}

#[derive(Debug, Clone, Serialize)]
pub struct RigidityNorm {
    pub r: u32,
    pub j: usize,
    pub l: u64,
    pub n: u64,
    /// l·n_j
    pub lag: u64,
    pub empirical: f64,
    pub closed_form: f64,
    /// Absolute error bound on `closed_form` from the Euler-product tails.
    pub closed_form_error: f64,
}

/// (1/N) Σ_{n ≤ N} |w(n) − w(n + s)|² for a {0,1} (or small) window read from its start.
pub fn lag_defect(w: &SeqWindow, s: usize, n: u64) -> Result<f64> {
    let n_us = n as usize;
    let v = w
        .small()
        .ok_or_else(|| LabError::InvalidArgument("lag defect needs a compact window".into()))?;
    if n == 0 || v.len() < n_us + s {
        return invalid(format!(
            "lag {s} over N = {n} needs {} values, window has {}",
            n_us + s,
            v.len()
        ));
    }
    let total: i64 = v[..n_us]
        .iter()
        .zip(&v[s..s + n_us])
        .map(|(&a, &b)| {
            let d = a as i64 - b as i64;
            d * d
        })
        .sum();
    Ok(total as f64 / n as f64)
}

/// ‖μ_r − A^{l n_j} μ_r‖²_N against its Mirsky closed form, on a μ_r window
/// starting at 1.
pub fn rigidity_norm_on(
    mu_r: &SeqWindow,
    table: &MirskyTable,
    j: usize,
    l: u64,
    n: u64,
) -> Result<RigidityNorm> {
    if mu_r.start() != 1 {
        return invalid("μ_r window must start at 1");
    }
    let nj = rigidity_sequence(table.r(), j)?;
    let lag = l
        .checked_mul(nj)
        .ok_or_else(|| LabError::Overflow(format!("lag {l}·{nj} overflows")))?;
    let empirical = lag_defect(mu_r, lag as usize, n)?;
    let (closed_form, closed_form_error) = table.defect(lag)?;
    Ok(RigidityNorm {
        r: table.r(),
        j,
        l,
        n,
        lag,
        empirical,
        closed_form,
        closed_form_error,
    })
}

pub fn rigidity_norm(r: u32, j: usize, l: u64, n: u64, cutoff: u64) -> Result<RigidityNorm> {
    let table = MirskyTable::new(r, cutoff)?;
    let lag = rigidity_sequence(r, j)?.saturating_mul(l);
    let w = power_free_sieve(1, (n + lag) as usize, r)?;
    rigidity_norm_on(&w, &table, j, l, n)
}

/// Pointwise product ∏_i μ²(n + m_i) on [start, start + length).
pub fn product_of_shifts(m_list: &[u64], start: u64, length: usize) -> Result<SeqWindow> {
    let Some(&max_m) = m_list.iter().max() else {
        return invalid("shift list must be nonempty");
    };
    let base = power_free_sieve(start, length + max_m as usize, 2)?;
    let mu2 = base.small().unwrap();
    let mut out = vec![1i8; length];
    for &m in m_list {
        let m = m as usize;
        for (o, &v) in out.iter_mut().zip(&mu2[m..m + length]) {
            *o *= v;
        }
    }
    SeqWindow::from_small(start, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mean_state::norm_sq;
    use proptest::prelude::*;

    #[test]
    fn rigidity_sequence_examples() {
        assert_eq!(rigidity_sequence(2, 2).unwrap(), 36);
        assert_eq!(rigidity_sequence(2, 3).unwrap(), 900);
        assert_eq!(rigidity_sequence(3, 2).unwrap(), 216);
        assert!(rigidity_sequence(2, 0).is_err());
        assert!(matches!(
            rigidity_sequence(2, 16),
            Err(LabError::Overflow(_))
        ));
    }

    #[test]
    fn mirsky_adjustments() {
        let t = MirskyTable::new(2, 10_000).unwrap();
        let base = t.oracle(1).unwrap();
        assert_eq!(base.adjustment, 1.0);
        assert!((t.oracle(4).unwrap().partial_value / base.partial_value - 1.5).abs() < 1e-15);
        let t3 = MirskyTable::new(3, 10_000).unwrap();
        let b3 = t3.oracle(1).unwrap().partial_value;
        assert!((t3.oracle(8).unwrap().partial_value / b3 - 7.0 / 6.0).abs() < 1e-15);
        assert!(t.oracle(0).is_err());
        assert!(MirskyTable::new(1, 1000).is_err());
        assert!(MirskyTable::new(2, 99).is_err());
    }

    #[test]
    fn tail_bound_is_small_at_default_cutoff() {
        let o = mirsky_oracle(2, 1, DEFAULT_ORACLE_CUTOFF).unwrap();
        assert!(o.tail_bound < 1e-4);
        // the truncation at 10^4 must enclose the truncation at 10^6
        let coarse = mirsky_oracle(2, 1, 10_000).unwrap();
        let (lo, hi) = coarse.enclosure();
        assert!(lo <= o.partial_value && o.partial_value <= hi);
    }

    #[test]
    fn density_is_inverse_zeta_two() {
        let t = MirskyTable::new(2, DEFAULT_ORACLE_CUTOFF).unwrap();
        let d = t.density();
        let six_over_pi2 = 6.0 / std::f64::consts::PI.powi(2);
        assert!((d.partial_value - six_over_pi2).abs() <= d.abs_error() + 1e-15);
    }

    #[test]
    fn product_of_shifts_examples() {
        let w = product_of_shifts(&[0, 1], 1, 6).unwrap();
        assert_eq!(w.small().unwrap(), &[1, 1, 0, 0, 1, 1]);
        let single = product_of_shifts(&[0], 1, 20).unwrap();
        assert_eq!(single, power_free_sieve(1, 20, 2).unwrap());
        assert!(product_of_shifts(&[], 1, 5).is_err());
    }

    #[test]
    fn zero_lag_rigidity_is_exactly_zero() {
        let r = rigidity_norm(2, 2, 0, 10_000, 1_000).unwrap();
        assert_eq!(r.empirical, 0.0);
        assert_eq!(r.closed_form, 0.0);
    }

    #[test]
    fn closed_form_shrinks_with_j() {
        let t = MirskyTable::new(2, 100_000).unwrap();
        let vals: Vec<f64> = (1..=6)
            .map(|j| t.defect(rigidity_sequence(2, j).unwrap()).unwrap().0)
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
        assert!(vals[5] < 0.25 * vals[0], "{vals:?}");
    }

    #[test]
    fn constant_correlation() {
        let one = SeqWindow::constant(1, 30, 1).unwrap();
        assert_eq!(
            shift_correlation(&one, &one, 7, 20).unwrap(),
            Complex64::new(1.0, 0.0)
        );
        assert!(shift_correlation(&one, &one, 11, 20).is_err());
    }

    #[test]
    fn zero_lag_is_the_norm() {
        let w = power_free_sieve(1, 5_000, 2).unwrap();
        let c = shift_correlation(&w, &w, 0, 5_000).unwrap();
        assert_eq!(c.re, norm_sq(&w, 5_000).unwrap());
    }

    proptest! {
        #[test]
        fn adjustment_is_one_iff_no_rth_power_divides(m in 1u64..200_000, r in 2u32..4) {
            let a = mirsky_adjustment(r, m);
            let divisible = factor_small(m).iter().any(|&(_, e)| e >= r);
            prop_assert!(a >= 1.0);
            prop_assert_eq!(a == 1.0, !divisible);
        }

        #[test]
        fn closed_form_defect_at_multiples_never_exceeds_first(l in 1u64..500, j in 1usize..4) {
            let t = MirskyTable::new(2, 1_000).unwrap();
            let nj = rigidity_sequence(2, j).unwrap();
            let first = t.defect(nj).unwrap().0;
            let multiple = t.defect(l * nj).unwrap().0;
            prop_assert!(multiple <= first + 1e-15);
            prop_assert!(multiple <= 2.0 * first);
        }

        #[test]
        fn reversed_lag_differs_only_at_the_boundary(seed in 0u64..1_000, m in 0usize..40) {
            let start = 1 + seed * 997;
            let w = crate::sieve::mobius_sieve(start, 2_100).unwrap();
            let v = w.small().unwrap();
            let n = 2_000usize;
            let forward = shift_correlation(&w, &w, m, n as u64).unwrap().re;
            // lag −m over the same index range: Σ_{m < i ≤ n} f(i) f(i − m)
            let backward: i64 = (m..n).map(|i| v[i] as i64 * v[i - m] as i64).sum();
            let backward = backward as f64 / n as f64;
            prop_assert!((forward - backward).abs() <= 2.0 * m as f64 / n as f64 + 1e-12);
        }
    }
}
