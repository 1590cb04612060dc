//! Segmented sieves. Each block [lo, hi) is sieved independently with the
//! primes up to √(hi − 1), so blocks can run concurrently and concatenate.

use super::spec::{MultiplicativeSpec, SpecKind};
use super::window::SeqWindow;
use crate::error::{invalid, LabError, Result};
use crate::numerics::ComplexKahan;
use num_complex::Complex64;
use rayon::prelude::*;

/// Default number of entries per sieve block (2^20).
pub const DEFAULT_BLOCK: usize = 1 << 20;

/// Largest exclusive end of a sieved range. Keeps p² and partial products
/// comfortably inside u64.
pub const MAX_END: u64 = 1 << 62;

/// All primes p ≤ n, by the sieve of Eratosthenes over odd numbers.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    // index i stands for 2i + 1
    let half = n / 2 + 1;
    let mut composite = vec![false; half];
    let mut i = 1;
    while (2 * i + 1) * (2 * i + 1) <= n {
        if !composite[i] {
            let p = 2 * i + 1;
            let mut j = p * p / 2;
            while j < half {
                composite[j] = true;
                j += p;
            }
        }
        i += 1;
    }
    let mut primes = Vec::with_capacity(approx_prime_count(n));
    primes.push(2);
    primes.extend(
        (1..half)
            .filter(|&i| !composite[i] && 2 * i < n)
            .map(|i| (2 * i + 1) as u64),
    );
    primes
}

fn approx_prime_count(n: usize) -> usize {
    if n < 10 {
        4
    } else {
        let x = n as f64;
        (1.26 * x / x.ln()) as usize + 8
    }
}

pub(crate) fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r.saturating_mul(r) > n {
        r -= 1;
    }
    while (r + 1).saturating_mul(r + 1) <= n {
        r += 1;
    }
    r
}

/// Largest b with b^r ≤ n.
pub(crate) fn iroot(n: u64, r: u32) -> u64 {
    if r == 1 {
        return n;
    }
    let mut b = (n as f64).powf(1.0 / r as f64) as u64;
    while b > 0 && b.checked_pow(r).is_none_or(|v| v > n) {
        b -= 1;
    }
    while (b + 1).checked_pow(r).is_some_and(|v| v <= n) {
        b += 1;
    }
    b
}

fn check_range(start: u64, length: usize) -> Result<u64> {
    if start == 0 {
        return invalid("start must be >= 1 (indices are 1-based)");
    }
    if length == 0 {
        return invalid("length must be >= 1");
    }
    match start.checked_add(length as u64) {
        Some(end) if end <= MAX_END => Ok(end),
        _ => Err(LabError::Overflow(format!(
            "range [{start}, {start}+{length}) exceeds the supported limit 2^62"
        ))),
    }
}

fn blocks(start: u64, end: u64, block: usize) -> Vec<(u64, u64)> {
    let block = block.max(1) as u64;
    let mut out = Vec::new();
    let mut lo = start;
    while lo < end {
        let hi = end.min(lo + block);
        out.push((lo, hi));
        lo = hi;
    }
    out
}

fn sieve_small<F>(start: u64, length: usize, block: usize, sieve_block: F) -> Result<SeqWindow>
where
    F: Fn(u64, u64) -> Vec<i8> + Sync,
{
    let end = check_range(start, length)?;
    let parts: Vec<Vec<i8>> = blocks(start, end, block)
        .into_par_iter()
        .map(|(lo, hi)| sieve_block(lo, hi))
        .collect();
    let mut values = Vec::with_capacity(length);
    for p in parts {
        values.extend_from_slice(&p);
    }
    SeqWindow::from_small(start, values)
}

#[inline]
fn first_multiple(lo: u64, d: u64) -> u64 {
    lo.div_ceil(d) * d
}

fn mobius_block(lo: u64, hi: u64, primes: &[u64]) -> Vec<i8> {
    let len = (hi - lo) as usize;
    let mut sign = vec![1i8; len];
    let mut prod = vec![1u64; len];
    let limit = isqrt(hi - 1);
    for &p in primes.iter().take_while(|&&p| p <= limit) {
        let mut m = first_multiple(lo, p);
        while m < hi {
            let i = (m - lo) as usize;
            sign[i] = -sign[i];
            prod[i] *= p;
            m += p;
        }
        let p2 = p * p;
        let mut m = first_multiple(lo, p2);
        while m < hi {
            sign[(m - lo) as usize] = 0;
            m += p2;
        }
    }
    for (i, s) in sign.iter_mut().enumerate() {
        if *s != 0 && prod[i] != lo + i as u64 {
            // one prime factor above √hi remains
            *s = -*s;
        }
    }
    sign
}

fn liouville_block(lo: u64, hi: u64, primes: &[u64]) -> Vec<i8> {
    let len = (hi - lo) as usize;
    let mut sign = vec![1i8; len];
    let mut prod = vec![1u64; len];
    let limit = isqrt(hi - 1);
    for &p in primes.iter().take_while(|&&p| p <= limit) {
        let mut pe = p;
        loop {
            let mut m = first_multiple(lo, pe);
            while m < hi {
                let i = (m - lo) as usize;
                sign[i] = -sign[i];
                prod[i] *= p;
                m += pe;
            }
            match pe.checked_mul(p) {
                Some(next) if next < hi => pe = next,
                _ => break,
            }
        }
    }
    for (i, s) in sign.iter_mut().enumerate() {
        if prod[i] != lo + i as u64 {
            *s = -*s;
        }
    }
    sign
}

fn power_free_block(lo: u64, hi: u64, r: u32, primes: &[u64]) -> Vec<i8> {
    let mut vals = vec![1i8; (hi - lo) as usize];
    let limit = iroot(hi - 1, r);
    for &p in primes.iter().take_while(|&&p| p <= limit) {
        let pr = p.pow(r);
        let mut m = first_multiple(lo, pr);
        while m < hi {
            vals[(m - lo) as usize] = 0;
            m += pr;
        }
    }
    vals
}

/// μ(n) for n in [start, start + length).
pub fn mobius_sieve(start: u64, length: usize) -> Result<SeqWindow> {
    mobius_sieve_blocked(start, length, DEFAULT_BLOCK)
}

pub fn mobius_sieve_blocked(start: u64, length: usize, block: usize) -> Result<SeqWindow> {
    let end = check_range(start, length)?;
    let primes = primes_up_to(isqrt(end - 1));
    sieve_small(start, length, block, |lo, hi| mobius_block(lo, hi, &primes))
}

/// μ_r(n): 1 if n is r-th power-free, else 0. For r = 2 this is μ².
pub fn power_free_sieve(start: u64, length: usize, r: u32) -> Result<SeqWindow> {
    if r < 2 {
        return invalid(format!("power-free order r must be >= 2, got {r}"));
    }
    let end = check_range(start, length)?;
    let primes = primes_up_to(iroot(end - 1, r));
    sieve_small(start, length, DEFAULT_BLOCK, |lo, hi| {
        power_free_block(lo, hi, r, &primes)
    })
}

/// λ(n) = (−1)^Ω(n).
pub fn liouville_sieve(start: u64, length: usize) -> Result<SeqWindow> {
    let end = check_range(start, length)?;
    let primes = primes_up_to(isqrt(end - 1));
    sieve_small(start, length, DEFAULT_BLOCK, |lo, hi| {
        liouville_block(lo, hi, &primes)
    })
}

fn zero_non_coprime(values: &mut [i8], lo: u64, k: u64) {
    for p in super::oracle::prime_divisors(k) {
        let mut m = first_multiple(lo, p);
        let hi = lo + values.len() as u64;
        while m < hi {
            values[(m - lo) as usize] = 0;
            m += p;
        }
    }
}

/// Materializes any [`MultiplicativeSpec`] on [start, start + length).
/// Built-in integer-valued families come back as compact windows.
pub fn evaluate_spec(spec: &MultiplicativeSpec, start: u64, length: usize) -> Result<SeqWindow> {
    let end = check_range(start, length)?;
    let k = spec.coprime_modulus();
    let small = match spec.kind() {
        SpecKind::One => Some(SeqWindow::constant(start, length, 1)?),
        SpecKind::Mobius => Some(mobius_sieve(start, length)?),
        SpecKind::Liouville => Some(liouville_sieve(start, length)?),
        SpecKind::PowerFree(r) => Some(power_free_sieve(start, length, r)?),
        SpecKind::Custom => None,
    };
    if let Some(w) = small {
        if k == 1 {
            return Ok(w);
        }
        let mut values = w.small().expect("built-in sieves are compact").to_vec();
        zero_non_coprime(&mut values, start, k);
        return SeqWindow::from_small(start, values);
    }
    let primes = primes_up_to(isqrt(end - 1));
    let parts: Vec<Vec<Complex64>> = blocks(start, end, DEFAULT_BLOCK)
        .into_par_iter()
        .map(|(lo, hi)| generic_block(spec, lo, hi, &primes))
        .collect();
    let values: Vec<Complex64> = parts.into_iter().flatten().collect();
    SeqWindow::from_complex(start, values)?.with_bound(1.0)
}

/// Values of a spec on [lo, hi) by trial division against the sieving primes.
/// Works for every spec kind; used directly for custom rules.
pub fn generic_block(
    spec: &MultiplicativeSpec,
    lo: u64,
    hi: u64,
    primes: &[u64],
) -> Vec<Complex64> {
    let len = (hi - lo) as usize;
    let mut resid: Vec<u64> = (lo..hi).collect();
    let mut acc = vec![Complex64::new(1.0, 0.0); len];
    let limit = isqrt(hi - 1);
    for &p in primes.iter().take_while(|&&p| p <= limit) {
        let mut m = first_multiple(lo, p);
        while m < hi {
            let i = (m - lo) as usize;
            let mut e = 0;
            while resid[i] % p == 0 {
                resid[i] /= p;
                e += 1;
            }
            acc[i] *= spec.at_prime_power(p, e);
            m += p;
        }
    }
    for (a, &q) in acc.iter_mut().zip(&resid) {
        if q > 1 {
            *a *= spec.at_prime(q);
        }
    }
    acc
}

/// Σ_{start ≤ n < start+length} f(n), streamed block by block without
/// materializing the whole range. Blocks merge in order, so the result is
/// deterministic.
pub fn sum_spec(spec: &MultiplicativeSpec, start: u64, length: usize) -> Result<Complex64> {
    let end = check_range(start, length)?;
    if spec.kind() != SpecKind::Custom {
        let parts: Vec<i64> = blocks(start, end, DEFAULT_BLOCK)
            .into_par_iter()
            .map(|(lo, hi)| -> Result<i64> {
                let w = evaluate_spec(spec, lo, (hi - lo) as usize)?;
                Ok(w.small().unwrap().iter().map(|&v| v as i64).sum())
            })
            .collect::<Result<_>>()?;
        return Ok(Complex64::new(parts.iter().sum::<i64>() as f64, 0.0));
    }
    let primes = primes_up_to(isqrt(end - 1));
    let parts: Vec<ComplexKahan> = blocks(start, end, DEFAULT_BLOCK)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut k = ComplexKahan::new();
            for v in generic_block(spec, lo, hi, &primes) {
                k.add(v);
            }
            k
        })
        .collect();
    let mut total = ComplexKahan::new();
    for p in &parts {
        total.merge(p);
    }
    Ok(total.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes_small() {
        assert_eq!(primes_up_to(30), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(primes_up_to(1), Vec::<u64>::new());
        assert_eq!(primes_up_to(2), vec![2]);
        assert_eq!(primes_up_to(1_000_000).len(), 78_498);
    }

    #[test]
    fn roots() {
        assert_eq!(isqrt(99), 9);
        assert_eq!(isqrt(100), 10);
        assert_eq!(iroot(124, 3), 4);
        assert_eq!(iroot(125, 3), 5);
        assert_eq!(iroot(u64::MAX, 2), 4_294_967_295);
    }

    #[test]
    fn mobius_first_values() {
        let w = mobius_sieve(1, 8).unwrap();
        assert_eq!(w.small().unwrap(), &[1, -1, -1, 0, -1, 1, -1, 0]);
        assert_eq!(w.bound(), 1.0);
        assert_eq!(mobius_sieve(4, 1).unwrap().small().unwrap(), &[0]);
    }

    #[test]
    fn power_free_first_values() {
        let w = power_free_sieve(1, 8, 2).unwrap();
        assert_eq!(w.small().unwrap(), &[1, 1, 1, 0, 1, 1, 1, 0]);
        assert_eq!(power_free_sieve(4, 2, 3).unwrap().small().unwrap(), &[1, 1]);
        assert!(power_free_sieve(1, 8, 1).is_err());
    }

    #[test]
    fn argument_errors() {
        assert!(matches!(
            mobius_sieve(1, 0),
            Err(LabError::InvalidArgument(_))
        ));
        assert!(matches!(
            mobius_sieve(0, 5),
            Err(LabError::InvalidArgument(_))
        ));
        assert!(matches!(
            mobius_sieve(u64::MAX - 2, 5),
            Err(LabError::Overflow(_))
        ));
    }

    #[test]
    fn spec_examples() {
        let mu = evaluate_spec(&MultiplicativeSpec::mobius(), 1, 8).unwrap();
        assert_eq!(mu, mobius_sieve(1, 8).unwrap());
        let odd = MultiplicativeSpec::mobius().coprime_to(2).unwrap();
        assert_eq!(
            evaluate_spec(&odd, 1, 6).unwrap().small().unwrap(),
            &[1, 0, -1, 0, -1, 0]
        );
        let lam = evaluate_spec(&MultiplicativeSpec::liouville(), 1, 6).unwrap();
        assert_eq!(lam.small().unwrap(), &[1, -1, -1, 1, -1, 1]);
    }

    #[test]
    fn generic_path_matches_fast_path() {
        let primes = primes_up_to(isqrt(20_000));
        for spec in [
            MultiplicativeSpec::mobius(),
            MultiplicativeSpec::liouville(),
            MultiplicativeSpec::power_free(3).unwrap(),
            MultiplicativeSpec::mobius().coprime_to(30).unwrap(),
        ] {
            let fast = evaluate_spec(&spec, 9_000, 11_000).unwrap();
            let slow = generic_block(&spec, 9_000, 20_000, &primes);
            for (i, v) in slow.iter().enumerate() {
                assert_eq!(fast.get(i), *v, "{} at n={}", spec.name(), 9_000 + i);
            }
        }
    }

    #[test]
    fn small_blocks_agree_with_default() {
        let a = mobius_sieve_blocked(999_000, 5_000, 17).unwrap();
        let b = mobius_sieve(999_000, 5_000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn streamed_sum_matches_materialized() {
        let f = MultiplicativeSpec::archimedean(0.7);
        let direct: Complex64 = evaluate_spec(&f, 1, 5_000)
            .unwrap()
            .to_complex_vec()
            .iter()
            .sum();
        let streamed = sum_spec(&f, 1, 5_000).unwrap();
        assert!((direct - streamed).norm() < 1e-9);
        let mertens = sum_spec(&MultiplicativeSpec::mobius(), 1, 10_000).unwrap();
        assert_eq!(mertens.re, -23.0);
    }
}
