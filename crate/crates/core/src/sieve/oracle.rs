use crate::error::{invalid, Result};

/// Cap on the oracle table; it costs 4 bytes per integer.
pub const ORACLE_LIMIT: u64 = 10_000_000;

/// Smallest-prime-factor table, used to check the sieves by factoring
/// each integer independently.
#[derive(Debug, Clone)]
pub struct FactorizationOracle {
    limit: u64,
    spf: Vec<u32>,
}

impl FactorizationOracle {
    pub fn new(limit: u64) -> Result<Self> {
        if limit < 2 {
            return invalid("oracle limit must be >= 2");
        }
        if limit > ORACLE_LIMIT {
            return invalid(format!(
                "oracle limit {limit} exceeds the cap {ORACLE_LIMIT}"
            ));
        }
        let n = limit as usize;
        let mut spf = vec![0u32; n + 1];
        for i in 2..=n {
            if spf[i] == 0 {
                let mut j = i;
                while j <= n {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        Ok(Self { limit, spf })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn smallest_prime_factor(&self, n: u64) -> u64 {
        assert!(n >= 2 && n <= self.limit);
        self.spf[n as usize] as u64
    }

    /// (p, e) pairs with p ascending.
    pub fn factorize(&self, mut n: u64) -> Vec<(u64, u32)> {
        assert!(n >= 1 && n <= self.limit, "{n} outside oracle range");
        let mut out: Vec<(u64, u32)> = Vec::new();
        while n > 1 {
            let p = self.spf[n as usize] as u64;
            n /= p;
            match out.last_mut() {
                Some((q, e)) if *q == p => *e += 1,
                _ => out.push((p, 1)),
            }
        }
        out
    }

    pub fn mobius(&self, n: u64) -> i8 {
        let f = self.factorize(n);
        if f.iter().any(|&(_, e)| e > 1) {
            0
        } else if f.len() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn liouville(&self, n: u64) -> i8 {
        let omega: u32 = self.factorize(n).iter().map(|&(_, e)| e).sum();
        if omega % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn power_free(&self, n: u64, r: u32) -> i8 {
        i8::from(self.factorize(n).iter().all(|&(_, e)| e < r))
    }
}

/// Distinct prime divisors of k by trial division.
pub fn prime_divisors(mut k: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= k {
        if k % p == 0 {
            out.push(p);
            while k % p == 0 {
                k /= p;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if k > 1 {
        out.push(k);
    }
    out
}

/// Prime-power factorization of k by trial division.
pub fn factor_small(mut k: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= k {
        if k % p == 0 {
            let mut e = 0;
            while k % p == 0 {
                k /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if k > 1 {
        out.push((k, 1));
    }
    out
}

/// Euler's totient.
pub fn euler_phi(k: u64) -> u64 {
    prime_divisors(k)
        .iter()
        .fold(k, |acc, &p| acc / p * (p - 1))
}
