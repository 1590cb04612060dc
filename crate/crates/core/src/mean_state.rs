//! Cesàro approximations of mean states: inner products along cutoff
//! ladders, the shift A, e-period defects, and the example sequences
//! (block e-periodic words, e(√n), e(nθ), e(n²θ)).

use crate::error::{invalid, Result};
use crate::numerics::{e, frac_mul, ComplexKahan, KahanSum};
use crate::sieve::{SeqWindow, ValuesRef};
use num_complex::Complex64;
use serde::Serialize;

/// Strictly increasing averaging lengths N₁ < N₂ < …
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CesaroMean {
    cutoffs: Vec<u64>,
}

impl CesaroMean {
    pub fn new(cutoffs: Vec<u64>) -> Result<Self> {
        if cutoffs.is_empty() {
            return invalid("cutoff ladder is empty");
        }
        if cutoffs[0] == 0 {
            return invalid("cutoffs must be >= 1");
        }
        if cutoffs.windows(2).any(|w| w[0] >= w[1]) {
            return invalid(format!("cutoffs must be strictly increasing: {cutoffs:?}"));
        }
        Ok(Self { cutoffs })
    }

    pub fn single(n: u64) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn cutoffs(&self) -> &[u64] {
        &self.cutoffs
    }

    pub fn max(&self) -> u64 {
        *self.cutoffs.last().unwrap()
    }
}

impl Default for CesaroMean {
    fn default() -> Self {
        Self {
            cutoffs: vec![10_000, 100_000, 1_000_000, 10_000_000],
        }
    }
}

/// Partial averages (1/N_j) Σ_{n ≤ N_j} f(n)·conj(g(n)).
#[derive(Debug, Clone, Serialize)]
pub struct InnerProductTrace {
    pub cutoffs: Vec<u64>,
    pub partial_values: Vec<Complex64>,
    /// Largest |value_{j+1} − value_j| along the ladder.
    pub max_successive_difference: f64,
}

impl InnerProductTrace {
    pub fn last(&self) -> Complex64 {
        *self.partial_values.last().unwrap()
    }
}

fn require_cover(w: &SeqWindow, n: u64, what: &str) -> Result<()> {
    if w.start() != 1 {
        return invalid(format!(
            "{what} must start at n = 1, starts at {}",
            w.start()
        ));
    }
    if (w.len() as u64) < n {
        return invalid(format!(
            "{what} has length {} but cutoff {n} is required",
            w.len()
        ));
    }
    Ok(())
}

/// Cesàro inner product traced along the cutoff ladder.
pub fn cesaro_inner(f: &SeqWindow, g: &SeqWindow, mean: &CesaroMean) -> Result<InnerProductTrace> {
    if let Some(&n) = mean
        .cutoffs()
        .iter()
        .find(|&&n| (f.len() as u64) < n || (g.len() as u64) < n)
    {
        return invalid(format!(
            "windows of length {} and {} do not cover cutoff {n}",
            f.len(),
            g.len()
        ));
    }
    require_cover(f, mean.max(), "f")?;
    require_cover(g, mean.max(), "g")?;
    let mut partial_values = Vec::with_capacity(mean.cutoffs().len());
    match (f.values(), g.values()) {
        (ValuesRef::Small(a), ValuesRef::Small(b)) => {
            // exact integer accumulation
            let mut acc: i64 = 0;
            let mut done = 0usize;
            for &n in mean.cutoffs() {
                let n = n as usize;
                acc += a[done..n]
                    .iter()
                    .zip(&b[done..n])
                    .map(|(&x, &y)| (x as i64) * (y as i64))
                    .sum::<i64>();
                done = n;
                partial_values.push(Complex64::new(acc as f64 / n as f64, 0.0));
            }
        }
        _ => {
            let mut acc = ComplexKahan::new();
            let mut done = 0usize;
            for &n in mean.cutoffs() {
                let n = n as usize;
                for i in done..n {
                    acc.add(f.get(i) * g.get(i).conj());
                }
                done = n;
                partial_values.push(acc.value() / n as f64);
            }
        }
    }
    let max_successive_difference = partial_values
        .windows(2)
        .map(|w| (w[1] - w[0]).norm())
        .fold(0.0, f64::max);
    Ok(InnerProductTrace {
        cutoffs: mean.cutoffs().to_vec(),
        partial_values,
        max_successive_difference,
    })
}

/// ‖f‖²_N = (1/N) Σ_{n ≤ N} |f(n)|² over the first N entries of the window.
pub fn norm_sq(f: &SeqWindow, n: u64) -> Result<f64> {
    if n == 0 || (f.len() as u64) < n {
        return invalid(format!(
            "window of length {} does not cover N = {n}",
            f.len()
        ));
    }
    let n = n as usize;
    Ok(match f.values() {
        ValuesRef::Small(v) => {
            v[..n].iter().map(|&x| x as i64 * x as i64).sum::<i64>() as f64 / n as f64
        }
        ValuesRef::Complex(v) => {
            v[..n]
                .iter()
                .map(|z| z.norm_sqr())
                .collect::<KahanSum>()
                .value()
                / n as f64
        }
    })
}

/// A^m f: drops the first m entries, so result[i] = f[i + m].
pub fn shift(f: &SeqWindow, m: usize) -> Result<SeqWindow> {
    if m == 0 {
        return Ok(f.clone());
    }
    f.shifted(m)
}

/// (1/N) Σ_{n ≤ N} |f(n + k) − f(n)|².
pub fn eperiod_defect(f: &SeqWindow, k: usize, n: u64) -> Result<f64> {
    let need = n as usize + k;
    if n == 0 || f.len() < need {
        return invalid(format!(
            "defect at lag {k} over N = {n} needs {need} values, window has {}",
            f.len()
        ));
    }
    let n = n as usize;
    Ok(match f.values() {
        ValuesRef::Small(v) => {
            let s: i64 = (0..n)
                .map(|i| {
                    let d = v[i + k] as i64 - v[i] as i64;
                    d * d
                })
                .sum();
            s as f64 / n as f64
        }
        ValuesRef::Complex(v) => {
            (0..n)
                .map(|i| (v[i + k] - v[i]).norm_sqr())
                .collect::<KahanSum>()
                .value()
                / n as f64
        }
    })
}

/// The concatenation α^{m₁} β^{n₁} α^{m₂} β^{n₂} … truncated to `length`,
/// where α = (0, 1, …, 1) and β = (1, 0, …, 0) both have length k.
/// `m_seq(j)` and `n_seq(j)` give the run counts for j = 1, 2, …
pub fn block_eperiodic<M, N>(k: usize, m_seq: M, n_seq: N, length: usize) -> Result<SeqWindow>
where
    M: Fn(u64) -> u64,
    N: Fn(u64) -> u64,
{
    if k == 0 {
        return invalid("block length k must be >= 1");
    }
    let mut alpha = vec![1i8; k];
    alpha[0] = 0;
    let mut beta = vec![0i8; k];
    beta[0] = 1;
    let mut out = Vec::with_capacity(length + 2 * k);
    let mut j = 1u64;
    while out.len() < length {
        let (m, n) = (m_seq(j), n_seq(j));
        if m == 0 || n == 0 {
            return invalid(format!(
                "run counts must be positive, got m_{j} = {m}, n_{j} = {n}"
            ));
        }
        for _ in 0..m {
            if out.len() >= length {
                break;
            }
            out.extend_from_slice(&alpha);
        }
        for _ in 0..n {
            if out.len() >= length {
                break;
            }
            out.extend_from_slice(&beta);
        }
        j += 1;
    }
    out.truncate(length);
    SeqWindow::from_small(1, out)
}

/// Example sequences n ↦ e(g(n)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SamplerKind {
    ExpSqrt,
    ExpLinear(f64),
    ExpQuadratic(f64),
}

/// e(g(n)) for n in [start, start + length). Linear and quadratic phases are
/// reduced mod 1 exactly in integer arithmetic (θ is taken as its binary64
/// value), so the phase error does not grow with n.
pub fn sampler(kind: SamplerKind, start: u64, length: usize) -> Result<SeqWindow> {
    if start == 0 || length == 0 {
        return invalid("sampler needs start >= 1 and length >= 1");
    }
    let values: Vec<Complex64> = (start..start + length as u64)
        .map(|n| match kind {
            SamplerKind::ExpSqrt => e((n as f64).sqrt().fract()),
            SamplerKind::ExpLinear(theta) => e(frac_mul(theta, n as u128)),
            SamplerKind::ExpQuadratic(theta) => e(frac_mul(theta, (n as u128) * (n as u128))),
        })
        .collect();
    SeqWindow::from_complex(start, values)?.with_bound(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sieve::mobius_sieve;

    fn approx(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn ladder_validation() {
        assert!(CesaroMean::new(vec![]).is_err());
        assert!(CesaroMean::new(vec![0, 3]).is_err());
        assert!(CesaroMean::new(vec![5, 5]).is_err());
        assert!(CesaroMean::new(vec![3, 5]).is_ok());
    }

    #[test]
    fn constant_inner_product_is_one() {
        let one = SeqWindow::constant(1, 1000, 1).unwrap();
        let t = cesaro_inner(&one, &one, &CesaroMean::new(vec![10, 100, 1000]).unwrap()).unwrap();
        assert!(t
            .partial_values
            .iter()
            .all(|v| *v == Complex64::new(1.0, 0.0)));
        assert_eq!(t.max_successive_difference, 0.0);
    }

    #[test]
    fn short_window_names_the_cutoff() {
        let one = SeqWindow::constant(1, 50, 1).unwrap();
        let err = cesaro_inner(&one, &one, &CesaroMean::new(vec![10, 100]).unwrap()).unwrap_err();
        assert!(err.to_string().contains("cutoff 100"));
    }

    #[test]
    fn linear_phase_cancels() {
        let theta = 2f64.sqrt() - 1.0;
        let f = sampler(SamplerKind::ExpLinear(theta), 1, 1_000_000).unwrap();
        let one = SeqWindow::constant(1, 1_000_000, 1).unwrap();
        let t = cesaro_inner(&f, &one, &CesaroMean::single(1_000_000).unwrap()).unwrap();
        // geometric sum: |Σ e(nθ)| ≤ 1/|sin(πθ)|
        let a_priori = 1.0 / (std::f64::consts::PI * theta).sin() / 1e6;
        assert!(t.last().norm() <= a_priori + 1e-12);
        assert!(t.last().norm() <= 1e-4);
    }

    #[test]
    fn shift_examples() {
        let mu = mobius_sieve(1, 9).unwrap();
        let s = shift(&mu, 1).unwrap();
        assert_eq!(
            s.small().unwrap(),
            mobius_sieve(2, 8).unwrap().small().unwrap()
        );
        assert_eq!(shift(&mu, 0).unwrap(), mu);
        let ab = shift(&shift(&mu, 2).unwrap(), 3).unwrap();
        assert_eq!(ab.small().unwrap(), shift(&mu, 5).unwrap().small().unwrap());
        assert!(shift(&mu, 9).is_err());
    }

    #[test]
    fn block_words() {
        let w = block_eperiodic(2, |_| 1, |_| 1, 8).unwrap();
        assert_eq!(w.small().unwrap(), &[0, 1, 1, 0, 0, 1, 1, 0]);
        let w1 = block_eperiodic(1, |j| j, |j| j, 6).unwrap();
        // runs of 0s and 1s of lengths 1,1,2,2
        assert_eq!(w1.small().unwrap(), &[0, 1, 0, 0, 1, 1]);
        assert!(block_eperiodic(0, |j| j, |j| j, 6).is_err());
    }

    #[test]
    fn defect_of_constant_is_zero() {
        let one = SeqWindow::constant(1, 100, 1).unwrap();
        assert_eq!(eperiod_defect(&one, 3, 90).unwrap(), 0.0);
        assert!(eperiod_defect(&one, 3, 99).is_err());
    }

    #[test]
    fn rational_linear_sampler() {
        let f = sampler(SamplerKind::ExpLinear(0.5), 1, 4).unwrap();
        let expect = [-1.0, 1.0, -1.0, 1.0];
        for (i, &x) in expect.iter().enumerate() {
            assert!(approx(f.get(i), Complex64::new(x, 0.0), 1e-15));
        }
    }

    #[test]
    fn sqrt_sampler_defect_is_small() {
        let n = 1_000_000u64;
        let f = sampler(SamplerKind::ExpSqrt, 1, n as usize + 1).unwrap();
        let d = eperiod_defect(&f, 1, n).unwrap();
        // |e(√(n+1)) − e(√n)| ≤ 2π(√(n+1) − √n)
        let bound: f64 = (1..=n)
            .map(|k| {
                let s = 2.0 * std::f64::consts::PI * ((k as f64 + 1.0).sqrt() - (k as f64).sqrt());
                s * s
            })
            .sum::<f64>()
            / n as f64;
        assert!(d <= bound * (1.0 + 1e-9), "{d} > {bound}");
    }
}
