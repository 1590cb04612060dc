//! Floating-point helpers shared by the engines: compensated summation,
//! composite Simpson quadrature, golden-section search and a batched
//! evaluator for oscillatory sums Σ c_m e^{i t ω_m} on uniform t-grids.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::TAU;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &KahanSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut k = KahanSum::new();
        for x in iter {
            k.add(x);
        }
        k
    }
}

/// Compensated sum of complex values (independent real and imaginary parts).
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexKahan {
    re: KahanSum,
    im: KahanSum,
}

impl ComplexKahan {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn merge(&mut self, other: &ComplexKahan) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

pub fn kahan_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<KahanSum>().value()
}

/// e(x) = exp(2πi x).
#[inline]
pub fn e(x: f64) -> Complex64 {
    let (s, c) = (TAU * x).sin_cos();
    Complex64::new(c, s)
}

/// Composite Simpson rule over equally spaced samples. Needs an odd number
/// of samples (an even number of intervals).
pub fn simpson(values: &[f64], dt: f64) -> f64 {
    let n = values.len();
    assert!(
        n >= 3 && n % 2 == 1,
        "simpson needs an odd sample count >= 3"
    );
    let mut acc = KahanSum::new();
    acc.add(values[0]);
    acc.add(values[n - 1]);
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        acc.add(if i % 2 == 1 { 4.0 * v } else { 2.0 * v });
    }
    acc.value() * dt / 3.0
}

/// Number of Simpson intervals (even, ≥ 2) so that the spacing over a
/// length-`len` interval does not exceed `max_step`.
pub fn simpson_intervals(len: f64, max_step: f64) -> usize {
    let n = (len / max_step).ceil().max(2.0) as usize;
    n + (n % 2)
}

/// Golden-section minimization of a unimodal function on [a, b].
/// Stops when the bracket is narrower than `tol`.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    // the midpoint can lose to an interior probe on flat valleys
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .unwrap()
}

const RESEED_EVERY: usize = 256;
const LANES: usize = 8;

/// Evaluates S(t_j) = Σ_m c_m·exp(i·t_j·ω_m) for t_j = t0 + j·dt, j < count.
///
/// Terms are advanced from one grid point to the next by a complex rotation
/// and re-seeded with an exact exponential every 256 steps, so the cost is
/// one complex multiply-add per (term, grid point).
pub fn oscillatory_grid(
    coeffs: &[Complex64],
    freqs: &[f64],
    t0: f64,
    dt: f64,
    count: usize,
) -> Vec<Complex64> {
    assert_eq!(coeffs.len(), freqs.len());
    if count == 0 {
        return Vec::new();
    }
    let m = coeffs.len();
    let padded = m.div_ceil(LANES) * LANES;
    let mut wr = vec![1.0; padded];
    let mut wi = vec![0.0; padded];
    for (i, &w) in freqs.iter().enumerate() {
        let (s, c) = (dt * w).sin_cos();
        wr[i] = c;
        wi[i] = s;
    }
    let blocks: Vec<usize> = (0..count).step_by(RESEED_EVERY).collect();
    let parts: Vec<Vec<Complex64>> = blocks
        .par_iter()
        .map(|&j0| {
            let steps = RESEED_EVERY.min(count - j0);
            let t = t0 + j0 as f64 * dt;
            let mut zr = vec![0.0; padded];
            let mut zi = vec![0.0; padded];
            for i in 0..m {
                let (s, c) = (t * freqs[i]).sin_cos();
                let z = coeffs[i] * Complex64::new(c, s);
                zr[i] = z.re;
                zi[i] = z.im;
            }
            let mut out = Vec::with_capacity(steps);
            for _ in 0..steps {
                let mut acc_r = [0.0f64; LANES];
                let mut acc_i = [0.0f64; LANES];
                for (((zr, zi), wr), wi) in zr
                    .chunks_exact_mut(LANES)
                    .zip(zi.chunks_exact_mut(LANES))
                    .zip(wr.chunks_exact(LANES))
                    .zip(wi.chunks_exact(LANES))
                {
                    for l in 0..LANES {
                        let (r, i) = (zr[l], zi[l]);
                        acc_r[l] += r;
                        acc_i[l] += i;
                        zr[l] = r * wr[l] - i * wi[l];
                        zi[l] = r * wi[l] + i * wr[l];
                    }
                }
                out.push(Complex64::new(acc_r.iter().sum(), acc_i.iter().sum()));
            }
            out
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// Exact fractional part of `theta * m`, treating `theta` as the binary64
/// value it is. The product is reduced modulo 1 in integer arithmetic, so the
/// result is exact up to the final rounding to f64 regardless of the size of m.
pub fn frac_mul(theta: f64, m: u128) -> f64 {
    if theta == 0.0 || m == 0 {
        return 0.0;
    }
    let bits = theta.to_bits();
    let negative = (bits >> 63) == 1;
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let frac_bits = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if biased == 0 {
        (frac_bits, -1074i64)
    } else {
        (frac_bits | (1u64 << 52), biased - 1075)
    };
    let positive = if exp >= 0 {
        0.0
    } else {
        let s = (-exp) as u32;
        if s <= 127 {
            let mask = (1u128 << s) - 1;
            let r = m.wrapping_mul(mant as u128) & mask;
            r as f64 / 2f64.powi(s as i32)
        } else {
            // theta < 2^-75; the product is far below 1 for any u128 m that matters
            (m as f64 * theta.abs()).fract()
        }
    };
    if negative && positive != 0.0 {
        1.0 - positive
    } else {
        positive
    }
}
