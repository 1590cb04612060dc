//! The Granville–Soundararajan distance
//!
//! ```text
//! 𝔻_k(f, g; x)² = Σ_{p ≤ x, p ∤ k} (1 − Re f(p)·conj(g(p))) / p,
//! ```
//!
//! its minimum over Archimedean twists n^{it}, |t| ≤ T, optionally also over
//! Dirichlet characters mod k, and the Halász-shaped mean-value comparison.

use crate::dirichlet::{characters_mod, DirichletCharacter};
use crate::error::{invalid, Result};
use crate::numerics::{golden_section_min, oscillatory_grid, KahanSum};
use crate::sieve::{euler_phi, primes_up_to, sum_spec, MultiplicativeSpec};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

const MODULUS_SLACK: f64 = 1e-12;

/// Primes up to x with 1/p and ln p precomputed.
#[derive(Debug, Clone)]
pub struct PrimeTable {
    x: u64,
    primes: Vec<u64>,
    inv: Vec<f64>,
    ln: Vec<f64>,
}

impl PrimeTable {
    pub fn new(x: u64) -> Self {
        let primes = primes_up_to(x);
        let inv = primes.iter().map(|&p| 1.0 / p as f64).collect();
        let ln = primes.iter().map(|&p| (p as f64).ln()).collect();
        PrimeTable { x, primes, inv, ln }
    }

    pub fn x(&self) -> u64 {
        self.x
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Primes ≤ x not dividing k, as indices into the table.
    fn coprime_indices(&self, k: u64) -> Vec<usize> {
        (0..self.primes.len())
            .filter(|&i| k % self.primes[i] != 0)
            .collect()
    }
}

fn check_modulus(name: &str, p: u64, v: Complex64) -> Result<()> {
    if v.norm() > 1.0 + MODULUS_SLACK || !v.re.is_finite() || !v.im.is_finite() {
        return invalid(format!("|{name}({p})| = {} exceeds 1", v.norm()));
    }
    Ok(())
}

/// 𝔻_k(f, g; x)² from the values of f and g at primes.
pub fn distance_sq<F, G>(f: F, g: G, x: u64, k: u64) -> Result<f64>
where
    F: Fn(u64) -> Complex64,
    G: Fn(u64) -> Complex64,
{
    distance_sq_with(&PrimeTable::new(x), f, g, k)
}

pub fn distance_sq_with<F, G>(table: &PrimeTable, f: F, g: G, k: u64) -> Result<f64>
where
    F: Fn(u64) -> Complex64,
    G: Fn(u64) -> Complex64,
{
    if k == 0 {
        return invalid("k must be >= 1");
    }
    let mut acc = KahanSum::new();
    for i in table.coprime_indices(k) {
        let p = table.primes[i];
        let (a, b) = (f(p), g(p));
        check_modulus("f", p, a)?;
        check_modulus("g", p, b)?;
        acc.add((1.0 - (a * b.conj()).re) * table.inv[i]);
    }
    Ok(acc.value())
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceReport {
    pub spec: String,
    pub k: u64,
    pub x: u64,
    #[serde(rename = "T")]
    pub t_max: f64,
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub argmin_t: f64,
    pub min_value: f64,
    pub character: Option<String>,
}

/// Distance profile t ↦ Σ_p (1 − Re a_p p^{−it})/p for fixed prime values a_p.
struct Profile {
    base: f64,
    coeffs: Vec<Complex64>,
    freqs: Vec<f64>,
}

impl Profile {
    fn new(table: &PrimeTable, values: &[(usize, Complex64)]) -> Self {
        let base = values
            .iter()
            .map(|&(i, _)| table.inv[i])
            .collect::<KahanSum>()
            .value();
        let coeffs = values.iter().map(|&(i, a)| a * table.inv[i]).collect();
        let freqs = values.iter().map(|&(i, _)| -table.ln[i]).collect();
        Profile {
            base,
            coeffs,
            freqs,
        }
    }

    fn at(&self, t: f64) -> f64 {
        let mut acc = KahanSum::new();
        acc.add(self.base);
        for (c, w) in self.coeffs.iter().zip(&self.freqs) {
            let (s, co) = (t * w).sin_cos();
            acc.add(-(c.re * co - c.im * s));
        }
        acc.value().max(0.0)
    }

    fn grid(&self, t0: f64, dt: f64, count: usize) -> Vec<f64> {
        oscillatory_grid(&self.coeffs, &self.freqs, t0, dt, count)
            .into_iter()
            .map(|z| (self.base - z.re).max(0.0))
            .collect()
    }

    /// Grid scan over [−T, T] followed by golden-section refinement.
    fn minimize(&self, x: u64, t_max: f64, grid_points: usize) -> (Vec<f64>, Vec<f64>, f64, f64) {
        let needed = (2.0 * t_max * 2.0 * (x.max(3) as f64).ln()).ceil() as usize + 1;
        let count = grid_points.max(needed).max(2);
        let dt = 2.0 * t_max / (count - 1) as f64;
        let values = self.grid(-t_max, dt, count);
        let t_grid: Vec<f64> = (0..count).map(|j| -t_max + j as f64 * dt).collect();
        let best = (0..count)
            .min_by(|&a, &b| values[a].total_cmp(&values[b]))
            .unwrap();
        let lo = t_grid[best.saturating_sub(1)];
        let hi = t_grid[(best + 1).min(count - 1)];
        let tol = 1e-6 * t_grid[best].abs().max(1.0);
        let (t, v) = golden_section_min(|t| self.at(t), lo, hi, tol);
        let (argmin, min) = if v <= values[best] {
            (t, v)
        } else {
            (t_grid[best], values[best])
        };
        (t_grid, values, argmin, min)
    }
}

fn prime_values(
    table: &PrimeTable,
    spec: &MultiplicativeSpec,
    k: u64,
    chi: Option<&[Complex64]>,
) -> Result<Vec<(usize, Complex64)>> {
    table
        .coprime_indices(k)
        .into_iter()
        .map(|i| {
            let p = table.primes[i];
            let v = spec.at_prime(p);
            check_modulus(spec.name(), p, v)?;
            let c = chi
                .map(|t| t[(p % k) as usize])
                .unwrap_or(Complex64::new(1.0, 0.0));
            Ok((i, v * c))
        })
        .collect()
}

pub const MIN_GRID_POINTS: usize = 16;

/// M_k(f; x; T) = min_{|t| ≤ T} 𝔻_k(f, n ↦ n^{it}; x)².
pub fn m_of_f(
    spec: &MultiplicativeSpec,
    x: u64,
    t_max: f64,
    k: u64,
    grid_points: usize,
) -> Result<DistanceReport> {
    m_of_f_with(&PrimeTable::new(x), spec, t_max, k, grid_points)
}

pub fn m_of_f_with(
    table: &PrimeTable,
    spec: &MultiplicativeSpec,
    t_max: f64,
    k: u64,
    grid_points: usize,
) -> Result<DistanceReport> {
    if !(t_max > 0.0) || grid_points < MIN_GRID_POINTS || k == 0 {
        return invalid(format!(
            "need T > 0, grid_points >= {MIN_GRID_POINTS} and k >= 1"
        ));
    }
    let profile = Profile::new(table, &prime_values(table, spec, k, None)?);
    let (t_grid, values, argmin_t, min_value) = profile.minimize(table.x, t_max, grid_points);
    Ok(DistanceReport {
        spec: spec.name().to_string(),
        k,
        x: table.x,
        t_max,
        t_grid,
        values,
        argmin_t,
        min_value,
        character: None,
    })
}

/// M_k(f; k; x; T): the minimum of m_of_f over f·χ for every character χ mod k.
pub fn m_over_characters(
    spec: &MultiplicativeSpec,
    k: u64,
    x: u64,
    t_max: f64,
) -> Result<DistanceReport> {
    let table = PrimeTable::new(x);
    let chars = characters_mod(k)?;
    let reports: Vec<DistanceReport> = chars
        .par_iter()
        .map(|chi| -> Result<DistanceReport> {
            let values = chi.value_table();
            let profile = Profile::new(&table, &prime_values(&table, spec, k, Some(&values))?);
            let (t_grid, values, argmin_t, min_value) = profile.minimize(x, t_max, MIN_GRID_POINTS);
            Ok(DistanceReport {
                spec: spec.name().to_string(),
                k,
                x,
                t_max,
                t_grid,
                values,
                argmin_t,
                min_value,
                character: Some(chi.label()),
            })
        })
        .collect::<Result<_>>()?;
    Ok(reports
        .into_iter()
        .min_by(|a, b| a.min_value.total_cmp(&b.min_value))
        .unwrap())
}

#[derive(Debug, Clone, Serialize)]
pub struct HalaszReport {
    pub spec: String,
    pub x: u64,
    pub k: u64,
    #[serde(rename = "T")]
    pub t_max: f64,
    /// |(1/x) Σ_{n ≤ x, (n,k)=1} f(n)|
    pub lhs: f64,
    #[serde(rename = "M")]
    pub m: f64,
    /// (φ(k)/k)·((M + 1)e^{−M} + 1/T + (ln x)^{−5/64})
    pub rhs_shape: f64,
    pub ratio: f64,
}

pub fn halasz_bound_pair(
    spec: &MultiplicativeSpec,
    x: u64,
    k: u64,
    t_max: f64,
) -> Result<HalaszReport> {
    if x < 3 || k < 1 || k > x || !(1.0..=x as f64).contains(&t_max) {
        return invalid(format!(
            "need x >= 3 and 1 <= k, T <= x; got x = {x}, k = {k}, T = {t_max}"
        ));
    }
    let restricted = spec.clone().coprime_to(k)?;
    let lhs = sum_spec(&restricted, 1, x as usize)?.norm() / x as f64;
    let m = m_of_f(spec, x, t_max, k, MIN_GRID_POINTS)?.min_value;
    let density = euler_phi(k) as f64 / k as f64;
    let rhs_shape =
        density * ((m + 1.0) * (-m).exp() + 1.0 / t_max + (x as f64).ln().powf(-5.0 / 64.0));
    Ok(HalaszReport {
        spec: spec.name().to_string(),
        x,
        k,
        t_max,
        lhs,
        m,
        rhs_shape,
        ratio: lhs / rhs_shape,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FloorReport {
    pub k: u64,
    #[serde(rename = "X")]
    pub x: u64,
    /// (1/3)·ln ln X − 2
    pub soft_floor: f64,
    pub evaluations: usize,
    pub minimum: f64,
    pub argmin_character: String,
    pub argmin_t: f64,
    /// (character, t, 𝔻²) triples below the soft floor.
    pub violations: Vec<(String, f64, f64)>,
}

/// min of 𝔻_k(χ, n ↦ n^{it}; X)² over non-principal χ mod k with |t| ≤ X and
/// the principal character with 1 ≤ |t| ≤ X, for t on the supplied grid.
pub fn character_distance_floor(k: u64, x: u64, t_grid: &[f64]) -> Result<FloorReport> {
    if x < 16 || k < 1 || k as f64 > (x as f64).ln() {
        return invalid(format!("need k <= ln X, got k = {k}, X = {x}"));
    }
    let table = PrimeTable::new(x);
    let chars: Vec<DirichletCharacter> = characters_mod(k)?;
    let soft_floor = (x as f64).ln().ln() / 3.0 - 2.0;
    let rows: Vec<(String, f64, f64)> = chars
        .par_iter()
        .flat_map_iter(|chi| {
            let vals = chi.value_table();
            let pv: Vec<(usize, Complex64)> = table
                .coprime_indices(k)
                .into_iter()
                .map(|i| (i, vals[(table.primes[i] % k) as usize]))
                .collect();
            let profile = Profile::new(&table, &pv);
            let principal = chi.is_principal();
            let label = chi.label();
            t_grid
                .iter()
                .filter(move |t| t.abs() <= x as f64 && (!principal || t.abs() >= 1.0))
                .map(move |&t| (label.clone(), t, profile.at(t)))
                .collect::<Vec<_>>()
        })
        .collect();
    if rows.is_empty() {
        return invalid("no admissible (character, t) pairs on the grid");
    }
    let best = rows
        .iter()
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .unwrap()
        .clone();
    let violations = rows.iter().filter(|r| r.2 < soft_floor).cloned().collect();
    Ok(FloorReport {
        k,
        x,
        soft_floor,
        evaluations: rows.len(),
        minimum: best.2,
        argmin_character: best.0,
        argmin_t: best.1,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::e;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one(_: u64) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn basic_distances() {
        let minus = |_: u64| Complex64::new(-1.0, 0.0);
        assert_eq!(distance_sq(minus, minus, 1_000, 1).unwrap(), 0.0);
        let d = distance_sq(minus, one, 100, 1).unwrap();
        assert!((d - 3.605_634).abs() < 1e-6, "{d}");
        let twist0 = |p: u64| Complex64::new(0.0, 0.0 * (p as f64).ln()).exp();
        assert_eq!(distance_sq(one, twist0, 1_000, 1).unwrap(), 0.0);
    }

    #[test]
    fn modulus_violation_names_the_prime() {
        let bad = |p: u64| Complex64::new(if p == 13 { 1.5 } else { 1.0 }, 0.0);
        let err = distance_sq(bad, one, 100, 1).unwrap_err().to_string();
        assert!(err.contains("f(13)"), "{err}");
    }

    #[test]
    fn exact_pretender_is_recovered() {
        let spec = MultiplicativeSpec::archimedean(0.3);
        let r = m_of_f(&spec, 10_000, 2.0, 1, 64).unwrap();
        assert!(r.min_value <= 1e-6, "{}", r.min_value);
        assert!((r.argmin_t - 0.3).abs() <= 1e-4, "{}", r.argmin_t);
        assert!(r.values.iter().all(|v| *v >= r.min_value));
        let r = m_of_f(&MultiplicativeSpec::one(), 10_000, 5.0, 1, 64).unwrap();
        assert!(r.min_value < 1e-12 && r.argmin_t.abs() < 1e-4);
    }

    #[test]
    fn character_pretender_selects_conjugate() {
        let chars = characters_mod(5).unwrap();
        let chi0 = chars[1].clone();
        let rule_chi = chi0.clone();
        let spec = MultiplicativeSpec::from_fn("chi_twist", move |p, e| {
            (rule_chi.eval(p) * Complex64::new(0.0, 0.2 * (p as f64).ln()).exp()).powu(e)
        });
        let r = m_over_characters(&spec, 5, 10_000, 1.0).unwrap();
        assert!(r.min_value <= 1e-6);
        assert_eq!(r.character.as_deref(), Some(chi0.conj().label().as_str()));
        assert!((r.argmin_t - 0.2).abs() < 1e-4);
        let plain = m_of_f(&spec, 10_000, 1.0, 1, MIN_GRID_POINTS).unwrap();
        let k1 = m_over_characters(&spec, 1, 10_000, 1.0).unwrap();
        assert!((plain.min_value - k1.min_value).abs() < 1e-12);
    }

    #[test]
    fn halasz_for_constant_one() {
        let r = halasz_bound_pair(&MultiplicativeSpec::one(), 100_000, 6, 10.0).unwrap();
        let coprime = 100_000 - 50_000 - 33_333 + 16_666;
        assert!((r.lhs - coprime as f64 / 1e5).abs() < 1e-12);
        assert!(r.m < 1e-9);
        assert!(r.rhs_shape >= 1.0 / 3.0);
    }

    #[test]
    fn character_floor_small_case() {
        let grid: Vec<f64> = (-20..=20).map(|j| j as f64 * 0.5).collect();
        let r = character_distance_floor(5, 100_000, &grid).unwrap();
        assert!(r.minimum > 0.0);
        assert!(character_distance_floor(20, 100_000, &grid).is_err());
        let at_zero = character_distance_floor(5, 100_000, &[0.0]).unwrap();
        assert_eq!(at_zero.evaluations, 3);
    }

    fn random_unimodular(seed: u64) -> impl Fn(u64) -> Complex64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phases: Vec<f64> = (0..=10_000).map(|_| rng.gen::<f64>()).collect();
        move |p| e(phases[p as usize])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn triangle_inequality(a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
            let table = PrimeTable::new(10_000);
            let (f, g, h) = (random_unimodular(a), random_unimodular(b), random_unimodular(c));
            let fg = distance_sq_with(&table, &f, &g, 1).unwrap().sqrt();
            let gh = distance_sq_with(&table, &g, &h, 1).unwrap().sqrt();
            let fh = distance_sq_with(&table, &f, &h, 1).unwrap().sqrt();
            prop_assert!(fh <= fg + gh + 1e-12);
        }

        #[test]
        fn monotone_in_x_and_k_restriction(seed in any::<u64>(), k in 1u64..400) {
            let f = random_unimodular(seed);
            let mut last = 0.0;
            for x in [10u64, 100, 1_000, 10_000] {
                let d = distance_sq(&f, one, x, 1).unwrap();
                prop_assert!(d >= last);
                last = d;
                prop_assert!(distance_sq(&f, one, x, k).unwrap() <= d + 1e-15);
            }
        }
    }
}
