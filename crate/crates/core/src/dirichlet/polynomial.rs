use super::characters::{characters_mod, CharacterGroup, DirichletCharacter};
use crate::error::{invalid, LabError, Result};
use crate::numerics::{oscillatory_grid, simpson, ComplexKahan, KahanSum};
use crate::sieve::spec::gcd;
use crate::sieve::{evaluate_spec, MultiplicativeSpec, SeqWindow};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Default cap on the height T of mean-square integrals.
pub const DEFAULT_T_CAP: f64 = 1e3;

/// The finest admissible quadrature step for a polynomial with terms up to n_max.
pub fn step_ceiling(n_max: u64) -> f64 {
    1.0 / (4.0 * (n_max as f64).ln())
}

fn character_values(chi: &DirichletCharacter, w: &SeqWindow) -> Vec<Complex64> {
    let k = chi.modulus();
    if k == 1 {
        return vec![Complex64::new(1.0, 0.0); w.len()];
    }
    let table = chi.value_table();
    (0..w.len())
        .map(|i| table[((w.start() + i as u64) % k) as usize])
        .collect()
}

/// F(χ, σ + it) = Σ_{X ≤ n ≤ 2X} f(n)χ(n) n^{−σ−it}.
pub fn dirichlet_polynomial(
    spec: &MultiplicativeSpec,
    chi: &DirichletCharacter,
    x: u64,
    sigma: f64,
    t: f64,
) -> Result<Complex64> {
    if x < 2 {
        return invalid(format!("X must be >= 2, got {x}"));
    }
    let w = evaluate_spec(spec, x, (x + 1) as usize)?;
    let chis = character_values(chi, &w);
    let s = Complex64::new(sigma, t);
    let mut acc = ComplexKahan::new();
    for (i, c) in chis.iter().enumerate() {
        let n = (x + i as u64) as f64;
        acc.add(w.get(i) * c * (-s * n.ln()).exp());
    }
    Ok(acc.value())
}

/// ∫ |S(t)|² over a grid of `intervals` Simpson intervals, where
/// S(t) = Σ c_m e^{i t ω_m}; also returns the rule on every other sample.
fn simpson_pair(
    coeffs: &[Complex64],
    freqs: &[f64],
    t0: f64,
    dt: f64,
    intervals: usize,
) -> (f64, f64) {
    let vals: Vec<f64> = oscillatory_grid(coeffs, freqs, t0, dt, intervals + 1)
        .iter()
        .map(|z| z.norm_sqr())
        .collect();
    let fine = simpson(&vals, dt);
    let coarse: Vec<f64> = vals.iter().step_by(2).copied().collect();
    (fine, simpson(&coarse, 2.0 * dt))
}

#[derive(Debug, Clone, Serialize)]
pub struct MeanSquareReport {
    pub k: u64,
    #[serde(rename = "X")]
    pub x: u64,
    #[serde(rename = "T")]
    pub t_max: f64,
    pub step: f64,
    pub characters: Vec<String>,
    pub per_character: Vec<f64>,
    pub total: f64,
    /// The same integrals at half the step.
    pub half_step_total: f64,
    pub error_estimate: f64,
}

/// Σ_χ ∫_0^T |F(χ, 1 + it)|² dt by composite Simpson with spacing at most `step`.
pub fn mean_square(
    spec: &MultiplicativeSpec,
    k: u64,
    x: u64,
    t_max: f64,
    step: f64,
) -> Result<MeanSquareReport> {
    if x < 2 {
        return invalid(format!("X must be >= 2, got {x}"));
    }
    if !(t_max > 0.0 && t_max <= DEFAULT_T_CAP) {
        return invalid(format!("T must lie in (0, {DEFAULT_T_CAP}], got {t_max}"));
    }
    let ceiling = step_ceiling(2 * x);
    if !(step > 0.0 && step <= ceiling) {
        return invalid(format!(
            "step {step} is coarser than the required ceiling 1/(4 ln 2X) = {ceiling:.6}"
        ));
    }
    let chars = characters_mod(k)?;
    let w = evaluate_spec(spec, x, (x + 1) as usize)?;
    let freqs: Vec<f64> = (x..=2 * x).map(|n| -(n as f64).ln()).collect();
    let intervals = crate::numerics::simpson_intervals(t_max, step);
    let dt = t_max / intervals as f64;
    let pairs: Vec<(f64, f64)> = chars
        .par_iter()
        .map(|chi| {
            let coeffs: Vec<Complex64> = character_values(chi, &w)
                .iter()
                .enumerate()
                .map(|(i, c)| w.get(i) * c / (x + i as u64) as f64)
                .collect();
            simpson_pair(&coeffs, &freqs, 0.0, dt / 2.0, 2 * intervals)
        })
        .collect();
    let per_character: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let total = per_character.iter().copied().collect::<KahanSum>().value();
    let half_step_total = pairs.iter().map(|p| p.0).collect::<KahanSum>().value();
    Ok(MeanSquareReport {
        k,
        x,
        t_max,
        step: dt,
        characters: chars.iter().map(|c| c.label()).collect(),
        per_character,
        total,
        half_step_total,
        error_estimate: (total - half_step_total).abs(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HybridReport {
    pub k: u64,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "T")]
    pub t_max: f64,
    pub step: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// |lhs(step) − lhs(step/2)| / lhs.
    pub relative_convergence: f64,
}

/// Fraction of the step ceiling used by the hybrid mean-value harness.
pub const HYBRID_STEP_FRACTION: f64 = 0.25;

/// Σ_χ ∫_0^T |Σ_{n ≤ N} a_n χ(n) n^{it}|² dt against (φ(k)T + (φ(k)/k)N)·Σ_{(n,k)=1}|a_n|².
pub fn hybrid_mean_value(coeffs: &SeqWindow, k: u64, t_max: f64) -> Result<HybridReport> {
    if t_max <= 0.0 {
        return invalid(format!("T must be positive, got {t_max}"));
    }
    let group = CharacterGroup::new(k)?;
    let chars = group.characters();
    let n_max = coeffs.end() - 1;
    let step = HYBRID_STEP_FRACTION * step_ceiling((2 * n_max).max(2));
    let intervals = crate::numerics::simpson_intervals(t_max, step);
    let dt = t_max / intervals as f64;
    let freqs: Vec<f64> = (coeffs.start()..coeffs.end())
        .map(|n| (n as f64).ln())
        .collect();
    let pairs: Vec<(f64, f64)> = chars
        .par_iter()
        .map(|chi| {
            let c: Vec<Complex64> = character_values(chi, coeffs)
                .iter()
                .enumerate()
                .map(|(i, x)| coeffs.get(i) * x)
                .collect();
            simpson_pair(&c, &freqs, 0.0, dt / 2.0, 2 * intervals)
        })
        .collect();
    let fine = pairs.iter().map(|p| p.0).collect::<KahanSum>().value();
    let coarse = pairs.iter().map(|p| p.1).collect::<KahanSum>().value();
    let mass = (0..coeffs.len())
        .filter(|&i| gcd(coeffs.start() + i as u64, k) == 1)
        .map(|i| coeffs.get(i).norm_sqr())
        .collect::<KahanSum>()
        .value();
    let phi = group.phi() as f64;
    let rhs = (phi * t_max + phi / k as f64 * n_max as f64) * mass;
    Ok(HybridReport {
        k,
        n: n_max,
        t_max,
        step: dt,
        lhs: fine,
        rhs,
        ratio: if fine == 0.0 { 0.0 } else { fine / rhs },
        relative_convergence: if fine == 0.0 {
            0.0
        } else {
            (fine - coarse).abs() / fine
        },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HybridSweep {
    pub k: u64,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "T")]
    pub t_max: f64,
    pub seed: u64,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub max_relative_convergence: f64,
}

/// Random ±1 coefficient vectors on 1..=N drawn from a ChaCha8 stream seeded with `seed`.
pub fn hybrid_mean_value_ratio(
    k: u64,
    n: u64,
    t_max: f64,
    trials: usize,
    seed: u64,
) -> Result<HybridSweep> {
    if n < 1 || trials < 1 {
        return invalid("N and trials must be >= 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratios = Vec::with_capacity(trials);
    let mut worst_conv = 0.0f64;
    for _ in 0..trials {
        let a: Vec<i8> = (0..n)
            .map(|_| if rng.gen_bool(0.5) { 1 } else { -1 })
            .collect();
        let r = hybrid_mean_value(&SeqWindow::from_small(1, a)?, k, t_max)?;
        ratios.push(r.ratio);
        worst_conv = worst_conv.max(r.relative_convergence);
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(HybridSweep {
        k,
        n,
        t_max,
        seed,
        ratios,
        max_ratio,
        max_relative_convergence: worst_conv,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ParsevalReport {
    #[serde(rename = "X")]
    pub x: u64,
    pub h: u64,
    pub lhs: f64,
    /// ∫_0^{X/h} |A(1 + it)|² dt
    pub low_integral: f64,
    /// (T, (X/h)/T · ∫_T^{2T} |A(1 + it)|² dt) along T = X/h, 2X/h, … ≤ X.
    pub ladder: Vec<(f64, f64)>,
    pub rhs: f64,
    pub ratio: f64,
    pub step: f64,
    pub quadrature_error: f64,
}

/// Quadrature step for |A(1 + it)|²: with terms on [X, 4X] its frequencies
/// ln(m/n) never exceed ln 4.
pub const PARSEVAL_STEP: f64 = 0.09;

/// (1/X) ∫_X^{2X} |(1/h) Σ_{x ≤ n ≤ x+h} a_n|² dx against the Dirichlet-polynomial side
/// with A(s) = Σ_{X ≤ m ≤ 4X} a_m m^{−s}.
pub fn parseval_ratio(coeffs: &SeqWindow, h: u64, x: u64) -> Result<ParsevalReport> {
    if x < 2 || h < 1 || h > x {
        return invalid(format!("need X >= 2 and 1 <= h <= X, got X = {x}, h = {h}"));
    }
    if coeffs.start() > x || coeffs.end() <= 4 * x {
        return invalid(format!(
            "coefficients cover [{}, {}) but [{x}, {}] is needed",
            coeffs.start(),
            coeffs.end(),
            4 * x
        ));
    }
    let at = |n: u64| coeffs.get((n - coeffs.start()) as usize);

    // For x in (m, m+1) the window is n = m+1, …, m+h.
    let mut window: Complex64 = (x + 1..=x + h).map(at).sum();
    let mut lhs_acc = KahanSum::new();
    for m in x..2 * x {
        if m > x {
            window += at(m + h) - at(m);
        }
        if (m - x) % 4096 == 0 {
            window = (m + 1..=m + h).map(at).sum();
        }
        lhs_acc.add((window / h as f64).norm_sqr());
    }
    let lhs = lhs_acc.value() / x as f64;

    let base = x as f64 / h as f64;
    let mut ladder_t = vec![base];
    while 2.0 * ladder_t.last().unwrap() <= x as f64 {
        ladder_t.push(2.0 * ladder_t.last().unwrap());
    }
    // [0, base] and the dyadic blocks [T, 2T] tile [0, 2 T_last]
    let per_base = 4 * ((base / PARSEVAL_STEP / 4.0).ceil() as usize).max(1);
    let dt = base / per_base as f64;
    let segments = 2 * ladder_t.len();
    let total_points = per_base * (1usize << ladder_t.len()) + 1;
    let coeff: Vec<Complex64> = (x..=4 * x).map(|m| at(m) / m as f64).collect();
    let freqs: Vec<f64> = (x..=4 * x).map(|m| -(m as f64).ln()).collect();
    let vals: Vec<f64> = oscillatory_grid(&coeff, &freqs, 0.0, dt, total_points)
        .iter()
        .map(|z| z.norm_sqr())
        .collect();
    let integrate = |lo: usize, hi: usize| -> (f64, f64) {
        let s = &vals[lo..=hi];
        let coarse: Vec<f64> = s.iter().step_by(2).copied().collect();
        (simpson(s, dt), simpson(&coarse, 2.0 * dt))
    };
    let (low_integral, low_coarse) = integrate(0, per_base);
    let mut err = (low_integral - low_coarse).abs() / 15.0;
    let mut ladder = Vec::with_capacity(segments / 2);
    for (i, &t) in ladder_t.iter().enumerate() {
        let lo = per_base << i;
        let (fine, coarse) = integrate(lo, 2 * lo);
        err = err.max((fine - coarse).abs() / 15.0 * base / t);
        ladder.push((t, base / t * fine));
    }
    let tail = ladder.iter().map(|p| p.1).fold(0.0, f64::max);
    let rhs = low_integral + tail;
    Ok(ParsevalReport {
        x,
        h,
        lhs,
        low_integral,
        ladder,
        rhs,
        ratio: if lhs == 0.0 { 0.0 } else { lhs / rhs },
        step: dt,
        quadrature_error: err,
    })
}

/// Reads coefficients from a sieve cache file or from plain text with one
/// value (`re` or `re,im`) per line; `start` indexes the first value of a text file.
pub fn load_coefficients(path: &std::path::Path, start: u64) -> Result<SeqWindow> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(crate::sieve::cache::MAGIC) {
        return Ok(crate::sieve::cache::decode(&bytes)?.1);
    }
    let text = String::from_utf8(bytes)
        .map_err(|_| LabError::Format("coefficient file is not UTF-8".into()))?;
    parse_coefficients(&text, start)
}

pub fn parse_coefficients(text: &str, start: u64) -> Result<SeqWindow> {
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || LabError::Format(format!("line {}: cannot parse {line:?}", lineno + 1));
        let mut parts = line.split(',').map(str::trim);
        let re: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let im: f64 = match parts.next() {
            Some(p) => p.parse().map_err(|_| bad())?,
            None => 0.0,
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        values.push(Complex64::new(re, im));
    }
    if values.is_empty() {
        return Err(LabError::Format("no coefficients found".into()));
    }
    let bound = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    SeqWindow::from_complex(start, values)?.with_bound(bound.max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sieve::mobius_sieve;

    fn principal(k: u64) -> DirichletCharacter {
        DirichletCharacter::principal(k).unwrap()
    }

    /// ∫_{a}^{b} |Σ c_m e^{i t ω_m}|² dt in closed form.
    fn exact_integral(c: &[Complex64], w: &[f64], a: f64, b: f64) -> f64 {
        let mut acc = KahanSum::new();
        for i in 0..c.len() {
            acc.add(c[i].norm_sqr() * (b - a));
            for j in 0..i {
                let d = w[i] - w[j];
                let integral = (Complex64::new(0.0, d * b).exp()
                    - Complex64::new(0.0, d * a).exp())
                    / Complex64::new(0.0, d);
                acc.add(2.0 * (c[i] * c[j].conj() * integral).re);
            }
        }
        acc.value()
    }

    #[test]
    fn harmonic_block() {
        let v = dirichlet_polynomial(&MultiplicativeSpec::one(), &principal(1), 1_000, 1.0, 0.0)
            .unwrap();
        assert!((v.re - 2f64.ln()).abs() < 1.0 / 1_000.0);
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn summation_order_oracle() {
        let chars = characters_mod(3).unwrap();
        let mu = mobius_sieve(10_000, 10_001).unwrap();
        for chi in &chars {
            let v =
                dirichlet_polynomial(&MultiplicativeSpec::mobius(), chi, 10_000, 1.0, 0.0).unwrap();
            let mut rev = Complex64::new(0.0, 0.0);
            for n in (10_000..=20_000u64).rev() {
                rev += mu.get((n - 10_000) as usize) * chi.eval(n) / n as f64;
            }
            assert!((v - rev).norm() < 1e-10);
            let w = dirichlet_polynomial(&MultiplicativeSpec::mobius(), chi, 10_000, 1.0, 17.5)
                .unwrap();
            assert!(w.norm() <= 2f64.ln() + 1e-4);
        }
    }

    #[test]
    fn mean_square_step_ceiling_and_t0() {
        let one = MultiplicativeSpec::one();
        assert!(mean_square(&one, 1, 1_000, 1.0, 0.1).is_err());
        let r = mean_square(&one, 1, 1_000, 0.02, 0.01).unwrap();
        let v0 = dirichlet_polynomial(&one, &principal(1), 1_000, 1.0, 0.0)
            .unwrap()
            .norm_sqr();
        assert!(
            (r.total / 0.02 - v0).abs() < 1e-3,
            "{} vs {v0}",
            r.total / 0.02
        );
        assert!((v0 - 2f64.ln().powi(2)).abs() < 2e-3);
    }

    #[test]
    fn mean_square_matches_closed_form() {
        let spec = MultiplicativeSpec::mobius();
        let r = mean_square(&spec, 3, 200, 5.0, step_ceiling(400)).unwrap();
        let w = mobius_sieve(200, 201).unwrap();
        let freqs: Vec<f64> = (200..=400u64).map(|n| -(n as f64).ln()).collect();
        let mut exact = 0.0;
        for chi in characters_mod(3).unwrap() {
            let c: Vec<Complex64> = (200..=400u64)
                .map(|n| w.get((n - 200) as usize) * chi.eval(n) / n as f64)
                .collect();
            exact += exact_integral(&c, &freqs, 0.0, 5.0);
        }
        assert!(
            (r.half_step_total - exact).abs() < 1e-8 * exact.max(1e-3),
            "{} {exact}",
            r.half_step_total
        );
        assert!((r.total - r.per_character.iter().sum::<f64>()).abs() < 1e-15);
    }

    #[test]
    fn hybrid_single_spike() {
        let mut a = vec![0i8; 40];
        a[36] = 1; // n₀ = 37
        let w = SeqWindow::from_small(1, a).unwrap();
        let r = hybrid_mean_value(&w, 6, 10.0).unwrap();
        let phi = 2.0;
        assert!((r.lhs - phi * 10.0).abs() < 1e-9);
        assert!((r.ratio - phi * 10.0 / (phi * 10.0 + phi / 6.0 * 40.0)).abs() < 1e-9);
    }

    #[test]
    fn hybrid_quadrature_matches_closed_form() {
        let sweep = hybrid_mean_value_ratio(3, 64, 8.0, 1, 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a: Vec<f64> = (0..64)
            .map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        let freqs: Vec<f64> = (1..=64u64).map(|n| (n as f64).ln()).collect();
        let mut lhs = 0.0;
        for chi in characters_mod(3).unwrap() {
            let c: Vec<Complex64> = (1..=64u64)
                .map(|n| chi.eval(n) * a[n as usize - 1])
                .collect();
            lhs += exact_integral(&c, &freqs, 0.0, 8.0);
        }
        let mass = (1..=64u64).filter(|n| n % 3 != 0).count() as f64;
        let rhs = (2.0 * 8.0 + 2.0 / 3.0 * 64.0) * mass;
        assert!((sweep.ratios[0] - lhs / rhs).abs() < 1e-7 * lhs / rhs);
    }

    #[test]
    fn hybrid_sweep_is_reproducible() {
        let a = hybrid_mean_value_ratio(1, 50, 5.0, 3, 7).unwrap();
        let b = hybrid_mean_value_ratio(1, 50, 5.0, 3, 7).unwrap();
        assert_eq!(a.ratios, b.ratios);
        assert_eq!(a.seed, 7);
    }

    #[test]
    fn parseval_small_scale_oracle() {
        let (x, h) = (60u64, 6u64);
        let mu = mobius_sieve(1, 400).unwrap();
        let r = parseval_ratio(&mu, h, x).unwrap();
        let at = |n: u64| mu.get((n - 1) as usize).re;
        let lhs: f64 = (x..2 * x)
            .map(|m| ((m + 1..=m + h).map(at).sum::<f64>() / h as f64).powi(2))
            .sum::<f64>()
            / x as f64;
        assert!((r.lhs - lhs).abs() < 1e-13);
        let c: Vec<Complex64> = (x..=4 * x)
            .map(|m| Complex64::new(at(m) / m as f64, 0.0))
            .collect();
        let w: Vec<f64> = (x..=4 * x).map(|m| -(m as f64).ln()).collect();
        let low = exact_integral(&c, &w, 0.0, 10.0);
        assert!(
            (r.low_integral - low).abs() < 1e-5 * low,
            "{} {low}",
            r.low_integral
        );
        let tail = [10.0, 20.0, 40.0]
            .iter()
            .map(|&t| 10.0 / t * exact_integral(&c, &w, t, 2.0 * t))
            .fold(0.0, f64::max);
        assert_eq!(r.ladder.len(), 3);
        assert!((r.rhs - (low + tail)).abs() < 1e-5 * r.rhs);
    }

    #[test]
    fn parseval_degenerate_inputs() {
        let zero = SeqWindow::constant(1, 500, 0).unwrap();
        assert_eq!(parseval_ratio(&zero, 5, 100).unwrap().ratio, 0.0);
        let one = SeqWindow::constant(1, 500, 1).unwrap();
        let r = parseval_ratio(&one, 5, 100).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-12);
        assert!(r.ratio < 1.0);
        assert!(parseval_ratio(&one, 5, 200).is_err());
    }

    #[test]
    fn coefficient_text() {
        let w = parse_coefficients("1\n-1\n# comment\n0.5, 0.5\n", 10).unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w.get(2), Complex64::new(0.5, 0.5));
        assert!(parse_coefficients("1,2,3", 1).is_err());
        assert!(parse_coefficients("x", 1).is_err());
    }
}
