use crate::error::{invalid, Result};
use crate::sieve::oracle::{factor_small, prime_divisors};
use crate::sieve::spec::gcd;
use num_complex::Complex64;
use serde::Serialize;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

pub const MAX_MODULUS: u64 = 1_000_000;

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

/// Baby-step giant-step table for logarithms to a fixed base in a cyclic
/// subgroup of (ℤ/q)*.
#[derive(Debug)]
struct Bsgs {
    q: u64,
    order: u64,
    step: u64,
    baby: HashMap<u64, u64>,
    giant: u64,
}

impl Bsgs {
    fn new(g: u64, order: u64, q: u64) -> Self {
        let step = (order as f64).sqrt().ceil().max(1.0) as u64;
        let mut baby = HashMap::with_capacity(step as usize);
        let mut x = 1 % q;
        for j in 0..step {
            baby.entry(x).or_insert(j);
            x = x * g % q;
        }
        // g^{-step}
        let giant = pow_mod(pow_mod(g, step, q), order - 1, q);
        Bsgs {
            q,
            order,
            step,
            baby,
            giant,
        }
    }

    fn log(&self, n: u64) -> u64 {
        let mut y = n % self.q;
        for i in 0..=self.order / self.step {
            if let Some(&j) = self.baby.get(&y) {
                return (i * self.step + j) % self.order;
            }
            y = y * self.giant % self.q;
        }
        unreachable!("{n} is not in the subgroup")
    }
}

#[derive(Debug)]
enum ComponentKind {
    /// q = 2: the trivial group.
    Trivial,
    /// q = 4: generated by −1.
    Four,
    /// q = 2^a, a ≥ 3: generated by −1 and 5.
    TwoPower(Bsgs),
    /// q = p^e, p odd: generated by the least primitive root.
    Cyclic(Bsgs),
}

#[derive(Debug)]
struct Component {
    q: u64,
    kind: ComponentKind,
}

impl Component {
    fn new(p: u64, e: u32) -> Self {
        let q = p.pow(e);
        let kind = match (p, e) {
            (2, 1) => ComponentKind::Trivial,
            (2, 2) => ComponentKind::Four,
            (2, _) => ComponentKind::TwoPower(Bsgs::new(5, q / 4, q)),
            _ => {
                let order = q / p * (p - 1);
                let factors = prime_divisors(order);
                let g = (2..q)
                    .find(|&g| g % p != 0 && factors.iter().all(|&r| pow_mod(g, order / r, q) != 1))
                    .expect("odd prime powers have primitive roots");
                ComponentKind::Cyclic(Bsgs::new(g, order, q))
            }
        };
        Component { q, kind }
    }

    /// Orders of the generators of this component.
    fn generator_orders(&self) -> Vec<u64> {
        match &self.kind {
            ComponentKind::Trivial => vec![],
            ComponentKind::Four => vec![2],
            ComponentKind::TwoPower(b) => vec![2, b.order],
            ComponentKind::Cyclic(b) => vec![b.order],
        }
    }

    fn logs(&self, n: u64, out: &mut Vec<u64>) {
        let r = n % self.q;
        match &self.kind {
            ComponentKind::Trivial => {}
            ComponentKind::Four => out.push(u64::from(r == 3)),
            ComponentKind::TwoPower(b) => {
                let negative = r % 4 == 3;
                out.push(u64::from(negative));
                out.push(b.log(if negative { self.q - r } else { r }));
            }
            ComponentKind::Cyclic(b) => out.push(b.log(r)),
        }
    }
}

/// (ℤ/k)* as a product of cyclic groups via the Chinese remainder theorem.
#[derive(Debug)]
pub struct CharacterGroup {
    modulus: u64,
    components: Vec<Component>,
    orders: Vec<u64>,
    exponent: u64,
    phi: u64,
    logs: OnceLock<Vec<u32>>,
    roots: Vec<Complex64>,
}

impl CharacterGroup {
    pub fn new(k: u64) -> Result<Arc<Self>> {
        if !(1..=MAX_MODULUS).contains(&k) {
            return invalid(format!("modulus must lie in [1, {MAX_MODULUS}], got {k}"));
        }
        let components: Vec<Component> = factor_small(k)
            .into_iter()
            .map(|(p, e)| Component::new(p, e))
            .collect();
        let orders: Vec<u64> = components
            .iter()
            .flat_map(|c| c.generator_orders())
            .collect();
        let exponent = orders.iter().fold(1, |l, &o| l / gcd(l, o) * o);
        let phi = orders.iter().product();
        let roots = (0..exponent)
            .map(|j| {
                let (s, c) = (std::f64::consts::TAU * j as f64 / exponent as f64).sin_cos();
                Complex64::new(c, s)
            })
            .collect();
        Ok(Arc::new(CharacterGroup {
            modulus: k,
            components,
            orders,
            exponent,
            phi,
            logs: OnceLock::new(),
            roots,
        }))
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn phi(&self) -> u64 {
        self.phi
    }

    /// Exponent λ(k) of the group; every character value is a λ(k)-th root of unity.
    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn component_moduli(&self) -> Vec<u64> {
        self.components.iter().map(|c| c.q).collect()
    }

    pub fn generator_orders(&self) -> &[u64] {
        &self.orders
    }

    /// Logarithms of n with respect to the generators, or None when (n, k) > 1.
    pub fn discrete_logs(&self, n: u64) -> Option<Vec<u64>> {
        if gcd(n, self.modulus) != 1 {
            return None;
        }
        let mut out = Vec::with_capacity(self.orders.len());
        for c in &self.components {
            c.logs(n, &mut out);
        }
        Some(out)
    }

    /// Flat table of discrete logs for every residue, u32::MAX marking non-units.
    fn log_table(&self) -> &[u32] {
        self.logs.get_or_init(|| {
            let g = self.orders.len();
            let mut table = vec![u32::MAX; self.modulus as usize * g.max(1)];
            for r in 0..self.modulus {
                if let Some(l) = self.discrete_logs(r) {
                    for (i, v) in l.into_iter().enumerate() {
                        table[r as usize * g + i] = v as u32;
                    }
                }
                if g == 0 && gcd(r, self.modulus) == 1 {
                    table[r as usize] = 0;
                }
            }
            table
        })
    }

    /// All φ(k) characters, the principal one first.
    pub fn characters(self: &Arc<Self>) -> Vec<DirichletCharacter> {
        let mut out = Vec::with_capacity(self.phi as usize);
        let mut exps = vec![0u64; self.orders.len()];
        loop {
            out.push(DirichletCharacter {
                group: Arc::clone(self),
                exponents: exps.clone(),
            });
            let mut i = 0;
            loop {
                if i == exps.len() {
                    return out;
                }
                exps[i] += 1;
                if exps[i] < self.orders[i] {
                    break;
                }
                exps[i] = 0;
                i += 1;
            }
        }
    }
}

/// A Dirichlet character stored by its exponents on the generators of (ℤ/k)*.
#[derive(Clone)]
pub struct DirichletCharacter {
    group: Arc<CharacterGroup>,
    exponents: Vec<u64>,
}

impl fmt::Debug for DirichletCharacter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DirichletCharacter({})", self.label())
    }
}

impl PartialEq for DirichletCharacter {
    fn eq(&self, other: &Self) -> bool {
        self.group.modulus == other.group.modulus && self.exponents == other.exponents
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CharacterInfo {
    pub modulus: u64,
    pub component_moduli: Vec<u64>,
    pub exponents: Vec<u64>,
    pub order: u64,
    pub label: String,
}

impl DirichletCharacter {
    pub fn principal(k: u64) -> Result<Self> {
        let g = CharacterGroup::new(k)?;
        let n = g.orders.len();
        Ok(DirichletCharacter {
            group: g,
            exponents: vec![0; n],
        })
    }

    pub fn modulus(&self) -> u64 {
        self.group.modulus
    }

    pub fn group(&self) -> &Arc<CharacterGroup> {
        &self.group
    }

    pub fn exponents(&self) -> &[u64] {
        &self.exponents
    }

    pub fn is_principal(&self) -> bool {
        self.exponents.iter().all(|&e| e == 0)
    }

    pub fn order(&self) -> u64 {
        self.exponents
            .iter()
            .zip(&self.group.orders)
            .map(|(&a, &o)| o / gcd(a, o))
            .fold(1, |l, o| l / gcd(l, o) * o)
    }

    pub fn label(&self) -> String {
        let e: Vec<String> = self.exponents.iter().map(|e| e.to_string()).collect();
        format!("{}:[{}]", self.group.modulus, e.join(","))
    }

    pub fn conj(&self) -> Self {
        let exponents = self
            .exponents
            .iter()
            .zip(&self.group.orders)
            .map(|(&a, &o)| (o - a) % o)
            .collect();
        DirichletCharacter {
            group: Arc::clone(&self.group),
            exponents,
        }
    }

    pub fn info(&self) -> CharacterInfo {
        CharacterInfo {
            modulus: self.modulus(),
            component_moduli: self.group.component_moduli(),
            exponents: self.exponents.clone(),
            order: self.order(),
            label: self.label(),
        }
    }

    /// χ(n) = e(num/λ(k)); returns num, or None off the units.
    fn phase<I: Iterator<Item = u64>>(&self, logs: I) -> u64 {
        let l = self.group.exponent;
        logs.zip(&self.exponents)
            .zip(&self.group.orders)
            .map(|((x, &a), &o)| (a * x % o) * (l / o))
            .fold(0, |s, v| (s + v) % l)
    }

    pub fn eval(&self, n: u64) -> Complex64 {
        match self.group.discrete_logs(n) {
            None => Complex64::new(0.0, 0.0),
            Some(logs) => self.group.roots[self.phase(logs.into_iter()) as usize],
        }
    }

    /// χ(0), …, χ(k − 1).
    pub fn value_table(&self) -> Vec<Complex64> {
        let g = self.group.orders.len();
        let logs = self.group.log_table();
        let k = self.group.modulus as usize;
        (0..k)
            .map(|r| {
                let row = &logs[r * g.max(1)..r * g.max(1) + g.max(1)];
                if row[0] == u32::MAX {
                    Complex64::new(0.0, 0.0)
                } else {
                    self.group.roots[self.phase(row[..g].iter().map(|&x| x as u64)) as usize]
                }
            })
            .collect()
    }
}

pub fn characters_mod(k: u64) -> Result<Vec<DirichletCharacter>> {
    Ok(CharacterGroup::new(k)?.characters())
}

pub const ORTHOGONALITY_LIMIT: u64 = 10_000;

/// max over pairs of |Σ_{a mod k} conj(χ₁(a))χ₂(a) − φ(k)·[χ₁ = χ₂]|.
pub fn orthogonality_check(k: u64) -> Result<f64> {
    if k > ORTHOGONALITY_LIMIT {
        return invalid(format!(
            "pairwise orthogonality is limited to k <= {ORTHOGONALITY_LIMIT}, got {k}"
        ));
    }
    let chars = characters_mod(k)?;
    let tables: Vec<Vec<Complex64>> = chars.iter().map(|c| c.value_table()).collect();
    let phi = chars.len() as f64;
    let mut worst = 0.0f64;
    for (i, a) in tables.iter().enumerate() {
        for (j, b) in tables.iter().enumerate().skip(i) {
            let s: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
            let target = if i == j { phi } else { 0.0 };
            worst = worst.max((s - target).norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sieve::euler_phi;

    #[test]
    fn trivial_modulus() {
        let c = characters_mod(1).unwrap();
        assert_eq!(c.len(), 1);
        for n in 0..20 {
            assert_eq!(c[0].eval(n), Complex64::new(1.0, 0.0));
        }
        assert_eq!(orthogonality_check(1).unwrap(), 0.0);
    }

    #[test]
    fn mod_five_values_at_two_are_fourth_roots() {
        let c = characters_mod(5).unwrap();
        assert_eq!(c.len(), 4);
        let mut seen: Vec<(i64, i64)> = c
            .iter()
            .map(|x| x.eval(2))
            .map(|z| (z.re.round() as i64, z.im.round() as i64))
            .collect();
        seen.sort();
        assert_eq!(seen, vec![(-1, 0), (0, -1), (0, 1), (1, 0)]);
    }

    #[test]
    fn mod_eight_is_real() {
        let c = characters_mod(8).unwrap();
        assert_eq!(c.len(), 4);
        for x in &c {
            for n in 0..8u64 {
                let v = x.eval(n);
                if n % 2 == 1 {
                    assert!(v.im.abs() < 1e-15 && (v.re.abs() - 1.0).abs() < 1e-15);
                } else {
                    assert_eq!(v, Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn counts_principal_and_multiplicativity() {
        for k in 1..=300u64 {
            let chars = characters_mod(k).unwrap();
            assert_eq!(chars.len() as u64, euler_phi(k), "k={k}");
            let principal = chars[0].value_table();
            for n in 0..k {
                let expected = if gcd(n, k) == 1 { 1.0 } else { 0.0 };
                assert_eq!(principal[n as usize], Complex64::new(expected, 0.0));
            }
            for ch in chars.iter().take(6) {
                let t = ch.value_table();
                for m in 1..k.min(40) {
                    for n in 1..k.min(40) {
                        let lhs = t[(m * n % k) as usize];
                        assert!((lhs - t[m as usize] * t[n as usize]).norm() < 1e-12);
                        assert!((ch.eval(m * n + 7 * k) - ch.eval(m * n)).norm() < 1e-15);
                    }
                }
                let ord = ch.order() as i32;
                for n in (1..k).filter(|&n| gcd(n, k) == 1) {
                    assert!((t[n as usize].powi(ord) - 1.0).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn table_and_pointwise_eval_agree() {
        for k in [9u64, 16, 32, 45, 64, 1000, 7919] {
            for ch in characters_mod(k)
                .unwrap()
                .iter()
                .step_by(1 + k as usize / 50)
            {
                let t = ch.value_table();
                for n in 0..k {
                    assert_eq!(t[n as usize], ch.eval(n));
                }
            }
        }
    }

    #[test]
    fn orthogonality_small_moduli() {
        for k in [5u64, 12, 16, 24, 49, 60] {
            assert!(orthogonality_check(k).unwrap() <= 1e-9, "k={k}");
        }
    }

    #[test]
    fn range_is_checked() {
        assert!(characters_mod(0).is_err());
        assert!(characters_mod(MAX_MODULUS + 1).is_err());
        assert_eq!(CharacterGroup::new(MAX_MODULUS).unwrap().phi(), 400_000);
    }

    #[test]
    fn conjugate_and_order() {
        let chars = characters_mod(7).unwrap();
        for c in &chars {
            for n in 1..7 {
                assert!((c.conj().eval(n) - c.eval(n).conj()).norm() < 1e-15);
            }
        }
        let orders: Vec<u64> = chars.iter().map(|c| c.order()).collect();
        assert_eq!(orders, vec![1, 6, 3, 2, 3, 6]);
    }
}
