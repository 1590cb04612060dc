use crate::error::{invalid, Result};
use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

/// Built-in families with integer values, which the sieves can produce
/// directly as compact windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecKind {
    One,
    Mobius,
    Liouville,
    /// Indicator of r-th power-free integers (r ≥ 2).
    PowerFree(u32),
    /// Anything else, given by an explicit prime-power rule.
    Custom,
}

type PrimePowerRule = Arc<dyn Fn(u64, u32) -> Complex64 + Send + Sync>;

/// A 1-bounded multiplicative function, given by its values on prime powers,
/// optionally restricted to integers coprime to `coprime_to`.
#[derive(Clone)]
pub struct MultiplicativeSpec {
    name: String,
    kind: SpecKind,
    rule: PrimePowerRule,
    coprime_to: u64,
}

impl fmt::Debug for MultiplicativeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiplicativeSpec")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("coprime_to", &self.coprime_to)
            .finish()
    }
}

impl MultiplicativeSpec {
    pub fn one() -> Self {
        Self::builtin("one", SpecKind::One, |_, _| Complex64::new(1.0, 0.0))
    }

    pub fn mobius() -> Self {
        Self::builtin("mu", SpecKind::Mobius, |_, e| {
            Complex64::new(if e == 1 { -1.0 } else { 0.0 }, 0.0)
        })
    }

    pub fn liouville() -> Self {
        Self::builtin("lambda", SpecKind::Liouville, |_, e| {
            Complex64::new(if e % 2 == 1 { -1.0 } else { 1.0 }, 0.0)
        })
    }

    pub fn power_free(r: u32) -> Result<Self> {
        if r < 2 {
            return invalid(format!("power-free order must be >= 2, got {r}"));
        }
        Ok(Self::builtin(
            &format!("mu_{r}"),
            SpecKind::PowerFree(r),
            move |_, e| Complex64::new(if e < r { 1.0 } else { 0.0 }, 0.0),
        ))
    }

    /// The completely multiplicative n ↦ n^{it}.
    pub fn archimedean(t: f64) -> Self {
        Self::from_fn(&format!("n^(i*{t})"), move |p, e| {
            let phase = t * e as f64 * (p as f64).ln();
            Complex64::new(phase.cos(), phase.sin())
        })
    }

    /// A custom rule (p, e) ↦ f(p^e). The caller promises |f(p^e)| ≤ 1;
    /// [`MultiplicativeSpec::check_bounded`] verifies it on a prime range.
    pub fn from_fn<F>(name: &str, rule: F) -> Self
    where
        F: Fn(u64, u32) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            name: name.to_string(),
            kind: SpecKind::Custom,
            rule: Arc::new(rule),
            coprime_to: 1,
        }
    }

    fn builtin<F>(name: &str, kind: SpecKind, rule: F) -> Self
    where
        F: Fn(u64, u32) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            name: name.to_string(),
            kind,
            rule: Arc::new(rule),
            coprime_to: 1,
        }
    }

    /// Multiplies by the indicator 1_{(n,k)=1}.
    pub fn coprime_to(mut self, k: u64) -> Result<Self> {
        if k == 0 {
            return invalid("coprime_to modulus must be >= 1");
        }
        self.coprime_to = lcm(self.coprime_to, k);
        if k > 1 {
            self.name = format!("{}*1[(n,{})=1]", self.name, k);
        }
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> SpecKind {
        self.kind
    }

    pub fn coprime_modulus(&self) -> u64 {
        self.coprime_to
    }

    /// f(p^e), including the coprimality restriction.
    #[inline]
    pub fn at_prime_power(&self, p: u64, e: u32) -> Complex64 {
        if e == 0 {
            return Complex64::new(1.0, 0.0);
        }
        if self.coprime_to > 1 && self.coprime_to % p == 0 {
            return Complex64::new(0.0, 0.0);
        }
        (self.rule)(p, e)
    }

    /// f(p).
    #[inline]
    pub fn at_prime(&self, p: u64) -> Complex64 {
        self.at_prime_power(p, 1)
    }

    /// Checks |f(p^e)| ≤ 1 for every prime power p^e ≤ limit.
    pub fn check_bounded(&self, primes: &[u64], limit: u64) -> Result<()> {
        for &p in primes.iter().take_while(|&&p| p <= limit) {
            let mut pe = p;
            let mut e = 1;
            loop {
                let v = self.at_prime_power(p, e);
                if v.norm() > 1.0 + 1e-12 {
                    return invalid(format!(
                        "{}: |f({p}^{e})| = {} exceeds 1",
                        self.name,
                        v.norm()
                    ));
                }
                match pe.checked_mul(p) {
                    Some(next) if next <= limit => {
                        pe = next;
                        e += 1;
                    }
                    _ => break,
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_at_one() {
        for spec in [
            MultiplicativeSpec::mobius(),
            MultiplicativeSpec::liouville(),
            MultiplicativeSpec::one(),
        ] {
            assert_eq!(spec.at_prime_power(7, 0), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn power_free_rejects_small_order() {
        assert!(MultiplicativeSpec::power_free(1).is_err());
        let mu3 = MultiplicativeSpec::power_free(3).unwrap();
        assert_eq!(mu3.at_prime_power(2, 2).re, 1.0);
        assert_eq!(mu3.at_prime_power(2, 3).re, 0.0);
    }

    #[test]
    fn coprime_restriction_kills_divisors() {
        let f = MultiplicativeSpec::mobius().coprime_to(6).unwrap();
        assert_eq!(f.at_prime(2).re, 0.0);
        assert_eq!(f.at_prime(3).re, 0.0);
        assert_eq!(f.at_prime(5).re, -1.0);
        assert_eq!(f.coprime_modulus(), 6);
    }

    #[test]
    fn bounded_check_names_offending_prime() {
        let bad = MultiplicativeSpec::from_fn("bad", |p, _| {
            Complex64::new(if p == 5 { 2.0 } else { 1.0 }, 0.0)
        });
        let err = bad.check_bounded(&[2, 3, 5, 7], 100).unwrap_err();
        assert!(err.to_string().contains("f(5^1)"));
    }
}
