//! Named sequences and multiplicative functions, and sieving through the
//! optional on-disk cache.

use crate::report::CacheRecord;
use anyhow::{bail, Context, Result};
use mdlab_core::dirichlet::characters_mod;
use mdlab_core::mean_state::{sampler, SamplerKind};
use mdlab_core::sieve::{FunctionTag, MultiplicativeSpec, SeqWindow, SieveCache};
use std::path::Path;

pub struct Sieves {
    cache: Option<SieveCache>,
    records: Vec<CacheRecord>,
}

impl Sieves {
    pub fn new(dir: Option<&Path>) -> Result<Self> {
        let cache = dir
            .map(|d| {
                SieveCache::new(d)
                    .with_context(|| format!("opening cache directory {}", d.display()))
            })
            .transpose()?;
        Ok(Self {
            cache,
            records: Vec::new(),
        })
    }

    pub fn get(&mut self, tag: FunctionTag, start: u64, length: usize) -> Result<SeqWindow> {
        match &self.cache {
            Some(cache) => {
                let (w, hit) = cache.get_or_sieve(tag, start, length)?;
                self.records.push(CacheRecord {
                    function: tag.to_string(),
                    start,
                    length,
                    hit,
                });
                Ok(w)
            }
            None => Ok(tag.sieve(start, length)?),
        }
    }

    pub fn take_records(&mut self) -> Vec<CacheRecord> {
        std::mem::take(&mut self.records)
    }
}

/// `mu`, `mu2`, `mu3`, … and `lambda`.
pub fn parse_tag(name: &str) -> Result<FunctionTag> {
    Ok(match name {
        "mu" => FunctionTag::Mobius,
        "mu2" => FunctionTag::MobiusSquared,
        "lambda" => FunctionTag::Liouville,
        _ => match name
            .strip_prefix("mu_r")
            .or_else(|| name.strip_prefix("mu"))
            .and_then(|r| r.parse::<u8>().ok())
        {
            Some(r) if r >= 2 => FunctionTag::PowerFree(r),
            _ => bail!("unknown function `{name}`; expected mu, mu2, muR (R >= 2) or lambda"),
        },
    })
}

pub fn power_free_tag(r: u32) -> Result<FunctionTag> {
    match r {
        2 => Ok(FunctionTag::MobiusSquared),
        3..=255 => Ok(FunctionTag::PowerFree(r as u8)),
        _ => bail!("power-free order must lie in [2, 255], got {r}"),
    }
}

/// A sequence on [1, length]: a sieved function, `one`, or one of
/// `e-sqrt`, `e-lin:θ`, `e-quad:θ`.
pub fn sequence(sieves: &mut Sieves, name: &str, length: usize) -> Result<SeqWindow> {
    let sampled = |kind| -> Result<SeqWindow> { Ok(sampler(kind, 1, length)?) };
    let theta = |s: &str| s.parse::<f64>().with_context(|| format!("bad phase `{s}`"));
    if name == "one" {
        return Ok(SeqWindow::constant(1, length, 1)?);
    }
    if name == "e-sqrt" {
        return sampled(SamplerKind::ExpSqrt);
    }
    if let Some(t) = name.strip_prefix("e-lin:") {
        return sampled(SamplerKind::ExpLinear(theta(t)?));
    }
    if let Some(t) = name.strip_prefix("e-quad:") {
        return sampled(SamplerKind::ExpQuadratic(theta(t)?));
    }
    sieves.get(parse_tag(name)?, 1, length)
}

/// `one`, `mu`, `lambda`, `muR`, `nit:t` (n ↦ n^{it}) or `chi:k:i`
/// (the i-th character mod k, principal first).
pub fn spec(name: &str) -> Result<MultiplicativeSpec> {
    Ok(match name {
        "one" => MultiplicativeSpec::one(),
        "mu" => MultiplicativeSpec::mobius(),
        "lambda" => MultiplicativeSpec::liouville(),
        _ => {
            if let Some(t) = name.strip_prefix("nit:") {
                let t: f64 = t
                    .parse()
                    .with_context(|| format!("bad exponent in `{name}`"))?;
                MultiplicativeSpec::archimedean(t)
            } else if let Some(rest) = name.strip_prefix("chi:") {
                let (k, i) = rest
                    .split_once(':')
                    .with_context(|| format!("expected chi:k:i, got `{name}`"))?;
                let k: u64 = k
                    .parse()
                    .with_context(|| format!("bad modulus in `{name}`"))?;
                let i: usize = i
                    .parse()
                    .with_context(|| format!("bad index in `{name}`"))?;
                let chars = characters_mod(k)?;
                let Some(chi) = chars.get(i).cloned() else {
                    bail!(
                        "modulus {k} has {} characters, index {i} is out of range",
                        chars.len()
                    );
                };
                let label = chi.label();
                MultiplicativeSpec::from_fn(&format!("chi[{label}]"), move |p, e| {
                    chi.eval(p).powu(e)
                })
            } else if let Some(r) = name.strip_prefix("mu").and_then(|r| r.parse::<u32>().ok()) {
                MultiplicativeSpec::power_free(r)?
            } else {
                bail!("unknown multiplicative function `{name}`; expected one, mu, lambda, muR, nit:t or chi:k:i")
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use mdlab_core::sieve::mobius_sieve;

    #[test]
    fn tags_round_trip_through_display() {
        for name in ["mu", "mu2", "mu3", "lambda"] {
            assert_eq!(
                parse_tag(name).unwrap().to_string().replace("mu_r", "mu"),
                name
            );
        }
        assert_eq!(parse_tag("mu_r4").unwrap(), FunctionTag::PowerFree(4));
        assert!(parse_tag("mu1").is_err());
        assert!(parse_tag("nu").is_err());
    }

    #[test]
    fn cache_records_miss_then_hit() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Sieves::new(Some(dir.path())).unwrap();
        let a = s.get(FunctionTag::Mobius, 1, 1000).unwrap();
        let b = s.get(FunctionTag::Mobius, 1, 1000).unwrap();
        assert_eq!(a.small(), b.small());
        assert_eq!(a.small(), mobius_sieve(1, 1000).unwrap().small());
        let hits: Vec<bool> = s.take_records().iter().map(|r| r.hit).collect();
        assert_eq!(hits, vec![false, true]);
    }

    #[test]
    fn named_sequences() {
        let mut s = Sieves::new(None).unwrap();
        assert_eq!(
            sequence(&mut s, "one", 5).unwrap().small(),
            Some(&[1i8; 5][..])
        );
        let w = sequence(&mut s, "e-lin:0.25", 4).unwrap();
        assert!((w.get(1).re + 1.0).abs() < 1e-12);
        assert!(sequence(&mut s, "e-lin:x", 4).is_err());
    }

    #[test]
    fn named_specs() {
        assert_eq!(spec("mu").unwrap().at_prime(7).re, -1.0);
        assert_eq!(spec("mu3").unwrap().at_prime_power(2, 2).re, 1.0);
        let chi = spec("chi:5:1").unwrap();
        assert!((chi.at_prime(2).norm() - 1.0).abs() < 1e-12);
        assert_eq!(chi.at_prime(5).norm(), 0.0);
        assert!(spec("chi:5:9").is_err());
        assert!(spec("zeta").is_err());
    }
}
