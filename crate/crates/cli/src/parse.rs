//! Flag value parsers. Every integer flag accepts plain digits, underscores
//! and scientific notation such as `1e7`.

use serde::Serialize;
use std::fmt;

pub fn parse_u64(s: &str) -> Result<u64, String> {
    let s = s.trim().replace('_', "");
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !x.is_finite() || x < 0.0 || x.fract() != 0.0 || x >= 2f64.powi(63) {
        return Err(format!("`{s}` is not a non-negative integer"));
    }
    Ok(x as u64)
}

pub fn parse_usize(s: &str) -> Result<usize, String> {
    parse_u64(s).and_then(|v| usize::try_from(v).map_err(|e| e.to_string()))
}

pub fn parse_f64(s: &str) -> Result<f64, String> {
    let x: f64 = s
        .trim()
        .replace('_', "")
        .parse()
        .map_err(|_| format!("`{s}` is not a number"))?;
    if !x.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(x)
}

/// An integer list written as `a..b` (inclusive), `a..=b`, `a,b,c` or `a`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct U64List(pub Vec<u64>);

impl U64List {
    pub fn max(&self) -> u64 {
        self.0.iter().copied().max().unwrap_or(0)
    }
}

impl fmt::Display for U64List {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u64::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

pub fn parse_list(s: &str) -> Result<U64List, String> {
    let s = s.trim();
    let values = if let Some((a, b)) = s.split_once("..") {
        let (lo, hi) = (parse_u64(a)?, parse_u64(b.trim_start_matches('='))?);
        if lo > hi {
            return Err(format!("empty range `{s}`"));
        }
        (lo..=hi).collect()
    } else {
        s.split(',').map(parse_u64).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err("empty list".into());
    }
    Ok(U64List(values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integers_accept_scientific_notation() {
        assert_eq!(parse_u64("1e7"), Ok(10_000_000));
        assert_eq!(parse_u64("2.5e3"), Ok(2_500));
        assert_eq!(parse_u64("1_000"), Ok(1_000));
        assert_eq!(parse_u64("18446744073709551615"), Ok(u64::MAX));
        assert!(parse_u64("1.5").is_err());
        assert!(parse_u64("-3").is_err());
        assert!(parse_u64("abc").is_err());
    }

    #[test]
    fn floats_reject_non_finite() {
        assert_eq!(parse_f64("1e-4"), Ok(1e-4));
        assert!(parse_f64("inf").is_err());
        assert!(parse_f64("nan").is_err());
    }

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_list("1..10").unwrap().0, (1..=10).collect::<Vec<_>>());
        assert_eq!(parse_list("3..=5").unwrap().0, vec![3, 4, 5]);
        assert_eq!(parse_list("10,1e2,1e3").unwrap().0, vec![10, 100, 1000]);
        assert_eq!(parse_list("7").unwrap().0, vec![7]);
        assert!(parse_list("5..2").is_err());
        assert_eq!(parse_list("1..4").unwrap().to_string(), "1,2,3,4");
    }
}
