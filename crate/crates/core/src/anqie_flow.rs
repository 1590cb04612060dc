//! Finite windows of the square-free flow: length-L factor censuses of
//! {0,1}-valued sequences, bits-per-symbol profiles, and the rigidity of the
//! coordinate projections along n_j = (p₁⋯p_j)².
//!
//! A census over n ≤ N only sees words that occur before N, so every count is
//! a lower bound for the number of words in the orbit closure.

use crate::correlation::{lag_defect, rigidity_sequence, MirskyTable};
use crate::error::{invalid, LabError, Result};
use crate::numerics::KahanSum;
use crate::sieve::{power_free_sieve, primes_up_to, SeqWindow};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

pub const MAX_WINDOW: usize = 32;
const DENSE_LIMIT: usize = 20;
const MIN_CHUNK: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowCensus {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "N")]
    pub n: u64,
    pub distinct_count: u64,
    /// Window → occurrences; the first symbol is the most significant bit.
    pub counts: BTreeMap<u32, u64>,
}

impl WindowCensus {
    pub const CSV_HEADER: &'static str = "L,N,distinct_count,bits_per_symbol";

    pub fn bits_per_symbol(&self) -> f64 {
        (self.distinct_count as f64).log2() / self.l as f64
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.l,
            self.n,
            self.distinct_count,
            self.bits_per_symbol()
        )
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Key-wise addition of two censuses taken over disjoint sets of window
    /// start positions.
    pub fn merge(&mut self, other: &WindowCensus) -> Result<()> {
        if other.l != self.l {
            return invalid(format!(
                "cannot merge censuses of lengths {} and {}",
                self.l, other.l
            ));
        }
        for (&w, &c) in &other.counts {
            *self.counts.entry(w).or_insert(0) += c;
        }
        self.n += other.n;
        self.distinct_count = self.counts.len() as u64;
        Ok(())
    }
}

/// Renders a window as a string of 0s and 1s.
pub fn word(mask: u32, l: usize) -> String {
    (0..l)
        .rev()
        .map(|i| if mask >> i & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn binary_values(f: &SeqWindow, n: u64) -> Result<&[i8]> {
    let v = f
        .small()
        .ok_or_else(|| LabError::InvalidArgument("window census needs a {0,1} sequence".into()))?;
    if (v.len() as u64) < n {
        return invalid(format!(
            "window of length {} does not cover N = {n}",
            v.len()
        ));
    }
    let v = &v[..n as usize];
    if let Some(pos) = v.iter().position(|&x| x != 0 && x != 1) {
        return invalid(format!(
            "value {} at offset {pos} is not in {{0,1}}",
            v[pos]
        ));
    }
    Ok(v)
}

fn census_chunk(v: &[i8], l: usize, lo: usize, hi: usize) -> HashMap<u32, u64> {
    let full: u64 = (1u64 << l) - 1;
    let mut mask: u64 = 0;
    for &b in &v[lo..lo + l - 1] {
        mask = mask << 1 | b as u64;
    }
    if l <= DENSE_LIMIT {
        let mut dense = vec![0u64; 1 << l];
        for &b in &v[lo + l - 1..hi + l - 1] {
            mask = (mask << 1 | b as u64) & full;
            dense[mask as usize] += 1;
        }
        dense
            .into_iter()
            .enumerate()
            .filter(|e| e.1 > 0)
            .map(|(w, c)| (w as u32, c))
            .collect()
    } else {
        let mut sparse = HashMap::new();
        for &b in &v[lo + l - 1..hi + l - 1] {
            mask = (mask << 1 | b as u64) & full;
            *sparse.entry(mask as u32).or_insert(0) += 1;
        }
        sparse
    }
}

/// Census of the length-L factors of f(start), …, f(start + N − 1).
pub fn window_census(f: &SeqWindow, l: usize, n: u64) -> Result<WindowCensus> {
    if l == 0 || l > MAX_WINDOW {
        return invalid(format!(
            "window length must lie in [1, {MAX_WINDOW}], got {l}"
        ));
    }
    let v = binary_values(f, n)?;
    if (n as usize) < l {
        return invalid(format!("N = {n} is shorter than the window length {l}"));
    }
    let starts = n as usize - l + 1;
    let chunk = MIN_CHUNK.max(starts.div_ceil(rayon::current_num_threads()));
    let bounds: Vec<(usize, usize)> = (0..starts)
        .step_by(chunk)
        .map(|lo| (lo, starts.min(lo + chunk)))
        .collect();
    let parts: Vec<HashMap<u32, u64>> = bounds
        .into_par_iter()
        .map(|(lo, hi)| census_chunk(v, l, lo, hi))
        .collect();
    let mut counts = BTreeMap::new();
    for part in parts {
        for (w, c) in part {
            *counts.entry(w).or_insert(0) += c;
        }
    }
    Ok(WindowCensus {
        l,
        n,
        distinct_count: counts.len() as u64,
        counts,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyRow {
    #[serde(rename = "L")]
    pub l: usize,
    pub distinct_count: u64,
    pub bits_per_symbol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyProfile {
    #[serde(rename = "N")]
    pub n: u64,
    pub rows: Vec<EntropyRow>,
    /// Whether log₂(distinct_count) is non-decreasing in L.
    pub log_counts_monotone: bool,
}

pub fn entropy_profile(
    f: &SeqWindow,
    ls: impl IntoIterator<Item = usize>,
    n: u64,
) -> Result<EntropyProfile> {
    let rows: Vec<EntropyRow> = ls
        .into_iter()
        .map(|l| {
            let c = window_census(f, l, n)?;
            Ok(EntropyRow {
                l,
                distinct_count: c.distinct_count,
                bits_per_symbol: c.bits_per_symbol(),
            })
        })
        .collect::<Result<_>>()?;
    let log_counts_monotone = rows
        .windows(2)
        .all(|w| w[1].l < w[0].l || w[1].distinct_count >= w[0].distinct_count);
    Ok(EntropyProfile {
        n,
        rows,
        log_counts_monotone,
    })
}

/// A {0,1} word is admissible for p if its 1s miss some residue class mod p².
pub fn is_admissible(mask: u32, l: usize, primes: &[u64]) -> bool {
    primes.iter().all(|&p| {
        let q = (p * p) as usize;
        (0..q).any(|r| (r..l).step_by(q).all(|i| mask >> (l - 1 - i) & 1 == 0))
    })
}

/// Words of the census that violate the mod 4 or mod 9 sieve constraint.
pub fn inadmissible_windows(census: &WindowCensus) -> Vec<u32> {
    census
        .counts
        .keys()
        .copied()
        .filter(|&w| !is_admissible(w, census.l, &[2, 3]))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionRigidity {
    pub i: u64,
    pub l: u64,
    pub j: usize,
    #[serde(rename = "N")]
    pub n: u64,
    /// l·n_j
    pub lag: u64,
    pub empirical: f64,
    pub closed_form: f64,
    pub closed_form_error: f64,
}

/// (12/π²)(1 − ∏_{p > p_j} (1 + 1/(p² − 2))^{−1} · ∏_{p² | l, p > p_j} (1 + 1/(p² − 2))),
/// the squared L²(ν) distance between π_i and π_i ∘ B^{l n_j}.
#[derive(Debug, Clone)]
pub struct RigidityClosedForm {
    j: usize,
    pj: u64,
    /// ∏_{p_j < p ≤ P} (1 + 1/(p² − 2))^{−1}
    tail_product: f64,
    /// Bound on |log| of the omitted factors p > P.
    tail_bound: f64,
}

impl RigidityClosedForm {
    pub fn new(j: usize, cutoff: u64) -> Result<Self> {
        if j == 0 {
            return invalid("rigidity index j must be >= 1");
        }
        let primes = primes_up_to(cutoff.max(1_000));
        if primes.len() <= j {
            return invalid(format!("cutoff {cutoff} leaves no primes beyond p_{j}"));
        }
        let pj = primes[j - 1];
        let log: f64 = primes[j..]
            .iter()
            .map(|&p| -(1.0 / ((p * p) as f64 - 2.0)).ln_1p())
            .collect::<KahanSum>()
            .value();
        // Σ_{n > P} 1/(n² − 2) ≤ 1/(P − 1)
        let big_p = *primes.last().unwrap() as f64;
        Ok(Self {
            j,
            pj,
            tail_product: log.exp(),
            tail_bound: 1.0 / (big_p - 1.0),
        })
    }

    pub fn j(&self) -> usize {
        self.j
    }

    /// Value and absolute error bound at l.
    pub fn at(&self, l: u64) -> (f64, f64) {
        if l == 0 {
            return (0.0, 0.0);
        }
        let extra: f64 = crate::sieve::oracle::factor_small(l)
            .into_iter()
            .filter(|&(p, e)| e >= 2 && p > self.pj)
            .map(|(p, _)| 1.0 + 1.0 / ((p * p) as f64 - 2.0))
            .product();
        let c = 12.0 / (PI * PI);
        let prod = self.tail_product * extra;
        (c * (1.0 - prod), c * prod * self.tail_bound.exp_m1())
    }
}

fn squarefree_window(cover: u64) -> Result<SeqWindow> {
    power_free_sieve(1, cover as usize, 2)
}

/// Projection rigidity on a μ² window starting at 1.
pub fn projection_rigidity_on(
    mu2: &SeqWindow,
    closed: &RigidityClosedForm,
    i: u64,
    l: u64,
    n: u64,
) -> Result<ProjectionRigidity> {
    if mu2.start() != 1 {
        return invalid("μ² window must start at 1");
    }
    let nj = rigidity_sequence(2, closed.j)?;
    let lag = l
        .checked_mul(nj)
        .ok_or_else(|| LabError::Overflow(format!("lag {l}·{nj} overflows")))?;
    // n runs from 1, so the first compared value is μ²(i + 1)
    let view = mu2.shifted(i as usize)?;
    let empirical = lag_defect(&view, lag as usize, n)?;
    let (closed_form, closed_form_error) = closed.at(l);
    Ok(ProjectionRigidity {
        i,
        l,
        j: closed.j,
        n,
        lag,
        empirical,
        closed_form,
        closed_form_error,
    })
}

pub fn projection_rigidity(i: u64, l: u64, j: usize, n: u64) -> Result<ProjectionRigidity> {
    let closed = RigidityClosedForm::new(j, crate::correlation::DEFAULT_ORACLE_CUTOFF)?;
    let lag = rigidity_sequence(2, j)?.saturating_mul(l);
    let w = squarefree_window(n + lag + i)?;
    projection_rigidity_on(&w, &closed, i, l, n)
}

#[derive(Debug, Clone, Serialize)]
pub struct AveragedRigidity {
    pub i: u64,
    pub j: usize,
    pub h: u64,
    #[serde(rename = "N")]
    pub n: u64,
    pub empirical: f64,
    pub closed_form: f64,
}

/// (1/h) Σ_{l=0}^{h−1} ‖π_i ∘ B^{l n_j} − π_i‖², empirically and in closed form.
pub fn averaged_rigidity_on(
    mu2: &SeqWindow,
    closed: &RigidityClosedForm,
    i: u64,
    h: u64,
    n: u64,
) -> Result<AveragedRigidity> {
    if h == 0 {
        return invalid("h must be >= 1");
    }
    let rows: Vec<ProjectionRigidity> = (0..h)
        .into_par_iter()
        .map(|l| projection_rigidity_on(mu2, closed, i, l, n))
        .collect::<Result<_>>()?;
    let empirical = rows
        .iter()
        .map(|r| r.empirical)
        .collect::<KahanSum>()
        .value()
        / h as f64;
    let closed_form = rows
        .iter()
        .map(|r| r.closed_form)
        .collect::<KahanSum>()
        .value()
        / h as f64;
    Ok(AveragedRigidity {
        i,
        j: closed.j,
        h,
        n,
        empirical,
        closed_form,
    })
}

pub fn averaged_rigidity(i: u64, j: usize, h: u64, n: u64) -> Result<AveragedRigidity> {
    let closed = RigidityClosedForm::new(j, crate::correlation::DEFAULT_ORACLE_CUTOFF)?;
    let lag = rigidity_sequence(2, j)?.saturating_mul(h.saturating_sub(1));
    let w = squarefree_window(n + lag + i)?;
    averaged_rigidity_on(&w, &closed, i, h, n)
}

#[derive(Debug, Clone, Serialize)]
pub struct RigidityFloor {
    pub j: usize,
    pub delta: f64,
    /// h_j = ⌊n_j^δ⌋
    pub h: u64,
    pub min_closed_form: f64,
    pub argmin_l: u64,
    /// 1/(√h_j · ln h_j)
    pub reference: f64,
    pub ratio: f64,
}

/// min over 1 ≤ l ≤ n_j^δ of the closed form, against 1/(√h_j ln h_j).
pub fn rigidity_floor(j: usize, delta: f64) -> Result<RigidityFloor> {
    if !(delta > 0.0 && delta <= 1.0) {
        return invalid(format!("delta must lie in (0, 1], got {delta}"));
    }
    let nj = rigidity_sequence(2, j)?;
    let h = (nj as f64).powf(delta).floor() as u64;
    if h < 2 {
        return invalid(format!(
            "h_j = {h} is too small for a logarithmic reference"
        ));
    }
    let closed = RigidityClosedForm::new(j, crate::correlation::DEFAULT_ORACLE_CUTOFF)?;
    let (argmin_l, min_closed_form) = (1..=h)
        .map(|l| (l, closed.at(l).0))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let reference = 1.0 / ((h as f64).sqrt() * (h as f64).ln());
    Ok(RigidityFloor {
        j,
        delta,
        h,
        min_closed_form,
        argmin_l,
        reference,
        ratio: min_closed_form / reference,
    })
}

/// Cross-check of the closed form against 2(1/ζ(2) − Mirsky(l·n_j)).
pub fn closed_form_via_mirsky(table: &MirskyTable, j: usize, l: u64) -> Result<(f64, f64)> {
    let lag = rigidity_sequence(table.r(), j)?
        .checked_mul(l)
        .ok_or_else(|| LabError::Overflow("lag overflows".into()))?;
    table.defect(lag)
}
