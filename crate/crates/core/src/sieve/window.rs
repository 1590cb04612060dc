use crate::error::{invalid, Result};
use num_complex::Complex64;
use std::sync::Arc;

/// Backing storage for a window.
#[derive(Debug, Clone, PartialEq)]
pub enum Values {
    /// Values of a {−1, 0, 1}-valued (or small integer) function.
    Small(Vec<i8>),
    Complex(Vec<Complex64>),
}

/// Values of an arithmetic function on the contiguous range
/// `start, start + 1, …, start + len − 1` (1-based).
///
/// Windows are immutable; shifting produces a view onto the same storage.
#[derive(Debug, Clone)]
pub struct SeqWindow {
    start: u64,
    data: Arc<Values>,
    offset: usize,
    len: usize,
    bound: f64,
}

/// Read-only view of a window's values.
#[derive(Debug, Clone, Copy)]
pub enum ValuesRef<'a> {
    Small(&'a [i8]),
    Complex(&'a [Complex64]),
}

impl SeqWindow {
    pub fn from_small(start: u64, values: Vec<i8>) -> Result<Self> {
        Self::check(start, values.len())?;
        let bound = values.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0) as f64;
        let len = values.len();
        Ok(Self {
            start,
            data: Arc::new(Values::Small(values)),
            offset: 0,
            len,
            bound,
        })
    }

    pub fn from_complex(start: u64, values: Vec<Complex64>) -> Result<Self> {
        Self::check(start, values.len())?;
        let bound = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let len = values.len();
        Ok(Self {
            start,
            data: Arc::new(Values::Complex(values)),
            offset: 0,
            len,
            bound,
        })
    }

    /// A window with a caller-supplied sup-norm certificate. The certificate
    /// is kept only if it really bounds every value.
    pub fn with_bound(mut self, bound: f64) -> Result<Self> {
        if bound + 1e-12 < self.bound {
            return invalid(format!(
                "claimed bound {bound} is below the observed maximum {}",
                self.bound
            ));
        }
        self.bound = bound;
        Ok(self)
    }

    pub fn constant(start: u64, len: usize, value: i8) -> Result<Self> {
        Self::from_small(start, vec![value; len])
    }

    fn check(start: u64, len: usize) -> Result<()> {
        if start == 0 {
            return invalid("windows are 1-based: start must be >= 1");
        }
        if len == 0 {
            return invalid("window length must be >= 1");
        }
        if start.checked_add(len as u64).is_none() {
            return Err(crate::LabError::Overflow(format!(
                "window [{start}, {start}+{len}) exceeds u64"
            )));
        }
        Ok(())
    }

    pub fn start(&self) -> u64 {
        self.start
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// One past the last index covered.
    pub fn end(&self) -> u64 {
        self.start + self.len as u64
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn values(&self) -> ValuesRef<'_> {
        match &*self.data {
            Values::Small(v) => ValuesRef::Small(&v[self.offset..self.offset + self.len]),
            Values::Complex(v) => ValuesRef::Complex(&v[self.offset..self.offset + self.len]),
        }
    }

    pub fn small(&self) -> Option<&[i8]> {
        match self.values() {
            ValuesRef::Small(v) => Some(v),
            ValuesRef::Complex(_) => None,
        }
    }

    pub fn is_small(&self) -> bool {
        matches!(*self.data, Values::Small(_))
    }

    /// Value at position `i` (0-based within the window).
    #[inline]
    pub fn get(&self, i: usize) -> Complex64 {
        assert!(
            i < self.len,
            "index {i} outside window of length {}",
            self.len
        );
        match &*self.data {
            Values::Small(v) => Complex64::new(v[self.offset + i] as f64, 0.0),
            Values::Complex(v) => v[self.offset + i],
        }
    }

    /// Value at the integer `n` (1-based).
    pub fn at(&self, n: u64) -> Option<Complex64> {
        if n < self.start || n >= self.end() {
            return None;
        }
        Some(self.get((n - self.start) as usize))
    }

    pub fn to_complex_vec(&self) -> Vec<Complex64> {
        match self.values() {
            ValuesRef::Small(v) => v.iter().map(|&x| Complex64::new(x as f64, 0.0)).collect(),
            ValuesRef::Complex(v) => v.to_vec(),
        }
    }

    /// Drops the first `m` entries: the result holds n ↦ f(n + m) relabelled
    /// to start at the same index. O(1), shares storage.
    pub fn shifted(&self, m: usize) -> Result<Self> {
        if m >= self.len {
            return invalid(format!(
                "shift {m} leaves nothing of a window of length {}",
                self.len
            ));
        }
        Ok(Self {
            start: self.start,
            data: Arc::clone(&self.data),
            offset: self.offset + m,
            len: self.len - m,
            bound: self.bound,
        })
    }

    /// Restricts to the first `len` entries.
    pub fn truncated(&self, len: usize) -> Result<Self> {
        if len == 0 || len > self.len {
            return invalid(format!(
                "cannot truncate a window of length {} to {len}",
                self.len
            ));
        }
        Ok(Self {
            len,
            ..self.clone()
        })
    }

    /// Concatenates two windows that abut (`other.start == self.end()`).
    pub fn concat(&self, other: &SeqWindow) -> Result<Self> {
        if other.start != self.end() {
            return invalid(format!(
                "windows do not abut: first ends at {}, second starts at {}",
                self.end(),
                other.start
            ));
        }
        match (self.values(), other.values()) {
            (ValuesRef::Small(a), ValuesRef::Small(b)) => {
                Self::from_small(self.start, a.iter().chain(b).copied().collect())
            }
            _ => {
                let mut v = self.to_complex_vec();
                v.extend(other.to_complex_vec());
                Self::from_complex(self.start, v)
            }
        }
    }
}

impl PartialEq for SeqWindow {
    fn eq(&self, other: &Self) -> bool {
        if self.start != other.start || self.len != other.len {
            return false;
        }
        match (self.values(), other.values()) {
            (ValuesRef::Small(a), ValuesRef::Small(b)) => a == b,
            _ => self.to_complex_vec() == other.to_complex_vec(),
        }
    }
}
