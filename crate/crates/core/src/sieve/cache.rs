//! Binary cache for sieved windows.
//!
//! Layout (little-endian):
//!
//! ```text
//! "MDL1"            4 bytes magic
//! tag               u8: 0 = μ, 1 = μ², 2 = μ_r (followed by u8 r), 3 = λ
//! start             u64
//! length            u64
//! values            `length` signed bytes
//! ```

use super::segmented::{liouville_sieve, mobius_sieve, power_free_sieve};
use super::window::SeqWindow;
use crate::error::{LabError, Result};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const MAGIC: &[u8; 4] = b"MDL1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FunctionTag {
    Mobius,
    MobiusSquared,
    PowerFree(u8),
    Liouville,
}

impl fmt::Display for FunctionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionTag::Mobius => write!(f, "mu"),
            FunctionTag::MobiusSquared => write!(f, "mu2"),
            FunctionTag::PowerFree(r) => write!(f, "mu_r{r}"),
            FunctionTag::Liouville => write!(f, "lambda"),
        }
    }
}

impl FunctionTag {
    /// Sieves the tagged function on a fresh range.
    pub fn sieve(self, start: u64, length: usize) -> Result<SeqWindow> {
        match self {
            FunctionTag::Mobius => mobius_sieve(start, length),
            FunctionTag::MobiusSquared => power_free_sieve(start, length, 2),
            FunctionTag::PowerFree(r) => power_free_sieve(start, length, r as u32),
            FunctionTag::Liouville => liouville_sieve(start, length),
        }
    }
}

pub fn encode(tag: FunctionTag, window: &SeqWindow) -> Result<Vec<u8>> {
    let values = window
        .small()
        .ok_or_else(|| LabError::Format("only compact {-1,0,1} windows can be cached".into()))?;
    let mut out = Vec::with_capacity(4 + 2 + 16 + values.len());
    out.extend_from_slice(MAGIC);
    match tag {
        FunctionTag::Mobius => out.push(0),
        FunctionTag::MobiusSquared => out.push(1),
        FunctionTag::PowerFree(r) => {
            out.push(2);
            out.push(r);
        }
        FunctionTag::Liouville => out.push(3),
    }
    out.extend_from_slice(&window.start().to_le_bytes());
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    out.extend(values.iter().map(|&v| v as u8));
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<(FunctionTag, SeqWindow)> {
    let fail = |m: &str| LabError::Format(m.to_string());
    if bytes.len() < 5 || &bytes[..4] != MAGIC {
        return Err(fail("missing MDL1 magic"));
    }
    let (tag, mut pos) = match bytes[4] {
        0 => (FunctionTag::Mobius, 5),
        1 => (FunctionTag::MobiusSquared, 5),
        2 => {
            let r = *bytes
                .get(5)
                .ok_or_else(|| fail("truncated power-free order"))?;
            if r < 2 {
                return Err(fail("power-free order below 2"));
            }
            (FunctionTag::PowerFree(r), 6)
        }
        3 => (FunctionTag::Liouville, 5),
        t => return Err(LabError::Format(format!("unknown function tag {t}"))),
    };
    let mut read_u64 = || -> Result<u64> {
        let chunk = bytes
            .get(pos..pos + 8)
            .ok_or_else(|| fail("truncated header"))?;
        pos += 8;
        Ok(u64::from_le_bytes(chunk.try_into().unwrap()))
    };
    let start = read_u64()?;
    let length = read_u64()?;
    let body = &bytes[pos..];
    if body.len() as u64 != length {
        return Err(LabError::Format(format!(
            "header promises {length} values but {} bytes follow",
            body.len()
        )));
    }
    let values: Vec<i8> = body.iter().map(|&b| b as i8).collect();
    let window =
        SeqWindow::from_small(start, values).map_err(|e| LabError::Format(e.to_string()))?;
    Ok((tag, window))
}

pub fn write_file(path: &Path, tag: FunctionTag, window: &SeqWindow) -> Result<()> {
    let bytes = encode(tag, window)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<(FunctionTag, SeqWindow)> {
    decode(&fs::read(path)?)
}

/// Content-addressed sieve cache keyed by (function, start, length).
#[derive(Debug, Clone)]
pub struct SieveCache {
    dir: PathBuf,
}

impl SieveCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn path_for(&self, tag: FunctionTag, start: u64, length: usize) -> PathBuf {
        self.dir.join(format!("{tag}-{start}-{length}.mdl"))
    }

    /// Returns the window and whether it came from disk.
    pub fn get_or_sieve(
        &self,
        tag: FunctionTag,
        start: u64,
        length: usize,
    ) -> Result<(SeqWindow, bool)> {
        let path = self.path_for(tag, start, length);
        if path.exists() {
            let (found, w) = read_file(&path)?;
            if found == tag && w.start() == start && w.len() == length {
                return Ok((w, true));
            }
        }
        let w = tag.sieve(start, length)?;
        write_file(&path, tag, &w)?;
        Ok((w, false))
    }
}
