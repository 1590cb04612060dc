//! JSON-lines report stream with an embedded run manifest, plus an optional
//! CSV sink.

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// One sieve request served by the cache layer.
#[derive(Debug, Clone, Serialize)]
pub struct CacheRecord {
    pub function: String,
    pub start: u64,
    pub length: usize,
    pub hit: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: Value,
    pub seed: u64,
    pub tool_version: String,
    pub wall_time: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub cache: Vec<CacheRecord>,
}

pub struct Emitter {
    manifest: RunManifest,
    started: Instant,
    out: Box<dyn Write>,
    csv: Option<Csv>,
}

struct Csv {
    path: PathBuf,
    header: Option<String>,
    rows: Vec<String>,
}

impl Emitter {
    pub fn new(
        subcommand: &str,
        parameters: Value,
        seed: u64,
        csv_path: Option<&Path>,
        out: Box<dyn Write>,
    ) -> Self {
        Self {
            manifest: RunManifest {
                subcommand: subcommand.to_string(),
                parameters,
                seed,
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                wall_time: 0.0,
                cache: Vec::new(),
            },
            started: Instant::now(),
            out,
            csv: csv_path.map(|p| Csv {
                path: p.to_path_buf(),
                header: None,
                rows: Vec::new(),
            }),
        }
    }

    pub fn record_cache(&mut self, records: impl IntoIterator<Item = CacheRecord>) {
        self.manifest.cache.extend(records);
    }

    /// Writes one report line.
    pub fn emit<T: Serialize>(&mut self, kind: &str, data: &T) -> Result<()> {
        self.manifest.wall_time = self.started.elapsed().as_secs_f64();
        let line = json!({ "manifest": &self.manifest, "kind": kind, "data": data });
        serde_json::to_writer(&mut self.out, &line)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(())
    }

    /// Queues a CSV row; the header is fixed by the first call.
    pub fn csv(&mut self, header: &str, row: String) {
        if let Some(csv) = &mut self.csv {
            csv.header.get_or_insert_with(|| header.to_string());
            csv.rows.push(row);
        }
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        if let Some(csv) = self.csv {
            let file = File::create(&csv.path)
                .with_context(|| format!("creating {}", csv.path.display()))?;
            let mut w = BufWriter::new(file);
            if let Some(h) = csv.header {
                writeln!(w, "{h}")?;
            }
            for r in csv.rows {
                writeln!(w, "{r}")?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::{Arc, Mutex};

    #[derive(Clone, Default)]
    struct Shared(Arc<Mutex<Vec<u8>>>);

    impl Write for Shared {
        fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
            self.0.lock().unwrap().extend_from_slice(buf);
            Ok(buf.len())
        }
        fn flush(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }

    #[test]
    fn lines_embed_the_manifest() {
        let buf = Shared::default();
        let mut e = Emitter::new("moment", json!({"N": 10}), 7, None, Box::new(buf.clone()));
        e.emit("Thing", &json!({"a": 1})).unwrap();
        e.emit("Thing", &json!({"a": 2})).unwrap();
        e.finish().unwrap();
        let text = String::from_utf8(buf.0.lock().unwrap().clone()).unwrap();
        let lines: Vec<Value> = text
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1]["manifest"]["subcommand"], "moment");
        assert_eq!(lines[1]["manifest"]["parameters"]["N"], 10);
        assert_eq!(lines[1]["manifest"]["seed"], 7);
        assert_eq!(lines[1]["kind"], "Thing");
        assert_eq!(lines[1]["data"]["a"], 2);
        assert!(lines[0]["manifest"].get("cache").is_none());
    }

    #[test]
    fn csv_gets_one_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let mut e = Emitter::new("x", json!({}), 0, Some(&path), Box::new(std::io::sink()));
        e.csv("a,b", "1,2".into());
        e.csv("a,b", "3,4".into());
        e.finish().unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n1,2\n3,4\n");
    }
}
