//! CSV tables, artifact files and the run manifest.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};
use varbound::{Error, Result};

use crate::builtin::Source;

/// A CSV table; cells are written exactly as given.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
        w.write_record(&self.header).map_err(fail)?;
        for row in &self.rows {
            w.write_record(row).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Invalid(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Invalid(e.to_string()))
    }

    /// Aligned plain-text rendering for the terminal.
    pub fn render(&self) -> String {
        let widths: Vec<usize> = (0..self.header.len())
            .map(|c| self.rows.iter().map(|r| r[c].len()).chain([self.header[c].len()]).max().unwrap_or(0))
            .collect();
        let line = |cells: &[String]| {
            cells.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect::<Vec<_>>().join("  ").trim_end().to_string()
        };
        let mut out = line(&self.header);
        for r in &self.rows {
            out.push('\n');
            out.push_str(&line(r));
        }
        out
    }
}

/// Shortest round-trip representation.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:e}")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

#[derive(Serialize)]
struct InputRecord {
    role: String,
    source: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'a str,
    version: &'a str,
    verb: &'a str,
    arguments: &'a [String],
    seed: Option<u64>,
    inputs: &'a [InputRecord],
    outputs: &'a [String],
    started_unix: u64,
    elapsed_seconds: f64,
    status: &'a str,
}

/// Output directory of one run.
pub struct RunDir {
    dir: PathBuf,
    verb: String,
    arguments: Vec<String>,
    pub seed: Option<u64>,
    inputs: Vec<InputRecord>,
    outputs: Vec<String>,
    started: u64,
    clock: Instant,
}

impl RunDir {
    pub fn create(dir: &Path, verb: &str, arguments: Vec<String>) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.display().to_string(), source: e })?;
        let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Ok(RunDir {
            dir: dir.to_path_buf(),
            verb: verb.to_string(),
            arguments,
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started,
            clock: Instant::now(),
        })
    }

    pub fn input(&mut self, role: &str, src: &Source) {
        let digest = Sha256::digest(src.text.as_bytes());
        let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.inputs.push(InputRecord { role: role.to_string(), source: src.label.clone(), sha256 });
    }

    pub fn write(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
        Ok(path)
    }

    pub fn table(&mut self, name: &str, table: &Table) -> Result<PathBuf> {
        self.write(name, &table.to_csv()?)
    }

    pub fn finish(mut self, status: &str) -> Result<()> {
        let elapsed_seconds = self.clock.elapsed().as_secs_f64();
        let manifest = Manifest {
            tool: "varbound",
            version: env!("CARGO_PKG_VERSION"),
            verb: &self.verb,
            arguments: &self.arguments,
            seed: self.seed,
            inputs: &self.inputs,
            outputs: &self.outputs,
            started_unix: self.started,
            elapsed_seconds,
            status,
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Invalid(e.to_string()))?;
        self.outputs.push("manifest.json".into());
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, text + "\n").map_err(|e| Error::Io { path: path.display().to_string(), source: e })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_fields_with_commas() {
        let mut t = Table::new(&["name", "value"]);
        t.push(vec!["a,b".into(), num(0.5)]);
        assert_eq!(t.to_csv().unwrap(), "name,value\n\"a,b\",5e-1\n");
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, -2.4674011002723395, 1e-300, 0.0] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(f64::NEG_INFINITY), "-inf");
    }
}
