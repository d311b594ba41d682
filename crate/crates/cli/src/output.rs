//! CSV artifacts and the run manifest.
//!
//! Every CSV starts with one `#` line carrying the tool version, base seed
//! and config hash, followed by a header row. Bodies depend only on the
//! configuration and seeds; wall times live in `manifest.json` alone.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct Output {
    dir: PathBuf,
    comment: String,
    written: Vec<String>,
}

pub type CsvWriter = csv::Writer<BufWriter<File>>;

impl Output {
    pub fn create(dir: &Path, seed: u64, hash: &str) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            comment: format!("# proxlb {VERSION} seed={seed} config={hash}"),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.written
    }

    /// Opens `name` and writes the comment line and header row.
    pub fn csv(&mut self, name: &str, header: &[&str]) -> Result<CsvWriter> {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "{}", self.comment)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(header)?;
        self.written.push(name.to_string());
        Ok(csv)
    }
}

/// Writes `rows` of already formatted fields to a new CSV.
pub fn write_rows(out: &mut Output, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = out.csv(name, header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed-precision float formatting so CSV bodies are stable.
pub fn fmt(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.6}")
    }
}

#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub label: String,
    pub seed: u64,
    pub wall_ms: f64,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub config: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    pub threads: usize,
    pub started_unix: u64,
    pub total_wall_ms: f64,
    pub notes: Vec<String>,
    pub files: Vec<String>,
    pub runs: Vec<RunRecord>,
}

impl Manifest {
    pub fn new(command: impl Into<String>, config_hash: &str, config: BTreeMap<String, String>, seeds: Vec<u64>) -> Self {
        Self {
            tool: "proxlb",
            version: VERSION,
            command: command.into(),
            config_hash: config_hash.to_string(),
            config,
            seeds,
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            total_wall_ms: 0.0,
            notes: Vec::new(),
            files: Vec::new(),
            runs: Vec::new(),
        }
    }

    pub fn record(&mut self, label: impl Into<String>, seed: u64, wall: Duration) {
        self.runs.push(RunRecord {
            label: label.into(),
            seed,
            wall_ms: wall.as_secs_f64() * 1e3,
        });
    }

    pub fn write(mut self, out: &Output, total: Duration) -> Result<()> {
        self.total_wall_ms = total.as_secs_f64() * 1e3;
        self.files = out.files().to_vec();
        let path = out.dir().join("manifest.json");
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        serde_json::to_writer_pretty(BufWriter::new(file), &self)?;
        Ok(())
    }
}
