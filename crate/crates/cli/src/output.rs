//! Versioned CSV result files and the resume index.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

pub const SCHEMA_LINE: &str = "# ponsim-results v1";

pub const METRICS: [&str; 6] = ["nsd_percent", "ber", "air_rs", "air_th", "k_star", "stabilized_fraction"];

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    /// Resume key: all rows of a cell are written together.
    pub cell: String,
    pub band: String,
    pub tod: bool,
    pub power_dbm: f64,
    /// Swept |β₂| in ps²/km, when the cell belongs to a dispersion sweep.
    pub beta2_ps2_per_km: Option<f64>,
    /// Propagation model, or detector for BER/AIR rows.
    pub model: String,
    pub metric: String,
    pub value: f64,
    /// Monte-Carlo standard error (NaN when not applicable).
    pub std_err: f64,
    pub seed: u64,
    pub config_hash: String,
    /// Largest split-step self-NSD seen in the cell.
    pub ssfm_self_nsd: f64,
    pub certified: bool,
}

impl ResultRow {
    pub fn validate(&self) -> Result<()> {
        if !METRICS.contains(&self.metric.as_str()) {
            bail!("unknown metric {:?}", self.metric);
        }
        Ok(())
    }
}

/// Appends rows to a results CSV, creating it with the schema line and
/// header when missing.
pub struct ResultWriter {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl ResultWriter {
    pub fn open(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .with_context(|| format!("opening {}", path.display()))?;
        if fresh {
            writeln!(file, "{SCHEMA_LINE}")?;
        }
        let writer = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
        Ok(Self { path: path.to_path_buf(), writer })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes one cell's rows and flushes, so an interrupted sweep resumes at
    /// a cell boundary.
    pub fn write_cell(&mut self, rows: &[ResultRow]) -> Result<()> {
        for r in rows {
            r.validate()?;
            self.writer.serialize(r)?;
        }
        self.writer.flush()?;
        Ok(())
    }
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    if first.trim_end() != SCHEMA_LINE {
        bail!("{}: missing schema line {SCHEMA_LINE:?}", path.display());
    }
    let mut rows = Vec::new();
    for r in csv::Reader::from_reader(reader).deserialize() {
        rows.push(r.with_context(|| format!("parsing {}", path.display()))?);
    }
    Ok(rows)
}

/// Cells already present in a results file for a given config hash.
#[derive(Debug, Default)]
pub struct ResultIndex {
    done: HashSet<String>,
}

impl ResultIndex {
    pub fn load(path: &Path, config_hash: &str) -> Result<Self> {
        if !path.exists() || std::fs::metadata(path)?.len() == 0 {
            return Ok(Self::default());
        }
        let done = read_rows(path)?
            .into_iter()
            .filter(|r| r.config_hash == config_hash)
            .map(|r| r.cell)
            .collect();
        Ok(Self { done })
    }

    pub fn contains(&self, cell: &str) -> bool {
        self.done.contains(cell)
    }

    pub fn len(&self) -> usize {
        self.done.len()
    }

    pub fn is_empty(&self) -> bool {
        self.done.is_empty()
    }
}
