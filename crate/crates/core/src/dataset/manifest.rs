use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::calibration::CalibrationSet;
use super::config::PipelineConfig;
use super::mix::MixRecipe;
use crate::error::{Error, Result};

pub const HEADER_FILE: &str = "header.json";
pub const ROWS_FILE: &str = "manifest.jsonl";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Val,
    Test,
}

impl Partition {
    pub const ALL: [Partition; 3] = [Partition::Train, Partition::Val, Partition::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Val => "val",
            Partition::Test => "test",
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One mixture. File references are relative to the dataset directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub row: usize,
    pub mixture: String,
    pub partition: Partition,
    pub speaker: String,
    pub recipe: MixRecipe,
    pub label_t60: f64,
    pub label_drr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub version: u32,
    pub sample_rate: u32,
    pub rows: usize,
    pub calibration: CalibrationSet,
    pub config: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub header: ManifestHeader,
    pub rows: Vec<ManifestRow>,
}

impl Manifest {
    /// Write `header.json` and `manifest.jsonl` into `dir`, each through a
    /// temporary file renamed into place.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let header = serde_json::to_string_pretty(&self.header)?;
        write_atomic(&dir.join(HEADER_FILE), header.as_bytes())?;
        let mut body = Vec::new();
        for row in &self.rows {
            serde_json::to_writer(&mut body, row)?;
            body.push(b'\n');
        }
        write_atomic(&dir.join(ROWS_FILE), &body)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(HEADER_FILE);
        let doc = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let header: ManifestHeader = serde_json::from_str(&doc)?;
        let rows = read_rows(&dir.join(ROWS_FILE))?;
        if rows.len() != header.rows {
            return Err(Error::Degenerate(format!(
                "header promises {} rows, {} found",
                header.rows,
                rows.len()
            )));
        }
        Ok(Manifest { header, rows })
    }
}

/// Parse a JSON Lines manifest; blank lines are ignored.
pub fn read_rows(path: &Path) -> Result<Vec<ManifestRow>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(&line).map_err(|e| {
            Error::Degenerate(format!("{} line {}: {e}", path.display(), i + 1))
        })?;
        rows.push(row);
    }
    Ok(rows)
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
