//! CSV tables and the JSON manifest that indexes them.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // 17 significant digits round-trip every f64.
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Float)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Column {
    pub name: &'static str,
    pub unit: &'static str,
}

/// One CSV file, written as `<prefix>_<suffix>.csv`.
#[derive(Clone, Debug)]
pub struct Table {
    pub suffix: &'static str,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(suffix: &'static str, columns: &[(&'static str, &'static str)]) -> Self {
        Table {
            suffix,
            columns: columns.iter().map(|&(name, unit)| Column { name, unit }).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width in table {}", self.suffix);
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.name))?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: usize,
    pub rows: usize,
    pub columns: Vec<Column>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn table_path(prefix: &Path, suffix: &str, ext: &str) -> PathBuf {
    let mut name = prefix.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(format!("_{suffix}.{ext}"));
    prefix.with_file_name(name)
}

/// Fails before anything is written if a target exists and overwriting
/// was not requested.
pub fn check_targets(paths: &[PathBuf], overwrite: bool) -> Result<()> {
    if overwrite {
        return Ok(());
    }
    match paths.iter().find(|p| p.exists()) {
        Some(p) => Err(Error::OutputExists(p.clone())),
        None => Ok(()),
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, bytes).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Writes every table and returns the manifest entries in table order.
pub fn write_tables(prefix: &Path, tables: &[Table]) -> Result<Vec<FileEntry>> {
    tables
        .iter()
        .map(|t| {
            let path = table_path(prefix, t.suffix, "csv");
            let bytes = t.to_bytes()?;
            write_file(&path, &bytes)?;
            Ok(FileEntry {
                sha256: sha256_hex(&bytes),
                bytes: bytes.len(),
                rows: t.rows.len(),
                columns: t.columns.clone(),
                path,
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ConversionFactors {
    /// k_B/ħ: multiply kelvin to get rad/s.
    pub kelvin_to_rad_s: f64,
    /// g μ_B/ħ: multiply tesla to get rad/s per unit spin.
    pub tesla_to_rad_s: f64,
    pub per_cm3_to_per_m3: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub quantity: String,
    pub value: f64,
    pub unit: &'static str,
    /// `frozen-regression` for pinned self-computed values, `literature`
    /// for published reference values.
    pub tag: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: &'static str,
    pub seed: u64,
    pub threads: usize,
    /// The config as read.
    pub config: Value,
    /// Config quantities converted to internal rad/s units.
    pub internal: Value,
    pub conversion_factors: ConversionFactors,
    pub files: Vec<FileEntry>,
    pub results: Value,
    pub warnings: Vec<String>,
    pub provenance: Vec<Provenance>,
    pub elapsed_s: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rendering_is_lf_and_full_precision() {
        let mut t = Table::new("x", &[("a", "rad/s"), ("b", "1"), ("c", "1")]);
        t.push(vec![0.1.into(), Cell::Empty, true.into()]);
        let s = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        assert_eq!(s, "a,b,c\n1.0000000000000001e-1,,true\n");
        let back: f64 = s.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
        assert_eq!(back, 0.1);
    }

    #[test]
    fn paths_and_hash() {
        assert_eq!(table_path(Path::new("out/run"), "grid", "csv"), PathBuf::from("out/run_grid.csv"));
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn collision_refused_without_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        fs::write(&p, "x").unwrap();
        assert!(matches!(check_targets(std::slice::from_ref(&p), false), Err(Error::OutputExists(_))));
        assert!(check_targets(&[p], true).is_ok());
    }
}
