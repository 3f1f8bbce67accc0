//! Persistence: CSV and JSON artifacts, atomic writes and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use coopmag_core::params::DerivedScales;

use crate::error::RunError;

/// A CSV table. Every cell is already formatted; floats use the shortest
/// round-trip representation so reruns are byte-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    /// Column meanings and units, written into the header comment.
    pub description: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, description: &str, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            description: description.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

/// Formats a float for CSV; NaN marks points a method cannot evaluate.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Artifact {
    Csv(Table),
    Json { name: String, value: serde_json::Value },
    Text { name: String, contents: String },
}

impl Artifact {
    pub fn name(&self) -> &str {
        match self {
            Artifact::Csv(t) => &t.name,
            Artifact::Json { name, .. } | Artifact::Text { name, .. } => name,
        }
    }
}

/// Unit system stamped on every CSV file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    /// ν in rad/s.
    pub nu: f64,
    /// Γ₀/ν at the configured temperature.
    pub gamma0_over_nu: f64,
}

impl Normalization {
    pub fn from_scales(s: &DerivedScales) -> Self {
        Normalization { nu: s.nu, gamma0_over_nu: s.gamma0 }
    }

    fn header(&self) -> String {
        format!(
            "normalization: nu = {:e} rad/s, Gamma0 = {:e} nu = {:e} rad/s",
            self.nu,
            self.gamma0_over_nu,
            self.gamma0_over_nu * self.nu
        )
    }
}

pub fn render(artifact: &Artifact, norm: &Normalization) -> Result<Vec<u8>, RunError> {
    match artifact {
        Artifact::Csv(table) => {
            let mut out = format!("# {}; {}\n", table.description, norm.header()).into_bytes();
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&table.columns)?;
            for row in &table.rows {
                w.write_record(row)?;
            }
            w.flush()?;
            drop(w);
            Ok(out)
        }
        Artifact::Json { value, .. } => {
            let mut out = serde_json::to_vec_pretty(value).map_err(|e| RunError::Io(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
        Artifact::Text { contents, .. } => Ok(contents.clone().into_bytes()),
    }
}

/// Writes `bytes` to `dir/name` through a temporary file in the same directory.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, RunError> {
    let path = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(&path).map_err(|e| RunError::Io(e.to_string()))?;
    Ok(path)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub master_seed: u64,
    /// Per-realization disorder seeds, empty for ordered runs.
    pub realization_seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub kind: String,
    /// Fully resolved configuration; rerunning it reproduces every data file.
    pub config: String,
    pub derived_scales: DerivedScales,
    pub normalization: Normalization,
    pub seeds: Seeds,
    pub wall_clock_seconds: f64,
    pub files: Vec<FileRecord>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Writes all artifacts, then the manifest carrying their checksums.
pub fn persist(
    dir: &Path,
    artifacts: &[Artifact],
    norm: &Normalization,
    mut manifest: RunManifest,
) -> Result<RunManifest, RunError> {
    fs::create_dir_all(dir)?;
    manifest.files.clear();
    for artifact in artifacts {
        let bytes = render(artifact, norm)?;
        write_atomic(dir, artifact.name(), &bytes)?;
        manifest.files.push(FileRecord { name: artifact.name().into(), bytes: bytes.len(), sha256: sha256_hex(&bytes) });
    }
    let text = serde_json::to_vec_pretty(&manifest).map_err(|e| RunError::Io(e.to_string()))?;
    write_atomic(dir, MANIFEST_NAME, &text)?;
    Ok(manifest)
}
