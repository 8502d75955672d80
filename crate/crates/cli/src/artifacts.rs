//! Output directory bookkeeping: every file written goes through [`ArtifactSet`] and ends up
//! in `manifest.json` with its sha256.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use mcgraph::domain::Mesh;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Floats in CSV files carry 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub scenario: String,
    pub scenario_hash: String,
    pub experiment: String,
    pub seed: u64,
    pub artifacts: Vec<ArtifactEntry>,
}

#[derive(Debug)]
pub struct ArtifactSet {
    dir: PathBuf,
    entries: Vec<ArtifactEntry>,
}

impl ArtifactSet {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(ArtifactSet {
            dir: dir.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.entries.retain(|e| e.path != name);
        self.entries.push(ArtifactEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn entries(&self) -> &[ArtifactEntry] {
        &self.entries
    }

    /// Writes `manifest.json`, which lists everything else.
    pub fn finish(mut self, scenario: &str, scenario_hash: &str, experiment: &str, seed: u64) -> std::io::Result<Manifest> {
        self.entries.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            scenario: scenario.to_string(),
            scenario_hash: scenario_hash.to_string(),
            experiment: experiment.to_string(),
            seed,
            artifacts: self.entries,
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
        text.push('\n');
        std::fs::write(self.dir.join("manifest.json"), text)?;
        Ok(manifest)
    }
}

/// `vertex,x,y,value` rows; `None` values are skipped.
pub fn vertex_csv(mesh: &Mesh, values: impl IntoIterator<Item = Option<f64>>) -> String {
    let mut out = String::from("vertex,x,y,value\n");
    for (v, val) in values.into_iter().enumerate() {
        if let Some(val) = val {
            let p = mesh.vertex(v);
            let _ = writeln!(out, "{v},{},{},{}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(val));
        }
    }
    out
}

/// A CSV with the given header and rows of floats.
pub fn table_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_f64).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
