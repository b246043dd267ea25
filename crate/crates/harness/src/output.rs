//! CSV formatting, checksummed output files and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Seeds};
use crate::HarnessError;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Shortest round-trip scientific notation, so CSVs are bit-exact.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

/// In-memory CSV with a header row and `\n` line endings.
#[derive(Debug, Clone)]
pub struct CsvTable {
    columns: usize,
    text: String,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            columns: header.len(),
            text: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len(), self.columns, "row width");
        let _ = writeln!(self.text, "{}", fields.join(","));
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub experiment: String,
    pub config: ExperimentConfig,
    pub seeds: Seeds,
    pub wall_clock_seconds: f64,
    /// SHA-256 of every data file, keyed by file name.
    pub files: BTreeMap<String, String>,
    /// Strict interior local minima per landscape.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub minima: BTreeMap<String, usize>,
    /// Summary numbers for reading a run at a glance.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub info: BTreeMap<String, serde_json::Value>,
}

/// Files written during one run. Dropping it without [`OutputSet::commit`]
/// deletes them, so a failed run leaves no partial outputs.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    written: Vec<PathBuf>,
    checksums: BTreeMap<String, String>,
    committed: bool,
}

impl OutputSet {
    pub fn create(dir: &Path) -> Result<Self, HarnessError> {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            checksums: BTreeMap::new(),
            committed: false,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes a data file and records its checksum.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, HarnessError> {
        let path = self.write_untracked(name, contents)?;
        self.checksums
            .insert(name.to_string(), sha256_hex(contents.as_bytes()));
        Ok(path)
    }

    fn write_untracked(&mut self, name: &str, contents: &str) -> Result<PathBuf, HarnessError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| HarnessError::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn checksums(&self) -> &BTreeMap<String, String> {
        &self.checksums
    }

    /// Writes the manifest (last) and keeps every file.
    pub fn commit(
        mut self,
        mut manifest: RunManifest,
    ) -> Result<(PathBuf, RunManifest), HarnessError> {
        manifest.files = self.checksums.clone();
        let mut json = serde_json::to_string_pretty(&manifest)?;
        json.push('\n');
        let path = self.write_untracked(MANIFEST_FILE, &json)?;
        self.committed = true;
        Ok((path, manifest))
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Experiment;

    #[test]
    fn float_format_round_trips() {
        for v in [0.0, 1.0, -0.25, 1e-16, 0.1 + 0.2, std::f64::consts::PI] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(0.5), "5e-1");
    }

    #[test]
    fn table_layout() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.row(&["1".into(), fmt_f64(2.0)]);
        assert_eq!(t.as_str(), "a,b\n1,2e0\n");
    }

    #[test]
    fn uncommitted_outputs_are_removed() {
        let dir = tempfile::tempdir().unwrap();
        let path = {
            let mut out = OutputSet::create(dir.path()).unwrap();
            out.write("x.csv", "a\n1\n").unwrap()
        };
        assert!(!path.exists());

        let mut out = OutputSet::create(dir.path()).unwrap();
        let kept = out.write("y.csv", "a\n1\n").unwrap();
        let cfg = ExperimentConfig::paper_repro(Experiment::Train);
        let manifest = RunManifest {
            artifact_version: "0".into(),
            experiment: "train".into(),
            seeds: cfg.seeds.resolve(),
            config: cfg,
            wall_clock_seconds: 0.0,
            files: BTreeMap::new(),
            minima: BTreeMap::new(),
            info: BTreeMap::new(),
        };
        let (m, _) = out.commit(manifest).unwrap();
        assert!(kept.exists() && m.exists());
        let back: RunManifest = serde_json::from_str(&fs::read_to_string(m).unwrap()).unwrap();
        assert_eq!(back.files["y.csv"], sha256_hex(b"a\n1\n"));
    }
}
