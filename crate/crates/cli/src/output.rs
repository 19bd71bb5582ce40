//! Input hashing and serialized artifact writing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dsf_core::spectrum::Spectrum;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads a whole input file; a missing file maps to `input_not_found`.
pub fn read_input(path: &Path, label: &str) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| {
        let kind = if e.kind() == std::io::ErrorKind::NotFound {
            "input_not_found"
        } else {
            "io_error"
        };
        CliError::new(kind, format!("{label} file `{}`: {e}", path.display()))
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub path: PathBuf,
    pub sha256: String,
}

/// Hashes of every file read by a run, keyed by role.
#[derive(Debug, Default, Clone, Serialize)]
pub struct InputLedger(pub BTreeMap<String, FileRecord>);

impl InputLedger {
    pub fn read(&mut self, role: &str, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = read_input(path, role)?;
        self.0.insert(
            role.to_string(),
            FileRecord {
                path: path.to_path_buf(),
                sha256: sha256_hex(&bytes),
            },
        );
        Ok(bytes)
    }
}

/// Output directory that records the hash of everything written to it.
pub struct OutputDir {
    dir: PathBuf,
    written: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::new("io_error", format!("{}: {e}", dir.display())))?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            written: BTreeMap::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::new("io_error", format!("{}: {e}", path.display())))?;
        self.written.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    /// Spectrum CSV with `shift` added to the ω column.
    pub fn write_spectrum(&mut self, name: &str, s: &Spectrum, shift: f64) -> Result<(), CliError> {
        let text = if shift == 0.0 {
            s.to_csv()
        } else {
            let omega = s.omega.iter().map(|w| w + shift).collect();
            Spectrum::new(omega, s.values.clone(), s.eta, s.kind).to_csv()
        };
        self.write(name, text.as_bytes())
    }

    /// Writes `manifest.json` last, listing all other outputs.
    pub fn finish<M: Serialize>(mut self, manifest: &M) -> Result<PathBuf, CliError> {
        let mut doc = serde_json::to_value(manifest).map_err(|e| CliError::new("json_error", e.to_string()))?;
        doc["outputs"] = serde_json::to_value(&self.written).expect("string map");
        let text = serde_json::to_string_pretty(&doc).expect("json value") + "\n";
        self.write("manifest.json", text.as_bytes())?;
        Ok(self.dir.join("manifest.json"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn missing_input_kind() {
        let e = read_input(Path::new("/nonexistent/dipoles.json"), "dipoles").unwrap_err();
        assert_eq!(e.kind, "input_not_found");
    }
}
