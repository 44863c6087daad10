//! Output writing with a per-command manifest of inputs, outputs and hashes.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
struct Entry {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: Option<u64>,
    parameters: &'a Value,
    inputs: Vec<Entry>,
    outputs: Vec<Entry>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects the files one command reads and writes.
pub struct Run {
    command: &'static str,
    out_dir: PathBuf,
    inputs: Vec<Entry>,
    outputs: Vec<Entry>,
}

impl Run {
    pub fn new(command: &'static str, out_dir: &Path) -> Self {
        Run {
            command,
            out_dir: out_dir.to_path_buf(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Paths inside the output directory are recorded relative to it.
    fn display(&self, path: &Path) -> String {
        path.strip_prefix(&self.out_dir)
            .unwrap_or(path)
            .to_string_lossy()
            .replace('\\', "/")
    }

    pub fn read(&mut self, path: &Path) -> Result<String> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(Entry {
            path: self.display(path),
            sha256: sha256_hex(text.as_bytes()),
        });
        Ok(text)
    }

    /// Writes `bytes` to `{out_dir}/{rel}`.
    pub fn write(&mut self, rel: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let path = self.out_dir.join(rel);
        self.write_at(&path, bytes)
    }

    /// Writes to an arbitrary path (used for caches outside the output tree).
    pub fn write_at(&mut self, path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
        let bytes = bytes.as_ref();
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(Entry {
            path: self.display(path),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_json(&mut self, rel: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, text)
    }

    /// Writes `manifests/{command}.json`.
    pub fn finish(self, seed: Option<u64>, parameters: &Value) -> Result<()> {
        let m = Manifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            parameters,
            inputs: self.inputs,
            outputs: self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&m)?;
        text.push('\n');
        let path = self
            .out_dir
            .join("manifests")
            .join(format!("{}.json", self.command));
        std::fs::create_dir_all(path.parent().expect("has parent"))?;
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
