//! Run manifests and the output directory they describe.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Failure;

pub const MANIFEST_SCHEMA: &str = "dslump-manifest";
pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OutputFile {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub version: u32,
    pub command: String,
    pub config: serde_json::Value,
    pub tool_version: String,
    /// Not part of the reproducible output.
    pub wall_time_s: f64,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
        let m: RunManifest = serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        m.check()?;
        Ok(m)
    }

    pub fn check(&self) -> Result<(), Failure> {
        if self.schema != MANIFEST_SCHEMA {
            return Err(Failure::usage(format!("not a manifest: schema '{}'", self.schema)));
        }
        if self.version != MANIFEST_VERSION {
            return Err(Failure::usage(format!("unsupported manifest version {}", self.version)));
        }
        Ok(())
    }
}

/// Output directory that records the hash of every file written to it.
pub struct OutDir {
    root: PathBuf,
    files: Vec<OutputFile>,
}

impl OutDir {
    pub fn create(root: PathBuf) -> Result<Self, Failure> {
        fs::create_dir_all(&root).map_err(|e| Failure::data(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self { root, files: vec![] })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))?;
        self.files.retain(|f| f.path != name);
        self.files.push(OutputFile {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::data(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn finish(self, command: &str, config: serde_json::Value, wall_time_s: f64) -> Result<RunManifest, Failure> {
        let manifest = RunManifest {
            schema: MANIFEST_SCHEMA.into(),
            version: MANIFEST_VERSION,
            command: command.into(),
            config,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            wall_time_s,
            outputs: self.files,
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::data(e.to_string()))?;
        let path = self.root.join(MANIFEST_FILE);
        fs::write(&path, text + "\n").map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))?;
        Ok(manifest)
    }
}
