use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Output directory of one run. Every file written through it is listed in
/// `manifest.json` when the run finishes.
pub struct OutDir {
    root: PathBuf,
    artifacts: Vec<String>,
}

#[derive(Serialize)]
struct Artifact<'a> {
    path: &'a str,
    bytes: u64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    artifacts: Vec<Artifact<'a>>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(Self { root: root.to_path_buf(), artifacts: Vec::new() })
    }

    /// Path of artifact `name`, registered for the manifest.
    pub fn file(&mut self, name: &str) -> PathBuf {
        if !self.artifacts.iter().any(|a| a == name) {
            self.artifacts.push(name.to_string());
        }
        self.root.join(name)
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.file(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.file(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn finish(mut self, command: &str) -> Result<()> {
        self.artifacts.sort();
        let mut artifacts = Vec::with_capacity(self.artifacts.len());
        for name in &self.artifacts {
            let bytes = fs::metadata(self.root.join(name)).with_context(|| format!("artifact {name} missing"))?.len();
            artifacts.push(Artifact { path: name, bytes });
        }
        let manifest = Manifest { command, version: env!("CARGO_PKG_VERSION"), artifacts };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.root.join("manifest.json"), text)?;
        Ok(())
    }
}
