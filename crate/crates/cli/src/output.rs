//! Output directory handling, CSV/JSON writers and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(root)
            .with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn write_text(&mut self, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
        let path = self.root.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        println!("wrote {}", path.display());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    /// Manifest tying the outputs to the resolved configuration and seed.
    pub fn write_manifest(
        &mut self,
        command: &str,
        config: &ExperimentConfig,
        seed: u64,
    ) -> anyhow::Result<()> {
        let config_json = serde_json::to_string(config)?;
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        hasher.update(b"\n");
        hasher.update(config_json.as_bytes());
        let digest = hasher.finalize();
        let hash = digest.iter().map(|b| format!("{b:02x}")).collect::<String>();
        let manifest = serde_json::json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "config_sha256": hash,
            "files": self.written,
            "config": serde_json::from_str::<serde_json::Value>(&config_json)?,
        });
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.root.join("manifest.json");
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
        Ok(())
    }
}

/// Plain CSV assembly with '.' decimals (Rust float formatting is
/// locale-independent and round-trip exact).
pub struct Csv {
    buffer: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        let mut buffer = String::new();
        buffer.push_str(header);
        buffer.push('\n');
        Self { buffer }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buffer.push_str(&fields.join(","));
        self.buffer.push('\n');
    }

    pub fn finish(self) -> String {
        self.buffer
    }
}

pub fn fmt_f64(value: f64) -> String {
    if value == 0.0 {
        "0".into()
    } else if value.abs() < 1e-4 || value.abs() >= 1e9 {
        format!("{value:e}")
    } else {
        format!("{value}")
    }
}

/// Times are grid multiples; print them as short decimals.
pub fn fmt_time(value: f64) -> String {
    let text = format!("{value:.9}");
    let trimmed = text.trim_end_matches('0').trim_end_matches('.');
    if trimmed.is_empty() {
        "0".into()
    } else {
        trimmed.into()
    }
}
