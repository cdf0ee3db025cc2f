use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Result;
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::io::{self, OutputDir};

/// Written next to every command's outputs. Contains no timestamps, so
/// identical runs write identical files.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: RunConfig,
    /// Input path as given, mapped to the SHA-256 of its contents.
    pub inputs: BTreeMap<String, String>,
    /// Output paths relative to the output directory.
    pub outputs: Vec<String>,
    pub details: Value,
}

impl RunMetadata {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        RunMetadata {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config: config.clone(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            details: Value::Null,
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), io::sha256_file(path)?);
        Ok(())
    }

    pub fn output(&mut self, rel: impl Into<String>) {
        self.outputs.push(rel.into());
    }

    /// Writes `meta/<command>.json` and returns its relative path.
    pub fn write(&self, out: &OutputDir) -> Result<String> {
        let rel = format!("meta/{}.json", self.command);
        io::write_json(&out.path(&rel)?, self)?;
        Ok(rel)
    }
}
