#![allow(dead_code)]

pub mod server;

use std::path::{Path, PathBuf};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn workspace_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

/// Compiles one definition out of a schema file in `schema/`.
pub fn schema(file: &str, def: Option<&str>) -> jsonschema::Validator {
    let text = std::fs::read_to_string(workspace_file(&format!("schema/{file}"))).unwrap();
    let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
    if let Some(def) = def {
        value = value["$defs"][def].clone();
    }
    jsonschema::validator_for(&value).unwrap()
}
