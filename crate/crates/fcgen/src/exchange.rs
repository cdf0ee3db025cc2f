//! File exchange for offline generation: prompts go out as JSON lines
//! `{id, prompt, n}` and come back as `{id, continuations}`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::io;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub id: usize,
    pub prompt: String,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContinuationRecord {
    pub id: usize,
    pub continuations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ImportError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: id {id} was never exported")]
    UnknownId { line: usize, id: usize },
    #[error("line {line}: id {id} answered twice")]
    DuplicateId { line: usize, id: usize },
}

/// Continuations keyed by sample id, plus the exported ids nobody answered.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Joined {
    pub responses: BTreeMap<usize, Vec<String>>,
    pub missing: Vec<usize>,
}

pub fn export_prompts(path: &Path, prompts: &[PromptRecord]) -> anyhow::Result<()> {
    io::write_jsonl(path, prompts)
}

/// Joins continuation lines against the exported ids.
pub fn parse_continuations(text: &str, expected: &BTreeSet<usize>) -> Result<Joined, ImportError> {
    let mut responses = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ContinuationRecord =
            serde_json::from_str(line).map_err(|e| ImportError::Malformed { line: line_no, message: e.to_string() })?;
        if !expected.contains(&rec.id) {
            return Err(ImportError::UnknownId { line: line_no, id: rec.id });
        }
        if responses.insert(rec.id, rec.continuations).is_some() {
            return Err(ImportError::DuplicateId { line: line_no, id: rec.id });
        }
    }
    let missing = expected.iter().copied().filter(|id| !responses.contains_key(id)).collect();
    Ok(Joined { responses, missing })
}

pub fn import_continuations(path: &Path, expected: &BTreeSet<usize>) -> anyhow::Result<Result<Joined, ImportError>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_continuations(&text, expected))
}

/// Writes joined responses in import format, ordered by id.
pub fn write_continuations(path: &Path, joined: &BTreeMap<usize, Vec<String>>) -> anyhow::Result<()> {
    io::write_jsonl(
        path,
        joined.iter().map(|(id, c)| ContinuationRecord { id: *id, continuations: c.clone() }),
    )
}
