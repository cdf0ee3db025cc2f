//! Training artifacts for an external sequence-to-sequence trainer: JSON
//! lines of `{source, target}` pairs and one manifest per training stage.
//!
//! Stage 1 trains on the original corpus, stage 2 continues on the
//! augmented corpus, and stage 3 fine-tunes on both, shuffled, at a lower
//! learning rate for a fixed number of steps. The manifest layout is
//! described by `schema/manifest.schema.json`.

use std::path::Path;

use anyhow::{bail, Result};
use fcgen_core::{mark_span, normalize_comment, ResolvedSpan, Sample};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::io::{self, OutputDir};

pub const BATCH_SIZE: u32 = 8;
pub const OPTIMIZER: &str = "adam";
pub const GRADIENT_CLIP_NORM: f64 = 1.0;
pub const BASE_LEARNING_RATE: f64 = 1e-5;
pub const FINAL_LEARNING_RATE: f64 = 1e-6;
pub const FINAL_MAX_STEPS: u32 = 4000;
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub source: String,
    pub target: String,
}

/// Marked source and normalized target, or `None` for an uncommented sample.
pub fn training_pair(sample: &Sample, span: ResolvedSpan) -> Option<TrainingPair> {
    let comment = sample.comment.as_deref()?;
    Some(TrainingPair { source: mark_span(sample, span).to_string(), target: normalize_comment(comment) })
}

/// Values the trainer needs but that have no fixed setting here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub epochs: [u32; 3],
    pub eval_every_steps: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub stage: u8,
    /// Checkpoint the stage starts from: `null` for the pretrained model,
    /// otherwise the best checkpoint of the named stage.
    pub init_from: Option<String>,
    pub data_files: Vec<DataFile>,
    pub hyperparameters: Hyperparameters,
    pub eval: EvalSpec,
    /// Seed used to shuffle the merged data; `null` when nothing was shuffled.
    pub shuffle_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataFile {
    /// `initial`, `augmented` or `merged`.
    pub role: String,
    /// Path relative to the manifest.
    pub path: String,
    pub examples: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparameters {
    pub batch_size: u32,
    pub optimizer: String,
    pub gradient_clip_norm: f64,
    pub learning_rate: f64,
    pub epochs: u32,
    pub max_steps: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSpec {
    pub metric: String,
    pub split: String,
    /// Dev pairs file relative to the manifest, when one was supplied.
    pub file: Option<String>,
    pub every_steps: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EmitSummary {
    pub initial: usize,
    pub augmented: usize,
    pub merged: usize,
    pub dev: Option<usize>,
    pub files: Vec<String>,
}

/// Writes `stage{1,2,3}.json` and their data files under `subdir` of `out`.
/// Output depends only on the arguments, so re-running with the same seed
/// reproduces every byte.
pub fn emit_manifests(
    out: &OutputDir,
    subdir: &str,
    initial: &[TrainingPair],
    augmented: &[TrainingPair],
    dev: Option<&[TrainingPair]>,
    schedule: Schedule,
    shuffle_seed: u64,
) -> Result<EmitSummary> {
    if initial.is_empty() {
        bail!("initial corpus has no training pairs");
    }
    if augmented.is_empty() {
        bail!("augmented corpus has no training pairs");
    }
    if schedule.epochs.contains(&0) || schedule.eval_every_steps == 0 {
        bail!("epochs and eval cadence must be positive");
    }

    let mut merged: Vec<TrainingPair> = initial.iter().chain(augmented).cloned().collect();
    merged.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));

    let mut files = Vec::new();
    let mut write = |name: &str, pairs: &[TrainingPair]| -> Result<DataFile> {
        let path = out.path(&format!("{subdir}/{name}"))?;
        io::write_jsonl(&path, pairs)?;
        files.push(format!("{subdir}/{name}"));
        Ok(DataFile { role: String::new(), path: name.to_string(), examples: pairs.len(), sha256: io::sha256_file(&path)? })
    };
    let with_role = |mut f: DataFile, role: &str| {
        f.role = role.to_string();
        f
    };
    let initial_file = with_role(write("initial.jsonl", initial)?, "initial");
    let augmented_file = with_role(write("augmented.jsonl", augmented)?, "augmented");
    let merged_file = with_role(write("merged.jsonl", &merged)?, "merged");
    let dev_file = match dev {
        Some(d) => Some(write("dev.jsonl", d)?.path),
        None => None,
    };

    let eval = EvalSpec {
        metric: "bleu".into(),
        split: "dev".into(),
        file: dev_file,
        every_steps: schedule.eval_every_steps,
    };
    let hyper = |lr: f64, epochs: u32, max_steps: Option<u32>| Hyperparameters {
        batch_size: BATCH_SIZE,
        optimizer: OPTIMIZER.into(),
        gradient_clip_norm: GRADIENT_CLIP_NORM,
        learning_rate: lr,
        epochs,
        max_steps,
    };
    let manifests = [
        Manifest {
            version: MANIFEST_VERSION,
            stage: 1,
            init_from: None,
            data_files: vec![initial_file],
            hyperparameters: hyper(BASE_LEARNING_RATE, schedule.epochs[0], None),
            eval: eval.clone(),
            shuffle_seed: None,
        },
        Manifest {
            version: MANIFEST_VERSION,
            stage: 2,
            init_from: Some("stage1".into()),
            data_files: vec![augmented_file],
            hyperparameters: hyper(BASE_LEARNING_RATE, schedule.epochs[1], None),
            eval: eval.clone(),
            shuffle_seed: None,
        },
        Manifest {
            version: MANIFEST_VERSION,
            stage: 3,
            init_from: Some("stage2".into()),
            data_files: vec![merged_file],
            hyperparameters: hyper(FINAL_LEARNING_RATE, schedule.epochs[2], Some(FINAL_MAX_STEPS)),
            eval,
            shuffle_seed: Some(shuffle_seed),
        },
    ];
    for m in &manifests {
        let rel = format!("{subdir}/stage{}.json", m.stage);
        io::write_json(&out.path(&rel)?, m)?;
        files.push(rel);
    }
    Ok(EmitSummary {
        initial: initial.len(),
        augmented: augmented.len(),
        merged: merged.len(),
        dev: dev.map(<[_]>::len),
        files,
    })
}

/// Reads a manifest back, rejecting unknown fields.
pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
