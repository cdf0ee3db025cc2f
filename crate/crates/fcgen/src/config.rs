//! Run configuration: a JSON file whose fields can each be overridden by a
//! command-line flag of the same name.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use fcgen_core::augment::{DEFAULT_GROUP_SKIP, DEFAULT_PER_SAMPLE_MAX, DEFAULT_PER_SAMPLE_MIN};
use fcgen_core::Convention;
use serde::{Deserialize, Serialize};

use crate::augmentation::AugmentSettings;
use crate::genclient::{self, HttpConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// Parses of the train file, one block per line in the same order.
    pub conllu: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub span_convention_override: Option<Convention>,
    pub endpoint: Option<String>,
    pub max_new_tokens: usize,
    pub temperature: f64,
    pub timeout_secs: u64,
    pub retries: u32,
    pub parallelism: usize,
    pub group_skip: usize,
    pub per_sample_min: usize,
    pub per_sample_max: usize,
    pub top_up_rounds: usize,
    pub generation_seed: u64,
    pub shuffle_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train: None,
            dev: None,
            test: None,
            conllu: None,
            out_dir: PathBuf::from("out"),
            span_convention_override: None,
            endpoint: None,
            max_new_tokens: genclient::DEFAULT_MAX_NEW_TOKENS,
            temperature: genclient::DEFAULT_TEMPERATURE,
            timeout_secs: genclient::DEFAULT_TIMEOUT_SECS,
            retries: genclient::DEFAULT_RETRIES,
            parallelism: genclient::DEFAULT_PARALLELISM,
            group_skip: DEFAULT_GROUP_SKIP,
            per_sample_min: DEFAULT_PER_SAMPLE_MIN,
            per_sample_max: DEFAULT_PER_SAMPLE_MAX,
            top_up_rounds: 3,
            generation_seed: 0,
            shuffle_seed: 0,
        }
    }
}

/// Flags mirroring [`RunConfig`]. Any flag given wins over the file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Training split TSV
    #[arg(long, global = true)]
    pub train: Option<PathBuf>,
    /// Development split TSV
    #[arg(long, global = true)]
    pub dev: Option<PathBuf>,
    /// Test split TSV (sentence and span only)
    #[arg(long, global = true)]
    pub test: Option<PathBuf>,
    /// CoNLL-U parses, one block per line of the split being processed
    #[arg(long, global = true)]
    pub conllu: Option<PathBuf>,
    /// Directory all outputs are written under
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// zero-based-exclusive or one-based-inclusive
    #[arg(long, global = true)]
    pub span_convention_override: Option<Convention>,
    /// Generation service root URL (falls back to $FCGEN_ENDPOINT)
    #[arg(long, global = true)]
    pub endpoint: Option<String>,
    /// Word cap for each generated continuation
    #[arg(long, global = true)]
    pub max_new_tokens: Option<usize>,
    /// Sampling temperature sent to the generator
    #[arg(long, global = true)]
    pub temperature: Option<f64>,
    /// Per-request timeout
    #[arg(long, global = true)]
    pub timeout_secs: Option<u64>,
    /// Retries on connection errors, 429 and 5xx
    #[arg(long, global = true)]
    pub retries: Option<u32>,
    /// Requests in flight at once
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,
    /// Skip samples whose comment signature group has at least this many members
    #[arg(long, global = true)]
    pub group_skip: Option<usize>,
    /// Accepted continuations wanted per sample
    #[arg(long, global = true)]
    pub per_sample_min: Option<usize>,
    /// Accepted continuations kept per sample
    #[arg(long, global = true)]
    pub per_sample_max: Option<usize>,
    /// Extra requests for samples still below the minimum
    #[arg(long, global = true)]
    pub top_up_rounds: Option<usize>,
    /// Base seed for generation requests
    #[arg(long, global = true)]
    pub generation_seed: Option<u64>,
    /// Seed for shuffling the merged stage-3 data
    #[arg(long, global = true)]
    pub shuffle_seed: Option<u64>,
}

macro_rules! override_fields {
    ($cfg:ident, $args:ident; opt: $($o:ident),*; val: $($v:ident),*) => {
        $( if $args.$o.is_some() { $cfg.$o = $args.$o.clone(); } )*
        $( if let Some(x) = &$args.$v { $cfg.$v = x.clone(); } )*
    };
}

impl ConfigArgs {
    /// Loads the config file (if any) and applies the flags on top.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        let a = self;
        override_fields!(cfg, a;
            opt: train, dev, test, conllu, span_convention_override, endpoint;
            val: out_dir, max_new_tokens, temperature, timeout_secs, retries, parallelism,
                 group_skip, per_sample_min, per_sample_max, top_up_rounds, generation_seed, shuffle_seed);
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("group_skip", self.group_skip),
            ("per_sample_min", self.per_sample_min),
            ("per_sample_max", self.per_sample_max),
            ("parallelism", self.parallelism),
            ("max_new_tokens", self.max_new_tokens),
        ] {
            if v == 0 {
                bail!("{name} must be positive");
            }
        }
        if self.timeout_secs == 0 {
            bail!("timeout_secs must be positive");
        }
        if self.per_sample_min > self.per_sample_max {
            bail!("per_sample_min {} exceeds per_sample_max {}", self.per_sample_min, self.per_sample_max);
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            bail!("temperature must be a non-negative number");
        }
        for (name, p) in self.inputs() {
            if !p.is_file() {
                bail!("{name} input {} does not exist", p.display());
            }
        }
        Ok(())
    }

    /// Configured input files with their field names.
    pub fn inputs(&self) -> Vec<(&'static str, &Path)> {
        [("train", &self.train), ("dev", &self.dev), ("test", &self.test), ("conllu", &self.conllu)]
            .into_iter()
            .filter_map(|(n, p)| p.as_deref().map(|p| (n, p)))
            .collect()
    }

    pub fn augment_settings(&self) -> AugmentSettings {
        AugmentSettings {
            group_skip: self.group_skip,
            per_sample_min: self.per_sample_min,
            per_sample_max: self.per_sample_max,
            top_up_rounds: self.top_up_rounds,
            max_new_tokens: self.max_new_tokens,
            temperature: self.temperature,
            seed: self.generation_seed,
            parallelism: self.parallelism,
        }
    }

    pub fn http_config(&self) -> HttpConfig {
        HttpConfig {
            timeout: std::time::Duration::from_secs(self.timeout_secs),
            retries: self.retries,
            ..HttpConfig::default()
        }
    }

    /// Endpoint from flag or file, else from the environment.
    pub fn endpoint(&self) -> Option<String> {
        self.endpoint.clone().or_else(|| std::env::var(genclient::ENDPOINT_ENV).ok().filter(|s| !s.is_empty()))
    }
}
