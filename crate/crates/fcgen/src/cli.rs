//! The `fcgen` command line.
//!
//! Every subcommand reads its inputs, writes under the output directory
//! and finishes with `meta/<command>.json`. Exit status is 0 on success,
//! 1 when inputs fail validation and 2 for I/O or endpoint failures.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fcgen_core::repair::{harvest_terms, RepairOutcome};
use fcgen_core::{
    corpus_bleu, normalize_comment, paired_span_report, prf_scores, repair_comment, Convention, EvalLabel, TermLexicon,
};
use serde::Serialize;
use serde_json::json;

use crate::augmentation::{self, Plan, PlanReport};
use crate::config::{ConfigArgs, RunConfig};
use crate::exchange::{self, ImportError};
use crate::genclient::{Generator, HttpGenerator, StubGenerator};
use crate::io::{self, Corpus, OutputDir, Reject, ResolvedRecord};
use crate::meta::RunMetadata;
use crate::trainprep::{self, Schedule, TrainingPair};

#[derive(Debug, Parser)]
#[command(name = "fcgen", version, about = "Feedback comment generation pipeline")]
pub struct Cli {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse the corpus files, check spans and parses, write a rejects report
    Validate,
    /// Write marked-source / normalized-target pairs for each split
    Preprocess,
    /// Clip sentences after the last word connected to the error span
    Clip {
        /// Print the prompt for this sample (1-based line number) only
        #[arg(long)]
        sample_id: Option<usize>,
    },
    /// Select samples for augmentation and export their prompts
    AugmentPlan,
    /// Generate continuations through the endpoint and assemble the augmented corpus
    AugmentRun {
        /// Use the built-in deterministic generator instead of HTTP
        #[arg(long)]
        stub_generator: bool,
    },
    /// Assemble the augmented corpus from an offline continuations file
    AugmentImport {
        #[arg(long)]
        continuations: PathBuf,
    },
    /// Collect grammar terms from train (and dev) comments
    BuildLexicon,
    /// Restore missing opening brackets in generated comments
    Repair {
        /// TSV of `id<TAB>generated comment`; ids are test line numbers
        #[arg(long)]
        outputs: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
    },
    /// Write training data files and the three stage manifests
    EmitTrain {
        /// Augmented corpus TSV (zero-based exclusive spans)
        #[arg(long)]
        augmented: PathBuf,
        /// Epochs for stages 1, 2 and 3, e.g. `3,1,1`
        #[arg(long, value_delimiter = ',', required = true)]
        epochs: Vec<u32>,
        /// Steps between dev evaluations
        #[arg(long)]
        eval_every: u32,
    },
    /// Corpus BLEU of generated comments against the reference comments
    EvalBleu {
        /// TSV of `id<TAB>generated comment`
        #[arg(long)]
        outputs: PathBuf,
        /// Corpus TSV holding the reference comments (defaults to --dev)
        #[arg(long)]
        references: Option<PathBuf>,
    },
    /// Precision, recall and F1 from human judgment labels
    EvalPrf {
        /// TSV of `id<TAB>correct|incorrect|no_comment`
        #[arg(long)]
        labels: PathBuf,
        /// Optional outputs file, checked against `no_comment` labels
        #[arg(long)]
        outputs: Option<PathBuf>,
    },
    /// Compare outputs for test items that share a sentence
    ReportPairs {
        #[arg(long)]
        outputs: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Preprocess => "preprocess",
            Command::Clip { .. } => "clip",
            Command::AugmentPlan => "augment-plan",
            Command::AugmentRun { .. } => "augment-run",
            Command::AugmentImport { .. } => "augment-import",
            Command::BuildLexicon => "build-lexicon",
            Command::Repair { .. } => "repair",
            Command::EmitTrain { .. } => "emit-train",
            Command::EvalBleu { .. } => "eval-bleu",
            Command::EvalPrf { .. } => "eval-prf",
            Command::ReportPairs { .. } => "report-pairs",
        }
    }
}

/// Why a command failed, which decides the exit status.
#[derive(Debug)]
pub enum Failure {
    Validation(anyhow::Error),
    Io(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Io(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(e) => write!(f, "validation error: {e:#}"),
            Failure::Io(e) => write!(f, "error: {e:#}"),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn invalid(msg: impl fmt::Display) -> Failure {
    Failure::Validation(anyhow::anyhow!("{msg}"))
}

trait IoContext<T> {
    fn io(self) -> Outcome<T>;
}

impl<T> IoContext<T> for anyhow::Result<T> {
    fn io(self) -> Outcome<T> {
        self.map_err(Failure::Io)
    }
}

pub fn main_with_args<I, S>(args: I) -> ExitCode
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("fcgen {}: {f}", cli.command.name());
            ExitCode::from(f.exit_code())
        }
    }
}

pub fn run(cli: &Cli) -> Outcome<()> {
    let cfg = cli.config.resolve().map_err(Failure::Validation)?;
    cfg.validate().map_err(Failure::Validation)?;
    let out = OutputDir::new(&cfg.out_dir);
    let mut meta = RunMetadata::new(cli.command.name(), &cfg);
    let ctx = Ctx { cfg: &cfg, out: &out };
    match &cli.command {
        Command::Validate => ctx.validate(&mut meta),
        Command::Preprocess => ctx.preprocess(&mut meta),
        Command::Clip { sample_id } => ctx.clip(*sample_id, &mut meta),
        Command::AugmentPlan => ctx.augment_plan(&mut meta),
        Command::AugmentRun { stub_generator } => ctx.augment_run(*stub_generator, &mut meta),
        Command::AugmentImport { continuations } => ctx.augment_import(continuations, &mut meta),
        Command::BuildLexicon => ctx.build_lexicon(&mut meta),
        Command::Repair { outputs, lexicon } => ctx.repair(outputs, lexicon, &mut meta),
        Command::EmitTrain { augmented, epochs, eval_every } => ctx.emit_train(augmented, epochs, *eval_every, &mut meta),
        Command::EvalBleu { outputs, references } => ctx.eval_bleu(outputs, references.as_deref(), &mut meta),
        Command::EvalPrf { labels, outputs } => ctx.eval_prf(labels, outputs.as_deref(), &mut meta),
        Command::ReportPairs { outputs, labels } => ctx.report_pairs(outputs, labels.as_deref(), &mut meta),
    }?;
    meta.write(&out).io()?;
    Ok(())
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    out: &'a OutputDir,
}

/// A corpus file after parsing and span resolution.
struct Loaded {
    corpus: Corpus,
    resolved: Vec<ResolvedRecord>,
    rejects: Vec<Reject>,
}

#[derive(Serialize)]
struct FileSummary {
    path: String,
    lines: usize,
    parsed: usize,
    resolved: usize,
    rejected: usize,
    conventions: BTreeMap<String, usize>,
    round_trip_mismatches: Vec<usize>,
}

impl Ctx<'_> {
    fn require<'p>(&self, name: &str, p: &'p Option<PathBuf>) -> Outcome<&'p Path> {
        p.as_deref().ok_or_else(|| invalid(format!("--{name} is required for this command")))
    }

    fn load(&self, path: &Path, meta: &mut RunMetadata) -> Outcome<Loaded> {
        self.load_with(path, self.cfg.span_convention_override, meta)
    }

    fn load_with(&self, path: &Path, forced: Option<Convention>, meta: &mut RunMetadata) -> Outcome<Loaded> {
        meta.input(path).io()?;
        let corpus = io::load_corpus(path).io()?;
        let (resolved, rejects) = corpus.resolve(forced);
        Ok(Loaded { corpus, resolved, rejects })
    }

    fn write_jsonl<T: Serialize>(&self, rel: &str, items: impl IntoIterator<Item = T>, meta: &mut RunMetadata) -> Outcome<()> {
        io::write_jsonl(&self.out.path(rel).io()?, items).io()?;
        meta.output(rel);
        Ok(())
    }

    fn write_json<T: Serialize>(&self, rel: &str, value: &T, meta: &mut RunMetadata) -> Outcome<()> {
        io::write_json(&self.out.path(rel).io()?, value).io()?;
        meta.output(rel);
        Ok(())
    }

    fn validate(&self, meta: &mut RunMetadata) -> Outcome<()> {
        let train = self.require("train", &self.cfg.train)?;
        let mut summaries = Vec::new();
        let mut malformed = 0;
        for (split, path) in [("train", Some(train)), ("dev", self.cfg.dev.as_deref()), ("test", self.cfg.test.as_deref())] {
            let Some(path) = path else { continue };
            let loaded = self.load(path, meta)?;
            let mut rejects = loaded.rejects.clone();
            if split == "train" {
                if let Some(conllu) = &self.cfg.conllu {
                    meta.input(conllu).io()?;
                    let (_, parse_rejects) = io::load_parses(conllu, &loaded.resolved, loaded.corpus.lines.len())
                        .map_err(Failure::Validation)?;
                    rejects.extend(parse_rejects);
                    rejects.sort_by_key(|r| r.line_no);
                }
            }
            malformed += loaded.corpus.rejects.len();
            let round_trip_mismatches: Vec<usize> = loaded
                .corpus
                .records
                .iter()
                .filter(|r| r.sample.write_line() != loaded.corpus.lines[r.id - 1])
                .map(|r| r.id)
                .collect();
            malformed += round_trip_mismatches.len();
            let mut conventions = BTreeMap::new();
            for r in &loaded.resolved {
                *conventions.entry(r.span.convention.to_string()).or_insert(0) += 1;
            }
            self.write_jsonl(&format!("validate/{split}.rejects.jsonl"), &rejects, meta)?;
            println!(
                "{split}: {} lines, {} resolved, {} rejected",
                loaded.corpus.lines.len(),
                loaded.resolved.len(),
                rejects.len()
            );
            summaries.push(FileSummary {
                path: path.display().to_string(),
                lines: loaded.corpus.lines.len(),
                parsed: loaded.corpus.records.len(),
                resolved: loaded.resolved.len(),
                rejected: rejects.len(),
                conventions,
                round_trip_mismatches,
            });
        }
        self.write_json("validate/summary.json", &summaries, meta)?;
        meta.details = json!({ "malformed_lines": malformed });
        if malformed > 0 {
            meta.write(self.out).io()?;
            return Err(invalid(format!("{malformed} malformed lines; see validate/*.rejects.jsonl")));
        }
        Ok(())
    }

    fn preprocess(&self, meta: &mut RunMetadata) -> Outcome<()> {
        let mut counts = BTreeMap::new();
        for (split, path) in [("train", &self.cfg.train), ("dev", &self.cfg.dev), ("test", &self.cfg.test)] {
            let Some(path) = path else { continue };
            let loaded = self.load(path, meta)?;
            if split == "test" {
                let items: Vec<_> = loaded
                    .resolved
                    .iter()
                    .map(|r| json!({ "id": r.id, "source": fcgen_core::mark_span(&r.sample, r.span).to_string() }))
                    .collect();
                counts.insert(split, items.len());
                self.write_jsonl("preprocess/test.jsonl", items, meta)?;
            } else {
                let pairs: Vec<TrainingPair> =
                    loaded.resolved.iter().filter_map(|r| trainprep::training_pair(&r.sample, r.span)).collect();
                counts.insert(split, pairs.len());
                self.write_jsonl(&format!("preprocess/{split}.jsonl"), &pairs, meta)?;
            }
            self.write_jsonl(&format!("preprocess/{split}.rejects.jsonl"), &loaded.rejects, meta)?;
        }
        if counts.is_empty() {
            return Err(invalid("no input files given (--train, --dev or --test)"));
        }
        println!("{}", serde_json::to_string(&counts).expect("counts serialize"));
        meta.details = json!({ "pairs": counts });
        Ok(())
    }

    /// Train records with their aligned parses.
    fn parsed_train(&self, meta: &mut RunMetadata) -> Outcome<(Loaded, BTreeMap<usize, fcgen_core::DepGraph>, Vec<Reject>)> {
        let train = self.require("train", &self.cfg.train)?;
        let conllu = self.require("conllu", &self.cfg.conllu)?;
        let loaded = self.load(train, meta)?;
        meta.input(conllu).io()?;
        let (graphs, parse_rejects) =
            io::load_parses(conllu, &loaded.resolved, loaded.corpus.lines.len()).map_err(Failure::Validation)?;
        Ok((loaded, graphs, parse_rejects))
    }

    fn clip(&self, sample_id: Option<usize>, meta: &mut RunMetadata) -> Outcome<()> {
        let (loaded, graphs, parse_rejects) = self.parsed_train(meta)?;
        let clip_one = |r: &ResolvedRecord| -> Result<fcgen_core::ClipResult, String> {
            let g = graphs.get(&r.id).ok_or_else(|| "no aligned dependency parse".to_string())?;
            let words: Vec<&str> = r.sample.text.split_whitespace().collect();
            fcgen_core::clip(&words, g, r.span).map_err(|e| e.to_string())
        };
        if let Some(id) = sample_id {
            let Some(rec) = loaded.resolved.iter().find(|r| r.id == id) else {
                let why = loaded
                    .rejects
                    .iter()
                    .chain(&parse_rejects)
                    .find(|r| r.line_no == id)
                    .map(|r| r.reason.clone())
                    .unwrap_or_else(|| "no such line".into());
                return Err(invalid(format!("sample {id}: {why}")));
            };
            let c = clip_one(rec).map_err(|e| invalid(format!("sample {id}: {e}")))?;
            println!("{}", c.prompt());
            meta.details = json!({ "sample_id": id, "prompt": c.prompt(), "cut_index": c.cut_index, "reason": c.reason });
            return Ok(());
        }
        let mut rows = Vec::new();
        let mut rejects = parse_rejects;
        for r in &loaded.resolved {
            if !graphs.contains_key(&r.id) {
                continue;
            }
            match clip_one(r) {
                Ok(c) => rows.push(json!({ "id": r.id, "prompt": c.prompt(), "cut_index": c.cut_index, "reason": c.reason })),
                Err(e) => rejects.push(Reject { line_no: r.id, reason: e }),
            }
        }
        rejects.sort_by_key(|r| r.line_no);
        println!("clipped {} samples, {} rejected", rows.len(), rejects.len());
        meta.details = json!({ "clipped": rows.len(), "rejected": rejects.len() });
        self.write_jsonl("clip/clips.jsonl", rows, meta)?;
        self.write_jsonl("clip/rejects.jsonl", &rejects, meta)?;
        Ok(())
    }

    fn plans(&self, meta: &mut RunMetadata) -> Outcome<(Vec<Plan>, PlanReport)> {
        let (loaded, graphs, parse_rejects) = self.parsed_train(meta)?;
        let (plans, mut report) = augmentation::build_plans(&loaded.resolved, &graphs, self.cfg.group_skip);
        // unplanned rows for missing parses are explained better by the parse rejects
        let explained: BTreeMap<usize, &Reject> = parse_rejects.iter().map(|r| (r.line_no, r)).collect();
        for u in &mut report.unplanned {
            if let Some(r) = explained.get(&u.line_no) {
                u.reason = r.reason.clone();
            }
        }
        Ok((plans, report))
    }

    fn augment_plan(&self, meta: &mut RunMetadata) -> Outcome<()> {
        let (plans, report) = self.plans(meta)?;
        let prompts = augmentation::prompt_records(&plans, &self.cfg.augment_settings());
        let rel = "augment/prompts.jsonl";
        exchange::export_prompts(&self.out.path(rel).io()?, &prompts).io()?;
        meta.output(rel);
        self.write_json("augment/plan.json", &report, meta)?;
        println!("augment {} / skip {} of {} commented samples; {} prompts", report.augment, report.skip, report.records, prompts.len());
        meta.details = json!({ "augment": report.augment, "skip": report.skip, "prompts": prompts.len() });
        Ok(())
    }

    fn augment_run(&self, stub: bool, meta: &mut RunMetadata) -> Outcome<()> {
        let (plans, report) = self.plans(meta)?;
        let settings = self.cfg.augment_settings();
        let generator: Box<dyn Generator> = if stub {
            Box::new(StubGenerator::default())
        } else {
            let endpoint = self
                .cfg
                .endpoint()
                .ok_or_else(|| invalid("no endpoint: pass --endpoint, set it in the config or export FCGEN_ENDPOINT"))?;
            Box::new(HttpGenerator::new(&endpoint, self.cfg.http_config()))
        };
        let live = augmentation::collect_live(&plans, generator.as_ref(), &settings);
        if let Some((id, e)) = live.failures.first() {
            return Err(Failure::Io(anyhow::anyhow!(
                "generation failed for {} samples; first: sample {id}: {e}",
                live.failures.len()
            )));
        }
        exchange::write_continuations(&self.out.path("augment/continuations.jsonl").io()?, &live.responses).io()?;
        meta.output("augment/continuations.jsonl");
        let extra = json!({ "mode": if stub { "stub" } else { "http" }, "requests": live.requests });
        self.finish_augment(&plans, &report, &live.responses, live.model_ids, &[], extra, meta)
    }

    fn augment_import(&self, path: &Path, meta: &mut RunMetadata) -> Outcome<()> {
        let (plans, report) = self.plans(meta)?;
        meta.input(path).io()?;
        let expected: BTreeSet<usize> = plans.iter().map(|p| p.id).collect();
        let joined = exchange::import_continuations(path, &expected).io()?.map_err(|e: ImportError| invalid(e))?;
        self.write_json("augment/missing.json", &joined.missing, meta)?;
        if !joined.missing.is_empty() {
            log::warn!("{} exported prompts have no continuations", joined.missing.len());
        }
        let extra = json!({ "mode": "import", "missing": joined.missing.len() });
        self.finish_augment(&plans, &report, &joined.responses, Vec::new(), &joined.missing, extra, meta)
    }

    #[allow(clippy::too_many_arguments)]
    fn finish_augment(
        &self,
        plans: &[Plan],
        report: &PlanReport,
        responses: &BTreeMap<usize, Vec<String>>,
        model_ids: Vec<String>,
        missing: &[usize],
        extra: serde_json::Value,
        meta: &mut RunMetadata,
    ) -> Outcome<()> {
        let settings = self.cfg.augment_settings();
        let assembled = augmentation::assemble_all(plans, responses, &settings);
        let samples: Vec<_> = assembled.samples.iter().map(|s| s.to_sample()).collect();
        io::write_corpus(&self.out.path("augment/augmented.tsv").io()?, &samples).io()?;
        meta.output("augment/augmented.tsv");
        let sidecar = json!({
            "file": "augmented.tsv",
            "span_convention": Convention::ZeroBasedExclusive,
            "model_ids": model_ids,
            "settings": settings,
            "plan": report,
            "samples": samples.len(),
            "base_ids": assembled.samples.iter().map(|s| s.base_id).collect::<Vec<_>>(),
            "underfilled": assembled.underfilled,
            "missing": missing,
            "run": extra,
        });
        self.write_json("augment/augmented.json", &sidecar, meta)?;
        println!(
            "{} augmented samples from {} plans ({} under-filled)",
            samples.len(),
            plans.len(),
            assembled.underfilled.len()
        );
        meta.details = json!({ "plans": plans.len(), "samples": samples.len(), "underfilled": assembled.underfilled.len() });
        Ok(())
    }

    fn build_lexicon(&self, meta: &mut RunMetadata) -> Outcome<()> {
        let train = self.require("train", &self.cfg.train)?;
        let mut comments = Vec::new();
        for path in [Some(train), self.cfg.dev.as_deref()].into_iter().flatten() {
            let loaded = self.load(path, meta)?;
            comments.extend(loaded.corpus.records.into_iter().filter_map(|r| r.sample.comment));
        }
        let normalized: Vec<String> = comments.iter().map(|c| normalize_comment(c)).collect();
        let (lex, unbalanced) = TermLexicon::build(&normalized);
        let rel = "lexicon.txt";
        io::write_text(&self.out.path(rel).io()?, &lex.to_text()).io()?;
        meta.output(rel);
        let harvested: usize = normalized.iter().map(|c| harvest_terms(c).terms.len()).sum();
        println!("{} distinct terms from {} comments", lex.len(), comments.len());
        meta.details = json!({ "terms": lex.len(), "occurrences": harvested, "unbalanced_comments": unbalanced });
        Ok(())
    }

    fn repair(&self, outputs: &Path, lexicon: &Path, meta: &mut RunMetadata) -> Outcome<()> {
        let test = self.require("test", &self.cfg.test)?;
        let learner = self.load(test, meta)?;
        meta.input(outputs).io()?;
        meta.input(lexicon).io()?;
        let generated = io::read_id_tsv(outputs).map_err(Failure::Validation)?;
        let lex = TermLexicon::from_text(&std::fs::read_to_string(lexicon).map_err(anyhow::Error::from).io()?);
        let by_id: BTreeMap<usize, &str> = learner.corpus.records.iter().map(|r| (r.id, r.sample.text.as_str())).collect();
        let mut repaired = Vec::new();
        let mut report = Vec::new();
        let (mut fixed, mut unresolved) = (0, 0);
        for (id, text) in &generated {
            let sentence = by_id.get(id).ok_or_else(|| invalid(format!("output id {id} is not a line of {}", test.display())))?;
            let words: Vec<&str> = sentence.split_whitespace().collect();
            let RepairOutcome { text, fixes, unresolved: left } = repair_comment(text, &words, &lex);
            fixed += fixes.len();
            unresolved += left.len();
            report.push(json!({ "id": id, "fixes": fixes, "unresolved": left }));
            repaired.push((*id, text));
        }
        let rel = "repair/repaired.tsv";
        io::write_id_tsv(&self.out.path(rel).io()?, repaired.iter().map(|(i, t)| (*i, t.as_str()))).io()?;
        meta.output(rel);
        self.write_jsonl("repair/report.jsonl", report, meta)?;
        println!("{} comments, {fixed} brackets inserted, {unresolved} closers unresolved", generated.len());
        meta.details = json!({ "comments": generated.len(), "fixes": fixed, "unresolved": unresolved });
        Ok(())
    }

    fn emit_train(&self, augmented: &Path, epochs: &[u32], eval_every: u32, meta: &mut RunMetadata) -> Outcome<()> {
        let train = self.require("train", &self.cfg.train)?;
        let &[e1, e2, e3] = epochs else {
            return Err(invalid(format!("--epochs needs three values (one per stage), got {}", epochs.len())));
        };
        let pairs_of = |l: &Loaded| -> Vec<TrainingPair> {
            l.resolved.iter().filter_map(|r| trainprep::training_pair(&r.sample, r.span)).collect()
        };
        let initial = self.load(train, meta)?;
        let aug = self.load_with(augmented, Some(Convention::ZeroBasedExclusive), meta)?;
        if !aug.rejects.is_empty() {
            return Err(invalid(format!(
                "{} lines of {} do not resolve as zero-based spans (first: line {}: {})",
                aug.rejects.len(),
                augmented.display(),
                aug.rejects[0].line_no,
                aug.rejects[0].reason
            )));
        }
        let dev = match &self.cfg.dev {
            Some(p) => Some(pairs_of(&self.load(p, meta)?)),
            None => None,
        };
        let schedule = Schedule { epochs: [e1, e2, e3], eval_every_steps: eval_every };
        let summary = trainprep::emit_manifests(
            self.out,
            "train",
            &pairs_of(&initial),
            &pairs_of(&aug),
            dev.as_deref(),
            schedule,
            self.cfg.shuffle_seed,
        )
        .map_err(Failure::Validation)?;
        for f in &summary.files {
            meta.output(f.clone());
        }
        println!(
            "stage 1: {} pairs, stage 2: {} pairs, stage 3: {} pairs",
            summary.initial, summary.augmented, summary.merged
        );
        meta.details = serde_json::to_value(&summary).expect("summary serializes");
        Ok(())
    }

    fn eval_bleu(&self, outputs: &Path, references: Option<&Path>, meta: &mut RunMetadata) -> Outcome<()> {
        let refs_path = match references {
            Some(p) => p,
            None => self.require("dev", &self.cfg.dev)?,
        };
        let refs = self.load(refs_path, meta)?;
        meta.input(outputs).io()?;
        let hyps = io::read_id_tsv(outputs).map_err(Failure::Validation)?;
        let mut h = Vec::new();
        let mut r = Vec::new();
        let mut missing = Vec::new();
        for rec in &refs.corpus.records {
            let Some(comment) = &rec.sample.comment else { continue };
            match hyps.get(&rec.id) {
                Some(out) => {
                    h.push(normalize_comment(out));
                    r.push(normalize_comment(comment));
                }
                None => missing.push(rec.id),
            }
        }
        let known: BTreeSet<usize> = refs.corpus.records.iter().map(|r| r.id).collect();
        if let Some(extra) = hyps.keys().find(|id| !known.contains(id)) {
            return Err(invalid(format!("output id {extra} has no reference")));
        }
        if !missing.is_empty() {
            return Err(invalid(format!("{} references have no output (first id {})", missing.len(), missing[0])));
        }
        let bleu = corpus_bleu(&h, &r).map_err(invalid)?;
        println!("BLEU {bleu:.4} over {} comments", h.len());
        let report = json!({ "bleu": bleu, "items": h.len(), "aggregation": "corpus", "max_order": 4, "smoothing": "none" });
        self.write_json("eval/bleu.json", &report, meta)?;
        meta.details = report;
        Ok(())
    }

    fn read_labels(&self, path: &Path, meta: &mut RunMetadata) -> Outcome<BTreeMap<usize, EvalLabel>> {
        meta.input(path).io()?;
        io::read_id_tsv(path)
            .map_err(Failure::Validation)?
            .into_iter()
            .map(|(id, l)| l.trim().parse::<EvalLabel>().map(|l| (id, l)).map_err(|e| invalid(format!("id {id}: {e}"))))
            .collect()
    }

    fn eval_prf(&self, labels: &Path, outputs: Option<&Path>, meta: &mut RunMetadata) -> Outcome<()> {
        let labels = self.read_labels(labels, meta)?;
        if let Some(path) = outputs {
            meta.input(path).io()?;
            let outs = io::read_id_tsv(path).map_err(Failure::Validation)?;
            let bad: Vec<usize> = labels
                .iter()
                .filter(|(id, l)| outs.get(id).is_some_and(|o| !l.consistent_with(o)))
                .map(|(id, _)| *id)
                .collect();
            if !bad.is_empty() {
                return Err(invalid(format!("labels disagree with the outputs' no-comment markers for ids {bad:?}")));
            }
        }
        let values: Vec<EvalLabel> = labels.values().copied().collect();
        let prf = prf_scores(&values).map_err(invalid)?;
        println!("P {:.4} R {:.4} F1 {:.4}", prf.precision, prf.recall, prf.f1);
        self.write_json("eval/prf.json", &prf, meta)?;
        meta.details = serde_json::to_value(prf).expect("prf serializes");
        Ok(())
    }

    fn report_pairs(&self, outputs: &Path, labels: Option<&Path>, meta: &mut RunMetadata) -> Outcome<()> {
        let test = self.require("test", &self.cfg.test)?;
        let loaded = self.load(test, meta)?;
        meta.input(outputs).io()?;
        let outs = io::read_id_tsv(outputs).map_err(Failure::Validation)?;
        let labels = match labels {
            Some(p) => Some(self.read_labels(p, meta)?),
            None => None,
        };
        let items: Vec<(usize, &str)> = loaded.corpus.records.iter().map(|r| (r.id, r.sample.text.as_str())).collect();
        let report = paired_span_report(&items, &outs, labels.as_ref());
        println!(
            "{} groups ({} items); {} with distinct outputs",
            report.groups.len(),
            report.items,
            report.distinct_groups
        );
        self.write_json("eval/pairs.json", &report, meta)?;
        meta.details = json!({ "groups": report.groups.len(), "distinct_groups": report.distinct_groups });
        Ok(())
    }
}
