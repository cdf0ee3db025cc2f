//! Reading and writing the on-disk formats: corpus TSV, JSON lines, id-keyed
//! TSV side files and CoNLL-U parses aligned to a corpus.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Component, Path, PathBuf};

use anyhow::{bail, Context, Result};
use fcgen_core::syntax::parse_conllu_document;
use fcgen_core::{resolve_span_with, Convention, DepGraph, ResolvedSpan, Sample};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// One line of a rejects report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub line_no: usize,
    pub reason: String,
}

/// A corpus record keyed by its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub id: usize,
    pub sample: Sample,
}

/// A record whose span was mapped onto tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedRecord {
    pub id: usize,
    pub sample: Sample,
    pub span: ResolvedSpan,
}

#[derive(Debug, Default)]
pub struct Corpus {
    pub records: Vec<Record>,
    /// Lines that did not parse, in file order.
    pub rejects: Vec<Reject>,
    /// Raw lines as read (without terminators), for round-trip checks.
    pub lines: Vec<String>,
}

impl Corpus {
    /// Splits records into resolved ones and span rejects. The returned
    /// rejects list also carries the parse failures, sorted by line.
    pub fn resolve(&self, forced: Option<Convention>) -> (Vec<ResolvedRecord>, Vec<Reject>) {
        let mut rejects = self.rejects.clone();
        let mut resolved = Vec::with_capacity(self.records.len());
        for rec in &self.records {
            match resolve_span_with(&rec.sample, forced) {
                Ok(span) => resolved.push(ResolvedRecord { id: rec.id, sample: rec.sample.clone(), span }),
                Err(e) => rejects.push(Reject { line_no: rec.id, reason: e.to_string() }),
            }
        }
        rejects.sort_by_key(|r| r.line_no);
        (resolved, rejects)
    }
}

/// Reads a text file into lines, dropping `\r` before each `\n`. A final
/// newline does not produce an extra empty line.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(split_lines(&text))
}

fn split_lines(text: &str) -> Vec<String> {
    if text.is_empty() {
        return Vec::new();
    }
    let body = text.strip_suffix('\n').unwrap_or(text);
    body.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l).to_string()).collect()
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let lines = read_lines(path)?;
    let mut corpus = Corpus::default();
    for (i, line) in lines.iter().enumerate() {
        match Sample::parse_line(line, i + 1) {
            Ok(sample) => corpus.records.push(Record { id: i + 1, sample }),
            Err(e) => corpus.rejects.push(Reject { line_no: e.line_no(), reason: e.to_string() }),
        }
    }
    corpus.lines = lines;
    Ok(corpus)
}

pub fn write_corpus<'a>(path: &Path, samples: impl IntoIterator<Item = &'a Sample>) -> Result<()> {
    let mut w = create(path)?;
    for s in samples {
        writeln!(w, "{}", s.write_line())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CoNLL-U document and pairs its blocks with corpus records by
/// position. Blocks that fail to parse, or whose tokens or `# text` do not
/// match the record, become rejects keyed by the record's line number.
pub fn load_parses(path: &Path, records: &[ResolvedRecord], corpus_len: usize) -> Result<(BTreeMap<usize, DepGraph>, Vec<Reject>)> {
    let doc = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let blocks = parse_conllu_document(&doc);
    if blocks.len() != corpus_len {
        bail!(
            "{} has {} parse blocks but the corpus has {} lines; parses must follow corpus order one block per line",
            path.display(),
            blocks.len(),
            corpus_len
        );
    }
    let mut graphs = BTreeMap::new();
    let mut rejects = Vec::new();
    for rec in records {
        match &blocks[rec.id - 1] {
            Err(e) => rejects.push(Reject { line_no: rec.id, reason: format!("parse: {e}") }),
            Ok(g) => {
                let words: Vec<&str> = rec.sample.text.split_whitespace().collect();
                if g.len() != words.len() || g.forms.iter().zip(&words).any(|(f, w)| f != w) {
                    rejects.push(Reject {
                        line_no: rec.id,
                        reason: format!("parse tokens do not match the sentence ({} vs {} tokens)", g.len(), words.len()),
                    });
                } else if !g.text_matches(&rec.sample.text) {
                    rejects.push(Reject { line_no: rec.id, reason: "parse `# text` differs from the sentence".into() });
                } else {
                    graphs.insert(rec.id, g.clone());
                }
            }
        }
    }
    Ok((graphs, rejects))
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Parses JSON lines, skipping blank ones. Errors name the offending line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let lines = read_lines(path)?;
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(line).with_context(|| format!("{}:{}", path.display(), i + 1))?;
        out.push(item);
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Reads `id \t value` lines. Ids must be positive integers and unique.
pub fn read_id_tsv(path: &Path) -> Result<BTreeMap<usize, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in read_lines(path)?.iter().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (id, value) = line
            .split_once('\t')
            .with_context(|| format!("{}:{}: expected `id<TAB>value`", path.display(), i + 1))?;
        let id: usize = id.trim().parse().with_context(|| format!("{}:{}: bad id {id:?}", path.display(), i + 1))?;
        if out.insert(id, value.to_string()).is_some() {
            bail!("{}:{}: duplicate id {id}", path.display(), i + 1);
        }
    }
    Ok(out)
}

pub fn write_id_tsv<'a>(path: &Path, rows: impl IntoIterator<Item = (usize, &'a str)>) -> Result<()> {
    let mut w = create(path)?;
    for (id, value) in rows {
        writeln!(w, "{id}\t{value}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
    }
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Hex SHA-256 of a file's bytes.
pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// All writes of a run go through this, so nothing lands outside `root`.
#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        OutputDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Joins a relative path below the root. Absolute paths and `..`
    /// components are refused.
    pub fn path(&self, rel: &str) -> Result<PathBuf> {
        let rel_path = Path::new(rel);
        if rel_path.components().any(|c| !matches!(c, Component::Normal(_))) {
            bail!("output path {rel:?} must stay inside {}", self.root.display());
        }
        Ok(self.root.join(rel_path))
    }
}
