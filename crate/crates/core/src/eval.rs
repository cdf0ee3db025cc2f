//! Evaluation: corpus BLEU and precision / recall / F1 with `<NO_COMMENT>`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::NO_COMMENT;

pub const BLEU_MAX_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("{hypotheses} hypotheses but {references} references")]
    LengthMismatch { hypotheses: usize, references: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("unknown label {0:?} (expected correct, incorrect or no_comment)")]
    UnknownLabel(String),
}

fn ngram_counts<'t, 'a>(tokens: &'t [&'a str], n: usize) -> BTreeMap<&'t [&'a str], usize> {
    let mut counts = BTreeMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Corpus-level BLEU-4: clipped n-gram matches and totals are summed over
/// the corpus before taking precisions, uniform weights, brevity penalty
/// from total lengths, no smoothing. Tokens are whitespace separated.
/// An order with no matches (or no n-grams at all) gives a score of 0.
pub fn corpus_bleu<H: AsRef<str>, R: AsRef<str>>(hypotheses: &[H], references: &[R]) -> Result<f64, EvalError> {
    if hypotheses.len() != references.len() {
        return Err(EvalError::LengthMismatch { hypotheses: hypotheses.len(), references: references.len() });
    }
    if hypotheses.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut matches = [0usize; BLEU_MAX_ORDER];
    let mut totals = [0usize; BLEU_MAX_ORDER];
    let (mut hyp_len, mut ref_len) = (0usize, 0usize);
    for (hyp, reference) in hypotheses.iter().zip(references) {
        let hyp: Vec<&str> = hyp.as_ref().split_whitespace().collect();
        let reference: Vec<&str> = reference.as_ref().split_whitespace().collect();
        hyp_len += hyp.len();
        ref_len += reference.len();
        for n in 1..=BLEU_MAX_ORDER {
            let ref_counts = ngram_counts(&reference, n);
            for (gram, count) in ngram_counts(&hyp, n) {
                matches[n - 1] += count.min(ref_counts.get(gram).copied().unwrap_or(0));
            }
            totals[n - 1] += hyp.len().saturating_sub(n - 1);
        }
    }
    if matches.contains(&0) {
        return Ok(0.0);
    }
    let log_precision: f64 = matches
        .iter()
        .zip(&totals)
        .map(|(&m, &t)| libm::log(m as f64 / t as f64))
        .sum::<f64>()
        / BLEU_MAX_ORDER as f64;
    let brevity = if hyp_len > ref_len {
        1.0
    } else {
        libm::exp(1.0 - ref_len as f64 / hyp_len as f64)
    };
    Ok((brevity * libm::exp(log_precision)).clamp(0.0, 1.0))
}

/// Human judgement of one system output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EvalLabel {
    Correct,
    Incorrect,
    NoComment,
}

impl EvalLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalLabel::Correct => "correct",
            EvalLabel::Incorrect => "incorrect",
            EvalLabel::NoComment => "no_comment",
        }
    }

    /// Whether this label is allowed for `output`: `NoComment` exactly when
    /// the output is the sentinel.
    pub fn consistent_with(self, output: &str) -> bool {
        (self == EvalLabel::NoComment) == (output.trim() == NO_COMMENT)
    }
}

impl fmt::Display for EvalLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EvalLabel {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "correct" => Ok(EvalLabel::Correct),
            "incorrect" => Ok(EvalLabel::Incorrect),
            "no_comment" => Ok(EvalLabel::NoComment),
            other => Err(EvalError::UnknownLabel(other.into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LabelCounts {
    pub correct: usize,
    pub incorrect: usize,
    pub no_comment: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: LabelCounts,
}

impl Prf {
    /// `<NO_COMMENT>` items are left out of the precision denominator and
    /// of both numerators. F1 is computed from the counts directly as
    /// `2C / (2C + 2I + N)`, which makes it bit-identical to precision and
    /// recall whenever `N = 0`.
    pub fn from_counts(counts: LabelCounts) -> Prf {
        let c = counts.correct as f64;
        let i = counts.incorrect as f64;
        let n = counts.no_comment as f64;
        let ratio = |num: f64, den: f64| if den == 0.0 { 0.0 } else { num / den };
        Prf {
            precision: ratio(c, c + i),
            recall: ratio(c, c + i + n),
            f1: ratio(2.0 * c, 2.0 * c + 2.0 * i + n),
            counts,
        }
    }
}

pub fn prf_scores(labels: &[EvalLabel]) -> Result<Prf, EvalError> {
    if labels.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut counts = LabelCounts::default();
    for label in labels {
        match label {
            EvalLabel::Correct => counts.correct += 1,
            EvalLabel::Incorrect => counts.incorrect += 1,
            EvalLabel::NoComment => counts.no_comment += 1,
        }
    }
    Ok(Prf::from_counts(counts))
}

/// Test items that share a sentence but differ in error span.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairGroup {
    pub text: String,
    pub ids: Vec<usize>,
    /// All outputs in the group are pairwise different.
    pub distinct: bool,
    /// Members labelled correct, when labels were supplied.
    pub correct: Option<usize>,
    /// Members with no output.
    pub missing: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairReport {
    pub groups: Vec<PairGroup>,
    pub items: usize,
    pub distinct_groups: usize,
    pub correct_items: Option<usize>,
}

/// Groups items by identical sentence text and, for every group of two or
/// more, checks whether the system produced a different output for each.
/// Groups are ordered by their smallest id.
pub fn paired_span_report<T: AsRef<str>>(
    items: &[(usize, T)],
    outputs: &BTreeMap<usize, String>,
    labels: Option<&BTreeMap<usize, EvalLabel>>,
) -> PairReport {
    let mut by_text: BTreeMap<Vec<&str>, Vec<usize>> = BTreeMap::new();
    for (id, text) in items {
        by_text.entry(text.as_ref().split_whitespace().collect()).or_default().push(*id);
    }
    let mut groups: Vec<PairGroup> = by_text
        .into_iter()
        .filter(|(_, ids)| ids.len() >= 2)
        .map(|(words, mut ids)| {
            ids.sort_unstable();
            let missing: Vec<usize> = ids.iter().copied().filter(|id| !outputs.contains_key(id)).collect();
            let mut seen: Vec<Vec<&str>> = Vec::new();
            let mut distinct = true;
            for id in &ids {
                if let Some(out) = outputs.get(id) {
                    let norm: Vec<&str> = out.split_whitespace().collect();
                    if seen.contains(&norm) {
                        distinct = false;
                    }
                    seen.push(norm);
                }
            }
            let correct = labels.map(|l| ids.iter().filter(|id| l.get(id) == Some(&EvalLabel::Correct)).count());
            PairGroup { text: words.join(" "), ids, distinct, correct, missing }
        })
        .collect();
    groups.sort_by_key(|g| g.ids[0]);
    PairReport {
        items: groups.iter().map(|g| g.ids.len()).sum(),
        distinct_groups: groups.iter().filter(|g| g.distinct).count(),
        correct_items: labels.map(|_| groups.iter().filter_map(|g| g.correct).sum()),
        groups,
    }
}
