//! Augmentation planning and continuation filtering.
//!
//! Samples whose feedback is already well represented (the comment signature
//! occurs in many records) are left alone. The rest get new sentences made
//! of their clipped prefix plus a language-model continuation. The prefix
//! is kept verbatim, so the error span keeps its token position and the
//! original comment still applies.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::corpus::{tokenize, Convention, RawSpan, ResolvedSpan, Sample};
use crate::preprocess::{comment_tokens, mark_tokens, MarkedSentence};
use crate::syntax::ClipResult;
use crate::{CITE_CLOSE, CITE_OPEN};

/// Placeholder standing in for cited learner words in a signature.
pub const CITATION_PLACEHOLDER: &str = "<< * >>";

/// Group size at which a signature counts as well represented.
pub const DEFAULT_GROUP_SKIP: usize = 10;
pub const DEFAULT_PER_SAMPLE_MIN: usize = 8;
pub const DEFAULT_PER_SAMPLE_MAX: usize = 10;

/// A normalized comment with every `<< ... >>` citation masked.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct CommentSignature(pub String);

impl fmt::Display for CommentSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Computes the grouping key of a comment.
pub fn signature(comment: &str) -> CommentSignature {
    let tokens = comment_tokens(&comment.to_lowercase());
    let mut key: Vec<&str> = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i] == CITE_OPEN {
            if let Some(close) = tokens[i + 1..].iter().position(|t| t == CITE_CLOSE) {
                key.push(CITATION_PLACEHOLDER);
                i += close + 2;
                continue;
            }
        }
        key.push(&tokens[i]);
        i += 1;
    }
    CommentSignature(key.join(" "))
}

/// Partition of a corpus into samples to augment and samples to leave alone.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Selection {
    /// Indices into the input, ascending.
    pub augment: Vec<usize>,
    pub skip: Vec<usize>,
    pub group_sizes: BTreeMap<CommentSignature, usize>,
}

impl Selection {
    /// Number of signature groups of each size, keyed by size.
    pub fn histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for &size in self.group_sizes.values() {
            *hist.entry(size).or_insert(0) += 1;
        }
        hist
    }
}

/// Skips every sample whose signature group has at least `group_skip`
/// members and selects the rest.
pub fn select_for_augmentation<S: AsRef<str>>(comments: &[S], group_skip: usize) -> Selection {
    let signatures: Vec<CommentSignature> = comments.iter().map(|c| signature(c.as_ref())).collect();
    let mut group_sizes = BTreeMap::new();
    for sig in &signatures {
        *group_sizes.entry(sig.clone()).or_insert(0usize) += 1;
    }
    let (skip, augment): (Vec<usize>, Vec<usize>) =
        (0..signatures.len()).partition(|&i| group_sizes[&signatures[i]] >= group_skip);
    Selection { augment, skip, group_sizes }
}

fn is_edge_punct(ch: char) -> bool {
    matches!(ch, '.' | ',' | '!' | '?' | ';' | ':' | '"' | '(' | ')' | '[' | ']' | '\'')
}

/// Splits free text into corpus-style tokens: whitespace separated, with
/// leading and trailing punctuation detached. Word-internal apostrophes and
/// hyphens stay put (`don't`, `part-time`).
pub fn pretokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let chars: Vec<char> = word.chars().collect();
        let lead = chars.iter().take_while(|c| is_edge_punct(**c)).count();
        if lead == chars.len() {
            out.extend(chars.iter().map(|c| c.to_string()));
            continue;
        }
        let trail = chars.iter().rev().take_while(|c| is_edge_punct(**c)).count();
        out.extend(chars[..lead].iter().map(|c| c.to_string()));
        out.push(chars[lead..chars.len() - trail].iter().collect());
        out.extend(chars[chars.len() - trail..].iter().map(|c| c.to_string()));
    }
    out
}

fn is_terminator(ch: char) -> bool {
    matches!(ch, '.' | '!' | '?')
}

/// Filters a raw continuation down to one sentence ending.
///
/// The text is cut at the first line break and limited to `max_tokens`
/// whitespace tokens, then truncated after the first `.`, `!` or `?`.
/// Without a terminator, fragments of at least three tokens get a `.`
/// appended and shorter ones are rejected. Continuations containing angle
/// brackets or no alphanumeric character are rejected.
pub fn accept_continuation(prefix: &str, raw: &str, max_tokens: usize) -> Option<String> {
    let raw = match raw.strip_prefix(prefix) {
        Some(rest) if !prefix.is_empty() => rest,
        _ => raw,
    };
    let line = raw.split(['\n', '\r']).next().unwrap_or("");
    let limited = limit_tokens(line, max_tokens).trim();
    if limited.is_empty() {
        return None;
    }
    let accepted = match limited.char_indices().find(|(_, c)| is_terminator(*c)) {
        Some((pos, term)) => limited[..pos + term.len_utf8()].trim().to_string(),
        None if limited.split_whitespace().count() >= 3 => {
            let mut s = limited.to_string();
            s.push('.');
            s
        }
        None => return None,
    };
    if accepted.contains(['<', '>']) || !accepted.chars().any(char::is_alphanumeric) {
        return None;
    }
    Some(accepted)
}

fn limit_tokens(text: &str, max_tokens: usize) -> &str {
    let mut seen = 0;
    let mut in_token = false;
    for (i, ch) in text.char_indices() {
        if ch.is_whitespace() {
            in_token = false;
        } else if !in_token {
            if seen == max_tokens {
                return &text[..i];
            }
            seen += 1;
            in_token = true;
        }
    }
    text
}

/// A generated training sentence derived from one corpus record.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AugmentedSample {
    pub base_id: usize,
    /// Space-separated tokens: the clipped prefix followed by the
    /// pretokenized continuation.
    pub text: String,
    pub token_start: usize,
    pub token_end: usize,
    pub comment: String,
}

impl AugmentedSample {
    pub fn span(&self) -> ResolvedSpan {
        ResolvedSpan {
            token_start: self.token_start,
            token_end: self.token_end,
            convention: Convention::ZeroBasedExclusive,
        }
    }

    /// The record in corpus form with a zero-based exclusive character span.
    pub fn to_sample(&self) -> Sample {
        let tokens = tokenize(&self.text);
        let raw = self.span().to_raw(&tokens, Convention::ZeroBasedExclusive);
        Sample { text: self.text.clone(), raw_span: raw, comment: Some(self.comment.clone()) }
    }

    pub fn marked(&self) -> MarkedSentence {
        mark_tokens(self.text.split_whitespace(), self.span())
    }
}

/// Span of the base record as a zero-based raw span over `text`.
pub fn raw_span_of(text: &str, span: ResolvedSpan) -> RawSpan {
    span.to_raw(&tokenize(text), Convention::ZeroBasedExclusive)
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// 64-bit FNV-1a; used only to give assembled outputs a stable order.
pub fn stable_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Accepted continuations for one base record, deduplicated and capped.
#[derive(Debug, Clone)]
pub struct ContinuationPool {
    accepted: Vec<String>,
    seen: BTreeSet<String>,
    min: usize,
    max: usize,
}

impl ContinuationPool {
    pub fn new(min: usize, max: usize) -> Self {
        assert!(min >= 1 && min <= max, "need 1 <= min <= max, got {min}..{max}");
        ContinuationPool { accepted: Vec::new(), seen: BTreeSet::new(), min, max }
    }

    /// Adds an accepted continuation unless it duplicates an earlier one
    /// (after whitespace collapse) or the pool is full.
    pub fn offer(&mut self, continuation: &str) -> bool {
        if self.is_full() {
            return false;
        }
        let key = collapse_whitespace(continuation);
        if key.is_empty() || !self.seen.insert(key.clone()) {
            return false;
        }
        self.accepted.push(key);
        true
    }

    pub fn len(&self) -> usize {
        self.accepted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accepted.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.accepted.len() >= self.max
    }

    pub fn needs_more(&self) -> bool {
        self.accepted.len() < self.min
    }

    /// How many more continuations would fill the pool.
    pub fn remaining(&self) -> usize {
        self.max - self.accepted.len()
    }

    pub fn continuations(&self) -> &[String] {
        &self.accepted
    }

    /// Builds the augmented samples; see [`assemble`].
    pub fn assemble(&self, base_id: usize, span: ResolvedSpan, clip: &ClipResult, comment: &str) -> Vec<AugmentedSample> {
        assemble(base_id, span, clip, comment, &self.accepted, self.max)
    }
}

/// Joins the clipped prefix with each continuation. Duplicates are dropped,
/// at most `max` samples are produced, and the output is ordered by the
/// hash of the generated text so that runs are reproducible regardless of
/// arrival order.
pub fn assemble<S: AsRef<str>>(
    base_id: usize,
    span: ResolvedSpan,
    clip: &ClipResult,
    comment: &str,
    accepted: &[S],
    max: usize,
) -> Vec<AugmentedSample> {
    assert!(
        span.token_end <= clip.prefix_tokens.len(),
        "clip prefix of {} tokens does not contain span end {}",
        clip.prefix_tokens.len(),
        span.token_end
    );
    let prefix = clip.prompt();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for continuation in accepted {
        if out.len() == max {
            break;
        }
        let tail = pretokenize(continuation.as_ref());
        if tail.is_empty() {
            continue;
        }
        let mut text = prefix.clone();
        for token in &tail {
            text.push(' ');
            text.push_str(token);
        }
        if !seen.insert(text.clone()) {
            continue;
        }
        out.push(AugmentedSample {
            base_id,
            text,
            token_start: span.token_start,
            token_end: span.token_end,
            comment: comment.to_string(),
        });
    }
    out.sort_by(|a, b| (stable_hash(&a.text), &a.text).cmp(&(stable_hash(&b.text), &b.text)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::ClipReason;
    use alloc::format;
    use alloc::vec;

    fn about_clip() -> ClipResult {
        let prefix = "they can help their father or mother about money";
        ClipResult {
            prefix_tokens: prefix.split(' ').map(str::to_string).collect(),
            cut_index: 8,
            reason: ClipReason::LastConnectedWord,
        }
    }

    fn about_span() -> ResolvedSpan {
        ResolvedSpan { token_start: 7, token_end: 8, convention: Convention::OneBasedInclusive }
    }

    #[test]
    fn citations_are_masked() {
        let a = signature("<< about >> is not the appropriate < preposition > ...");
        let b = signature("<<With>> is not the appropriate <preposition> ...");
        assert_eq!(a, b);
        assert_eq!(a.0, "<< * >> is not the appropriate < preposition > ...");
        let c = signature("<< about >> is not the appropriate < noun > ...");
        assert_ne!(a, c);
        // unterminated citation is kept literally
        assert_eq!(signature("<< a b").0, "<< a b");
    }

    #[test]
    fn threshold_boundary() {
        let mut comments = vec![];
        for i in 0..10 {
            comments.push(format!("<< w{i} >> is an < intransitive verb >"));
        }
        for i in 0..3 {
            comments.push(format!("<< w{i} >> needs an < article >"));
        }
        for i in 0..9 {
            comments.push(format!("<< w{i} >> is a < countable noun >"));
        }
        let sel = select_for_augmentation(&comments, DEFAULT_GROUP_SKIP);
        assert_eq!(sel.skip, (0..10).collect::<Vec<_>>());
        assert_eq!(sel.augment, (10..22).collect::<Vec<_>>());
        assert_eq!(sel.histogram(), BTreeMap::from([(3, 1), (9, 1), (10, 1)]));
    }

    #[test]
    fn pretokenizes_punctuation() {
        assert_eq!(
            pretokenize(", so that we can be independent."),
            vec![",", "so", "that", "we", "can", "be", "independent", "."]
        );
        assert_eq!(pretokenize("don't buy part-time \"jobs\"!"), vec!["don't", "buy", "part-time", "\"", "jobs", "\"", "!"]);
        assert_eq!(pretokenize("..."), vec![".", ".", "."]);
    }

    #[test]
    fn accepts_first_sentence() {
        let prefix = "they can help their father or mother about money";
        assert_eq!(
            accept_continuation(prefix, ", so that we can be independent. We have to work hard to earn our bread.", 40)
                .as_deref(),
            Some(", so that we can be independent.")
        );
        assert_eq!(accept_continuation(prefix, "", 40), None);
        assert_eq!(accept_continuation(prefix, " \t\n", 40), None);
    }

    #[test]
    fn unterminated_fragments() {
        assert_eq!(accept_continuation("p", " and then we went home", 40).as_deref(), Some("and then we went home."));
        assert_eq!(accept_continuation("p", " and then", 40), None);
        // terminator beyond the token budget does not count
        assert_eq!(accept_continuation("p", " a b c d e f.", 3).as_deref(), Some("a b c."));
        assert_eq!(accept_continuation("p", " a b c d e f.", 2), None);
    }

    #[test]
    fn rejects_brackets_and_symbol_only() {
        assert_eq!(accept_continuation("p", " the < noun > is here.", 40), None);
        assert_eq!(accept_continuation("p", " x>y.", 40), None);
        assert_eq!(accept_continuation("p", "\" \" .", 40), None);
    }

    #[test]
    fn cuts_at_line_break_and_strips_echo() {
        assert_eq!(accept_continuation("p", " one two three\nfour.", 40).as_deref(), Some("one two three."));
        assert_eq!(accept_continuation("they can", "they can go.", 40).as_deref(), Some("go."));
    }

    #[test]
    fn assemble_caps_and_keeps_span() {
        let accepted: Vec<String> = (0..12).map(|i| format!(", so we earn {i} dollars.")).collect();
        let out = assemble(5, about_span(), &about_clip(), "c", &accepted, 10);
        assert_eq!(out.len(), 10);
        for s in &out {
            assert_eq!((s.token_start, s.token_end), (7, 8));
            assert!(s.text.starts_with("they can help their father or mother about money , so we earn"));
            assert_eq!(s.text.split(' ').nth(7), Some("about"));
            assert!(s.text.ends_with('.'));
            assert_eq!(s.marked().error_region(), ["<<", "about", ">>"]);
            let sample = s.to_sample();
            assert_eq!(sample.raw_span, RawSpan { start: 37, end: 42 });
        }
        let mut hashes: Vec<u64> = out.iter().map(|s| stable_hash(&s.text)).collect();
        let sorted = {
            let mut h = hashes.clone();
            h.sort();
            h
        };
        assert_eq!(hashes, sorted);
        hashes.dedup();
        assert_eq!(hashes.len(), 10);
    }

    #[test]
    fn assemble_drops_duplicates() {
        let accepted = [", so we can.", ",  so we   can.", "!"];
        let out = assemble(0, about_span(), &about_clip(), "c", &accepted, 10);
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn pool_dedups_and_reports_fill() {
        let mut pool = ContinuationPool::new(2, 3);
        assert!(pool.needs_more());
        assert!(pool.offer("a b."));
        assert!(!pool.offer(" a  b. "));
        assert!(pool.offer("c."));
        assert!(!pool.needs_more());
        assert_eq!(pool.remaining(), 1);
        assert!(pool.offer("d."));
        assert!(pool.is_full());
        assert!(!pool.offer("e."));
        assert_eq!(pool.len(), 3);
    }

    #[test]
    fn stable_hash_is_fnv1a() {
        assert_eq!(stable_hash(""), 0xcbf29ce484222325);
        assert_eq!(stable_hash("a"), 0xaf63dc4c8601ec8c);
    }
}
