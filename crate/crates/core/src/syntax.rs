//! CoNLL-U ingestion and dependency-based clipping of learner sentences.
//!
//! Clipping keeps the sentence up to the last word that is directly
//! connected (head or dependent) to a word of the error span, or up to the
//! end of the span when every connected word precedes it. The kept prefix is
//! what the language model continues during augmentation.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::corpus::ResolvedSpan;

/// Relation label whose dependents never count as connected words.
pub const PUNCT_REL: &str = "punct";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("line {line}: expected 10 tab-separated columns, found {found}")]
    Columns { line: usize, found: usize },
    #[error("line {line}: bad token id {value:?}")]
    BadId { line: usize, value: String },
    #[error("line {line}: expected token id {expected}, found {found}")]
    IdSequence { line: usize, expected: usize, found: usize },
    #[error("line {line}: bad head {value:?}")]
    BadHead { line: usize, value: String },
    #[error("token {token}: head {head} out of range for {len} tokens")]
    HeadOutOfRange { token: usize, head: usize, len: usize },
    #[error("token {token} is its own head")]
    SelfLoop { token: usize },
    #[error("sentence has no root")]
    NoRoot,
    #[error("block contains no token lines")]
    Empty,
    #[error("parse has {parse} tokens but the sentence has {sentence}")]
    Misaligned { parse: usize, sentence: usize },
}

/// A dependency analysis aligned 1:1 with the whitespace tokens of a
/// sentence. Heads are 0-based; `None` marks the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepGraph {
    pub forms: Vec<String>,
    pub heads: Vec<Option<usize>>,
    pub rels: Vec<String>,
    /// The `# text = ...` comment, when the block carried one.
    pub text: Option<String>,
}

impl DepGraph {
    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    /// Direct dependents of `index`, in sentence order.
    pub fn children(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        self.heads
            .iter()
            .enumerate()
            .filter(move |(_, h)| **h == Some(index))
            .map(|(i, _)| i)
    }

    /// Checks the structural invariants. `parse_conllu` only ever returns
    /// graphs that pass.
    pub fn validate(&self) -> Result<(), SyntaxError> {
        let len = self.len();
        if len == 0 {
            return Err(SyntaxError::Empty);
        }
        for (token, head) in self.heads.iter().enumerate() {
            match *head {
                Some(h) if h >= len => {
                    return Err(SyntaxError::HeadOutOfRange { token, head: h, len })
                }
                Some(h) if h == token => return Err(SyntaxError::SelfLoop { token }),
                _ => {}
            }
        }
        if !self.heads.iter().any(Option::is_none) {
            return Err(SyntaxError::NoRoot);
        }
        Ok(())
    }

    /// Whether the `# text` comment (if any) matches `sentence` token-wise.
    pub fn text_matches(&self, sentence: &str) -> bool {
        self.text
            .as_deref()
            .is_none_or(|t| t.split_whitespace().eq(sentence.split_whitespace()))
    }
}

/// Parses one CoNLL-U sentence block. Multiword ranges (`3-4`) and empty
/// nodes (`5.1`) are skipped.
pub fn parse_conllu(block: &str) -> Result<DepGraph, SyntaxError> {
    parse_block(block, 1)
}

fn parse_block(block: &str, first_line: usize) -> Result<DepGraph, SyntaxError> {
    let mut graph = DepGraph { forms: Vec::new(), heads: Vec::new(), rels: Vec::new(), text: None };
    // HEAD values are kept 1-based until all tokens are known
    let mut raw_heads = Vec::new();
    for (offset, line) in block.lines().enumerate() {
        let line_no = first_line + offset;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(text) = comment.trim_start().strip_prefix("text =") {
                graph.text = Some(text.trim().to_string());
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(SyntaxError::Columns { line: line_no, found: cols.len() });
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let id: usize = cols[0]
            .parse()
            .map_err(|_| SyntaxError::BadId { line: line_no, value: cols[0].to_string() })?;
        let expected = graph.forms.len() + 1;
        if id != expected {
            return Err(SyntaxError::IdSequence { line: line_no, expected, found: id });
        }
        let head: usize = cols[6]
            .parse()
            .map_err(|_| SyntaxError::BadHead { line: line_no, value: cols[6].to_string() })?;
        graph.forms.push(cols[1].to_string());
        graph.rels.push(cols[7].to_string());
        raw_heads.push(head);
    }
    let len = raw_heads.len();
    for (i, head) in raw_heads.into_iter().enumerate() {
        if head > len {
            return Err(SyntaxError::HeadOutOfRange { token: i, head: head - 1, len });
        }
        graph.heads.push(head.checked_sub(1));
    }
    graph.validate()?;
    Ok(graph)
}

/// Splits a CoNLL-U document into blank-line separated blocks and parses
/// each one. Line numbers in errors refer to the whole document.
pub fn parse_conllu_document(doc: &str) -> Vec<Result<DepGraph, SyntaxError>> {
    let mut out = Vec::new();
    let mut block = String::new();
    let mut block_start = 1;
    for (i, line) in doc.lines().enumerate() {
        if line.trim().is_empty() {
            if !block.is_empty() {
                out.push(parse_block(&block, block_start));
                block.clear();
            }
            block_start = i + 2;
        } else {
            block.push_str(line);
            block.push('\n');
        }
    }
    if !block.is_empty() {
        out.push(parse_block(&block, block_start));
    }
    out
}

/// Tokens one dependency edge away from any span token, plus the span
/// tokens themselves. The root sentinel and punctuation dependents are
/// excluded.
pub fn neighbor_set(graph: &DepGraph, span: ResolvedSpan) -> Result<BTreeSet<usize>, SyntaxError> {
    if span.token_end > graph.len() || span.token_start >= span.token_end {
        return Err(SyntaxError::Misaligned { parse: graph.len(), sentence: span.token_end });
    }
    let mut set = BTreeSet::new();
    for t in span.token_start..span.token_end {
        set.insert(t);
        if let Some(h) = graph.heads[t] {
            set.insert(h);
        }
        set.extend(graph.children(t).filter(|&c| graph.rels[c] != PUNCT_REL));
    }
    Ok(set)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ClipReason {
    /// Cut after a connected word that follows the span.
    LastConnectedWord,
    /// No connected word follows the span; cut at the span end.
    SpanEndFallback,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClipResult {
    /// Lowercased sentence tokens `0..=cut_index`.
    pub prefix_tokens: Vec<String>,
    pub cut_index: usize,
    pub reason: ClipReason,
}

impl ClipResult {
    /// The prefix as a single-space joined prompt.
    pub fn prompt(&self) -> String {
        self.prefix_tokens.join(" ")
    }
}

/// Cuts `sentence` after the last word connected to the error span.
pub fn clip<S: AsRef<str>>(
    sentence: &[S],
    graph: &DepGraph,
    span: ResolvedSpan,
) -> Result<ClipResult, SyntaxError> {
    if sentence.len() != graph.len() {
        return Err(SyntaxError::Misaligned { parse: graph.len(), sentence: sentence.len() });
    }
    let neighbors = neighbor_set(graph, span)?;
    let span_last = span.token_end - 1;
    let last = neighbors.last().copied().unwrap_or(span_last);
    let (cut_index, reason) = if last > span_last {
        (last, ClipReason::LastConnectedWord)
    } else {
        (span_last, ClipReason::SpanEndFallback)
    };
    let prefix_tokens = sentence[..=cut_index].iter().map(|t| t.as_ref().to_lowercase()).collect();
    Ok(ClipResult { prefix_tokens, cut_index, reason })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Convention;
    use alloc::format;
    use alloc::vec;

    fn span(start: usize, end: usize) -> ResolvedSpan {
        ResolvedSpan { token_start: start, token_end: end, convention: Convention::ZeroBasedExclusive }
    }

    fn row(id: usize, form: &str, head: usize, rel: &str) -> String {
        format!("{id}\t{form}\t_\t_\t_\t_\t{head}\t{rel}\t_\t_")
    }

    fn block(rows: &[(&str, usize, &str)]) -> String {
        rows.iter()
            .enumerate()
            .map(|(i, (f, h, r))| row(i + 1, f, *h, r))
            .collect::<Vec<_>>()
            .join("\n")
    }

    #[test]
    fn maps_heads_to_zero_based() {
        let g = parse_conllu(&block(&[("a", 2, "x"), ("b", 0, "root"), ("c", 2, "y")])).unwrap();
        assert_eq!(g.heads, vec![Some(1), None, Some(1)]);
        assert_eq!(g.forms, vec!["a", "b", "c"]);
        assert_eq!(g.rels, vec!["x", "root", "y"]);
    }

    #[test]
    fn skips_ranges_empty_nodes_and_comments() {
        let text = format!(
            "# sent_id = 1\n# text = a b c\n{}\n1-2\tab\t_\t_\t_\t_\t_\t_\t_\t_\n{}\n2.1\tx\t_\t_\t_\t_\t_\t_\t_\t_\n{}\n",
            row(1, "a", 2, "x"),
            row(2, "b", 0, "root"),
            row(3, "c", 2, "y")
        );
        let g = parse_conllu(&text).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.text.as_deref(), Some("a b c"));
        assert!(g.text_matches("a  b c"));
        assert!(!g.text_matches("a b"));
    }

    #[test]
    fn reports_format_errors() {
        assert!(matches!(parse_conllu("1\ta\t_"), Err(SyntaxError::Columns { line: 1, found: 3 })));
        assert!(matches!(
            parse_conllu(&row(1, "a", 0, "root").replacen('1', "x", 1)),
            Err(SyntaxError::BadId { .. })
        ));
        assert!(matches!(
            parse_conllu(&row(1, "a", 0, "root").replace("\t0\t", "\t_\t")),
            Err(SyntaxError::BadHead { .. })
        ));
        assert!(matches!(
            parse_conllu(&block(&[("a", 3, "x"), ("b", 0, "root")])),
            Err(SyntaxError::HeadOutOfRange { token: 0, head: 2, len: 2 })
        ));
        assert!(matches!(
            parse_conllu(&block(&[("a", 1, "x"), ("b", 0, "root")])),
            Err(SyntaxError::SelfLoop { token: 0 })
        ));
        assert!(matches!(
            parse_conllu(&block(&[("a", 2, "x"), ("b", 1, "y")])),
            Err(SyntaxError::NoRoot)
        ));
        assert!(matches!(parse_conllu("# only a comment"), Err(SyntaxError::Empty)));
        assert!(matches!(
            parse_conllu(&format!("{}\n{}", row(1, "a", 0, "root"), row(3, "b", 1, "x"))),
            Err(SyntaxError::IdSequence { expected: 2, found: 3, .. })
        ));
    }

    #[test]
    fn parses_documents_with_line_numbers() {
        let doc = format!("{}\n\n\n{}\n{}\n", row(1, "a", 0, "root"), row(1, "b", 0, "root"), "oops");
        let parsed = parse_conllu_document(&doc);
        assert_eq!(parsed.len(), 2);
        assert!(parsed[0].is_ok());
        assert_eq!(parsed[1], Err(SyntaxError::Columns { line: 5, found: 1 }));
    }

    #[test]
    fn root_span_without_children_is_alone() {
        let g = parse_conllu(&block(&[("a", 0, "root")])).unwrap();
        assert_eq!(neighbor_set(&g, span(0, 1)).unwrap(), BTreeSet::from([0]));
    }

    #[test]
    fn punctuation_dependents_are_not_connected() {
        let g = parse_conllu(&block(&[("i", 2, "nsubj"), ("agree", 0, "ROOT"), ("it", 2, "dobj"), (".", 2, "punct")]))
            .unwrap();
        assert_eq!(neighbor_set(&g, span(1, 3)).unwrap(), BTreeSet::from([0, 1, 2]));
        let clipped = clip(&["I", "agree", "it", "."], &g, span(1, 3)).unwrap();
        assert_eq!(clipped.prompt(), "i agree it");
        assert_eq!(clipped.reason, ClipReason::SpanEndFallback);
    }

    #[test]
    fn span_at_end_falls_back_to_whole_sentence() {
        let g = parse_conllu(&block(&[("the", 2, "det"), ("car", 3, "nsubj"), ("broke", 0, "ROOT")])).unwrap();
        let clipped = clip(&["The", "car", "broke"], &g, span(2, 3)).unwrap();
        assert_eq!(clipped.prefix_tokens, vec!["the", "car", "broke"]);
        assert_eq!(clipped.cut_index, 2);
        assert_eq!(clipped.reason, ClipReason::SpanEndFallback);
    }

    #[test]
    fn cuts_at_child_two_past_span() {
        //   0 we -> saw, 1 saw ROOT, 2 it -> saw, 3 on -> saw, 4 the -> table, 5 table -> on
        let g = parse_conllu(&block(&[
            ("we", 2, "nsubj"),
            ("saw", 0, "ROOT"),
            ("it", 2, "dobj"),
            ("on", 2, "prep"),
            ("the", 6, "det"),
            ("table", 4, "pobj"),
        ]))
        .unwrap();
        let clipped = clip(&["we", "saw", "it", "on", "the", "table"], &g, span(1, 2)).unwrap();
        assert_eq!(clipped.cut_index, 3);
        assert_eq!(clipped.reason, ClipReason::LastConnectedWord);
        // span "it": its only neighbor is the head "saw" before it
        let clipped = clip(&["we", "saw", "it", "on", "the", "table"], &g, span(2, 3)).unwrap();
        assert_eq!((clipped.cut_index, clipped.reason), (2, ClipReason::SpanEndFallback));
        // span "on": child "table" two tokens past the span
        let clipped = clip(&["we", "saw", "it", "on", "the", "table"], &g, span(3, 4)).unwrap();
        assert_eq!((clipped.cut_index, clipped.reason), (5, ClipReason::LastConnectedWord));
    }

    #[test]
    fn misalignment_is_an_error() {
        let g = parse_conllu(&block(&[("a", 0, "root"), ("b", 1, "x")])).unwrap();
        assert_eq!(
            clip(&["a"], &g, span(0, 1)),
            Err(SyntaxError::Misaligned { parse: 2, sentence: 1 })
        );
        assert!(neighbor_set(&g, span(1, 3)).is_err());
    }
}
