//! Text normalization and error-span marking for model inputs.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::corpus::{ResolvedSpan, Sample};
use crate::{CITE_CLOSE, CITE_OPEN, TERM_CLOSE, TERM_OPEN};

/// Splits a comment into tokens, treating `<<`, `>>`, `<` and `>` as
/// standalone tokens. Runs of three or more brackets are split greedily
/// into pairs first.
pub(crate) fn comment_tokens(comment: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    let mut chars = comment.chars().peekable();
    while let Some(ch) = chars.next() {
        if ch == '<' || ch == '>' {
            if !word.is_empty() {
                tokens.push(core::mem::take(&mut word));
            }
            if chars.peek() == Some(&ch) {
                chars.next();
                tokens.push(if ch == '<' { CITE_OPEN } else { CITE_CLOSE }.to_string());
            } else {
                tokens.push(if ch == '<' { TERM_OPEN } else { TERM_CLOSE }.to_string());
            }
        } else if ch.is_whitespace() {
            if !word.is_empty() {
                tokens.push(core::mem::take(&mut word));
            }
        } else {
            word.push(ch);
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    tokens
}

/// Lowercases a raw corpus comment and separates bracket symbols from the
/// words they enclose with single spaces. Idempotent.
///
/// ```
/// use fcgen_core::normalize_comment;
/// assert_eq!(
///     normalize_comment("<<About>> is not the appropriate <preposition> ..."),
///     "<< about >> is not the appropriate < preposition > ...",
/// );
/// ```
pub fn normalize_comment(comment: &str) -> String {
    comment_tokens(&comment.to_lowercase()).join(" ")
}

pub fn is_marker(token: &str) -> bool {
    token == CITE_OPEN || token == CITE_CLOSE
}

/// A lowercased learner sentence with the error span wrapped in `<<` `>>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkedSentence {
    pub tokens: Vec<String>,
    /// The span this sentence was marked from, in unmarked token indices.
    pub span: ResolvedSpan,
}

impl MarkedSentence {
    /// Index of the `<<` token.
    pub fn open_index(&self) -> usize {
        self.span.token_start
    }

    /// Index of the `>>` token.
    pub fn close_index(&self) -> usize {
        self.span.token_end + 1
    }

    /// The marked region, markers included.
    pub fn error_region(&self) -> &[String] {
        &self.tokens[self.open_index()..=self.close_index()]
    }

    /// Checks the single-marker-pair and lowercase invariants.
    pub fn is_well_formed(&self) -> bool {
        let opens: Vec<usize> = positions(&self.tokens, CITE_OPEN);
        let closes: Vec<usize> = positions(&self.tokens, CITE_CLOSE);
        opens.len() == 1
            && closes.len() == 1
            && opens[0] + 1 < closes[0]
            && self
                .tokens
                .iter()
                .filter(|t| !is_marker(t))
                .all(|t| t.to_lowercase() == **t)
    }
}

fn positions(tokens: &[String], needle: &str) -> Vec<usize> {
    tokens.iter().enumerate().filter(|(_, t)| *t == needle).map(|(i, _)| i).collect()
}

impl fmt::Display for MarkedSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, token) in self.tokens.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(token)?;
        }
        Ok(())
    }
}

/// Lowercases the sentence and wraps the span in `<<` `>>` marker tokens.
///
/// # Panics
///
/// If `span` lies outside the sample's tokens.
pub fn mark_span(sample: &Sample, span: ResolvedSpan) -> MarkedSentence {
    mark_tokens(sample.text.split_whitespace(), span)
}

pub(crate) fn mark_tokens<'a>(
    words: impl IntoIterator<Item = &'a str>,
    span: ResolvedSpan,
) -> MarkedSentence {
    let lower: Vec<String> = words.into_iter().map(str::to_lowercase).collect();
    assert!(
        span.token_start < span.token_end && span.token_end <= lower.len(),
        "span {}..{} outside sentence of {} tokens",
        span.token_start,
        span.token_end,
        lower.len()
    );
    let n = lower.len();
    let mut tokens = Vec::with_capacity(n + 2);
    for (i, token) in lower.into_iter().enumerate() {
        if i == span.token_start {
            tokens.push(CITE_OPEN.to_string());
        }
        if i == span.token_end {
            tokens.push(CITE_CLOSE.to_string());
        }
        tokens.push(token);
    }
    if span.token_end == n {
        tokens.push(CITE_CLOSE.to_string());
    }
    MarkedSentence { tokens, span }
}

/// Removes every `<<` and `>>` token.
pub fn strip_markers<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    tokens
        .iter()
        .map(AsRef::as_ref)
        .filter(|t| !is_marker(t))
        .map(str::to_string)
        .collect()
}
