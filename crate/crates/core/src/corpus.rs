//! Shared-task TSV records and character-span resolution.
//!
//! A record is `text \t start:end [\t comment]`. The text is pre-tokenized
//! (tokens separated by whitespace) and the span is given in character
//! offsets whose convention is not fixed by the format, so [`resolve_span`]
//! tries both plausible readings and keeps the one that lands on token
//! boundaries.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

/// Character offsets exactly as written in the file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RawSpan {
    pub start: usize,
    pub end: usize,
}

impl fmt::Display for RawSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

/// One corpus record.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sample {
    pub text: String,
    pub raw_span: RawSpan,
    /// Absent for test items.
    pub comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SampleError {
    #[error("line {line_no}: expected 2 or 3 tab-separated fields, found {found}")]
    FieldCount { line_no: usize, found: usize },
    #[error("line {line_no}: empty sentence")]
    EmptyText { line_no: usize },
    #[error("line {line_no}: span {field:?} is not of the form <int>:<int>")]
    SpanSyntax { line_no: usize, field: String },
    #[error("line {line_no}: span start {start} is not before end {end}")]
    SpanOrder { line_no: usize, start: usize, end: usize },
}

impl SampleError {
    pub fn line_no(&self) -> usize {
        match self {
            SampleError::FieldCount { line_no, .. }
            | SampleError::EmptyText { line_no }
            | SampleError::SpanSyntax { line_no, .. }
            | SampleError::SpanOrder { line_no, .. } => *line_no,
        }
    }
}

fn parse_offset(s: &str) -> Option<usize> {
    // `usize::from_str` accepts a leading '+', which would break round-tripping.
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

impl Sample {
    /// Parses one line (without its line terminator). `line_no` is only used
    /// for diagnostics.
    pub fn parse_line(line: &str, line_no: usize) -> Result<Sample, SampleError> {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 && fields.len() != 3 {
            return Err(SampleError::FieldCount { line_no, found: fields.len() });
        }
        let text = fields[0];
        if text.trim().is_empty() {
            return Err(SampleError::EmptyText { line_no });
        }
        let span_err = || SampleError::SpanSyntax { line_no, field: fields[1].to_string() };
        let (start, end) = fields[1].split_once(':').ok_or_else(span_err)?;
        let start = parse_offset(start).ok_or_else(span_err)?;
        let end = parse_offset(end).ok_or_else(span_err)?;
        if start >= end {
            return Err(SampleError::SpanOrder { line_no, start, end });
        }
        Ok(Sample {
            text: text.to_string(),
            raw_span: RawSpan { start, end },
            comment: fields.get(2).map(|c| c.to_string()),
        })
    }

    /// Serializes back to the line shape accepted by [`Sample::parse_line`].
    pub fn write_line(&self) -> String {
        let mut out = String::with_capacity(self.text.len() + 16);
        out.push_str(&self.text);
        out.push('\t');
        out.push_str(&self.raw_span.to_string());
        if let Some(comment) = &self.comment {
            out.push('\t');
            out.push_str(comment);
        }
        out
    }

    pub fn tokens(&self) -> Vec<Token> {
        tokenize(&self.text)
    }
}

/// A whitespace-delimited token with its character range in the sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub form: String,
    pub index: usize,
    pub char_start: usize,
    pub char_end: usize,
}

/// Splits a pre-tokenized sentence into maximal non-whitespace runs.
/// Offsets count Unicode scalar values, not bytes.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current: Option<(usize, String)> = None;
    let mut pos = 0;
    for ch in text.chars() {
        if ch.is_whitespace() {
            if let Some((start, form)) = current.take() {
                let index = tokens.len();
                tokens.push(Token { form, index, char_start: start, char_end: pos });
            }
        } else {
            current.get_or_insert_with(|| (pos, String::new())).1.push(ch);
        }
        pos += 1;
    }
    if let Some((start, form)) = current {
        let index = tokens.len();
        tokens.push(Token { form, index, char_start: start, char_end: pos });
    }
    tokens
}

/// How the two numbers of a [`RawSpan`] were interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Convention {
    /// `[start, end)` with the first character at 0.
    ZeroBasedExclusive,
    /// `[start, end]` with the first character at 1.
    OneBasedInclusive,
}

impl Convention {
    pub const ALL: [Convention; 2] = [Convention::ZeroBasedExclusive, Convention::OneBasedInclusive];

    /// Half-open zero-based character range for a raw span, if the reading
    /// is representable at all.
    pub fn char_range(self, span: RawSpan) -> Option<(usize, usize)> {
        match self {
            Convention::ZeroBasedExclusive => Some((span.start, span.end)),
            Convention::OneBasedInclusive => {
                if span.start == 0 {
                    None
                } else {
                    Some((span.start - 1, span.end))
                }
            }
        }
    }

    /// Inverse of [`Convention::char_range`].
    pub fn raw_span(self, char_start: usize, char_end: usize) -> RawSpan {
        match self {
            Convention::ZeroBasedExclusive => RawSpan { start: char_start, end: char_end },
            Convention::OneBasedInclusive => RawSpan { start: char_start + 1, end: char_end },
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Convention::ZeroBasedExclusive => "zero-based-exclusive",
            Convention::OneBasedInclusive => "one-based-inclusive",
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Convention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero-based-exclusive" => Ok(Convention::ZeroBasedExclusive),
            "one-based-inclusive" => Ok(Convention::OneBasedInclusive),
            other => Err(alloc::format!("unknown span convention {other:?}")),
        }
    }
}

/// A span expressed as token indices, `token_start..token_end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResolvedSpan {
    pub token_start: usize,
    pub token_end: usize,
    pub convention: Convention,
}

impl ResolvedSpan {
    pub fn len(&self) -> usize {
        self.token_end - self.token_start
    }

    pub fn is_empty(&self) -> bool {
        self.token_end == self.token_start
    }

    pub fn contains(&self, index: usize) -> bool {
        (self.token_start..self.token_end).contains(&index)
    }

    /// The span re-expressed as a raw character span under `convention`.
    pub fn to_raw(&self, tokens: &[Token], convention: Convention) -> RawSpan {
        convention.raw_span(
            tokens[self.token_start].char_start,
            tokens[self.token_end - 1].char_end,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpanError {
    #[error("sentence has no tokens")]
    NoTokens,
    #[error("span {raw} cuts a token under every convention tried (sentence has {char_len} characters)")]
    NeitherAligns { raw: RawSpan, char_len: usize },
    #[error(
        "span {raw} is ambiguous: zero-based reading gives tokens {zero_based:?}, \
         one-based reading gives tokens {one_based:?}"
    )]
    Ambiguous { raw: RawSpan, zero_based: (usize, usize), one_based: (usize, usize) },
}

fn align(tokens: &[Token], start: usize, end: usize) -> Option<(usize, usize)> {
    if start >= end {
        return None;
    }
    let first = tokens.iter().position(|t| t.char_start == start)?;
    let last = tokens[first..].iter().position(|t| t.char_end == end)? + first;
    Some((first, last + 1))
}

/// Resolves a sample's raw span to token indices, detecting the offset
/// convention per record.
pub fn resolve_span(sample: &Sample) -> Result<ResolvedSpan, SpanError> {
    resolve_span_with(sample, None)
}

/// Like [`resolve_span`], but `forced` pins a single convention.
pub fn resolve_span_with(
    sample: &Sample,
    forced: Option<Convention>,
) -> Result<ResolvedSpan, SpanError> {
    let tokens = tokenize(&sample.text);
    if tokens.is_empty() {
        return Err(SpanError::NoTokens);
    }
    let raw = sample.raw_span;
    let attempt = |convention: Convention| {
        let (start, end) = convention.char_range(raw)?;
        align(&tokens, start, end).map(|(token_start, token_end)| ResolvedSpan {
            token_start,
            token_end,
            convention,
        })
    };
    let neither = || SpanError::NeitherAligns { raw, char_len: sample.text.chars().count() };

    if let Some(convention) = forced {
        return attempt(convention).ok_or_else(neither);
    }
    match (attempt(Convention::ZeroBasedExclusive), attempt(Convention::OneBasedInclusive)) {
        (Some(zero), Some(one)) => {
            if (zero.token_start, zero.token_end) == (one.token_start, one.token_end) {
                Ok(zero)
            } else {
                Err(SpanError::Ambiguous {
                    raw,
                    zero_based: (zero.token_start, zero.token_end),
                    one_based: (one.token_start, one.token_end),
                })
            }
        }
        (Some(span), None) | (None, Some(span)) => Ok(span),
        (None, None) => Err(neither()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(text: &str, start: usize, end: usize) -> Sample {
        Sample { text: text.to_string(), raw_span: RawSpan { start, end }, comment: None }
    }

    #[test]
    fn parses_three_field_line() {
        let line = "I agree it .\t3:10\t< < agree > > is an <intransitive verb> ...";
        let s = Sample::parse_line(line, 1).unwrap();
        assert_eq!(s.text, "I agree it .");
        assert_eq!(s.raw_span, RawSpan { start: 3, end: 10 });
        assert!(s.comment.is_some());
    }

    #[test]
    fn parses_test_shape_without_comment() {
        let s = Sample::parse_line("I agree it .\t3:10", 4).unwrap();
        assert_eq!(s.comment, None);
        assert_eq!(s.write_line(), "I agree it .\t3:10");
    }

    #[test]
    fn rejects_malformed_lines_with_line_numbers() {
        let err = Sample::parse_line("bad line with no tabs", 7).unwrap_err();
        assert_eq!(err, SampleError::FieldCount { line_no: 7, found: 1 });
        assert_eq!(err.line_no(), 7);

        let err = Sample::parse_line("a\tx:1\tc", 2).unwrap_err();
        assert!(matches!(err, SampleError::SpanSyntax { line_no: 2, .. }));
        let err = Sample::parse_line("a\t+1:2", 2).unwrap_err();
        assert!(matches!(err, SampleError::SpanSyntax { .. }));
        let err = Sample::parse_line("a\t3:3", 9).unwrap_err();
        assert_eq!(err, SampleError::SpanOrder { line_no: 9, start: 3, end: 3 });
        let err = Sample::parse_line("a\t1:2\tb\tc", 3).unwrap_err();
        assert_eq!(err, SampleError::FieldCount { line_no: 3, found: 4 });
        let err = Sample::parse_line(" \t1:2", 5).unwrap_err();
        assert_eq!(err, SampleError::EmptyText { line_no: 5 });
    }

    #[test]
    fn writes_direct_serialization() {
        let s = Sample {
            text: "a b".to_string(),
            raw_span: RawSpan { start: 0, end: 1 },
            comment: Some("c".to_string()),
        };
        assert_eq!(s.write_line(), "a b\t0:1\tc");
        assert_eq!(Sample::parse_line(&s.write_line(), 1).unwrap(), s);
    }

    #[test]
    fn tokenizer_tracks_char_offsets() {
        let toks = tokenize("  héllo  wörld .");
        let spans: Vec<_> = toks.iter().map(|t| (t.form.as_str(), t.char_start, t.char_end)).collect();
        assert_eq!(spans, [("héllo", 2, 7), ("wörld", 9, 14), (".", 15, 16)]);
    }

    #[test]
    fn resolves_one_based_inclusive_example() {
        // "I agree it .": chars I=0, agree=2..7, it=8..10, '.'=11..12.
        // zero-based [3,10) starts inside "agree"; one-based [2,10) is "agree it".
        let span = resolve_span(&sample("I agree it .", 3, 10)).unwrap();
        assert_eq!(
            span,
            ResolvedSpan { token_start: 1, token_end: 3, convention: Convention::OneBasedInclusive }
        );
    }

    #[test]
    fn resolves_zero_based_exclusive_example() {
        let span = resolve_span(&sample("a b", 0, 1)).unwrap();
        assert_eq!(
            span,
            ResolvedSpan { token_start: 0, token_end: 1, convention: Convention::ZeroBasedExclusive }
        );
    }

    #[test]
    fn reports_neither_aligning() {
        let err = resolve_span(&sample("abc", 1, 2)).unwrap_err();
        assert_eq!(err, SpanError::NeitherAligns { raw: RawSpan { start: 1, end: 2 }, char_len: 3 });
        // out of range under both readings
        assert!(matches!(
            resolve_span(&sample("a b", 4, 9)),
            Err(SpanError::NeitherAligns { .. })
        ));
    }

    #[test]
    fn forced_convention_overrides_detection() {
        let s = sample("I agree it .", 3, 10);
        assert!(resolve_span_with(&s, Some(Convention::ZeroBasedExclusive)).is_err());
        let span = resolve_span_with(&s, Some(Convention::OneBasedInclusive)).unwrap();
        assert_eq!((span.token_start, span.token_end), (1, 3));
    }

    #[test]
    fn raw_span_round_trips_through_convention() {
        let s = sample("They can help about money .", 0, 1);
        let toks = tokenize(&s.text);
        let span = ResolvedSpan { token_start: 3, token_end: 5, convention: Convention::ZeroBasedExclusive };
        for conv in Convention::ALL {
            let raw = span.to_raw(&toks, conv);
            let again = resolve_span_with(&sample(&s.text, raw.start, raw.end), Some(conv)).unwrap();
            assert_eq!((again.token_start, again.token_end), (3, 5));
        }
    }
}
