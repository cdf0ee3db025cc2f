//! Core algorithms for generating grammatical-error feedback comments.
//!
//! Everything here is pure and allocation-only (`no_std` + `alloc`): the
//! shared-task TSV record format, error-span marking, dependency-based
//! sentence clipping, continuation filtering for data augmentation, bracket
//! repair of generated comments, and BLEU / precision-recall scoring.
//!
//! File handling, the generation client and the command-line front end live
//! in the `fcgen` crate.

#![no_std]

extern crate alloc;

pub mod augment;
pub mod corpus;
pub mod eval;
pub mod preprocess;
pub mod repair;
pub mod syntax;

pub use augment::{
    accept_continuation, pretokenize, select_for_augmentation, signature, AugmentedSample,
    CommentSignature, ContinuationPool, Selection,
};
pub use corpus::{
    resolve_span, resolve_span_with, tokenize, Convention, RawSpan, ResolvedSpan, Sample,
    SampleError, SpanError, Token,
};
pub use eval::{corpus_bleu, paired_span_report, prf_scores, EvalError, EvalLabel, Prf};
pub use preprocess::{mark_span, normalize_comment, strip_markers, MarkedSentence};
pub use repair::{longest_term_suffix, repair_comment, RepairOutcome, TermLexicon};
pub use syntax::{clip, neighbor_set, parse_conllu, ClipReason, ClipResult, DepGraph, SyntaxError};

/// Opening marker for a citation of learner words (`<< ... >>`).
pub const CITE_OPEN: &str = "<<";
/// Closing marker for a citation of learner words.
pub const CITE_CLOSE: &str = ">>";
/// Opening bracket of a grammar term (`< ... >`).
pub const TERM_OPEN: &str = "<";
/// Closing bracket of a grammar term.
pub const TERM_CLOSE: &str = ">";
/// Sentinel a system emits when it declines to comment.
pub const NO_COMMENT: &str = "<NO_COMMENT>";
