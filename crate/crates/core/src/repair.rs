//! Restoration of missing opening brackets in generated comments.
//!
//! Generated comments tend to keep their closing brackets (`>`, `>>`) while
//! dropping the opening ones. Each unmatched `>` gets a `<` in front of the
//! longest known grammar term that ends right before it; each unmatched `>>`
//! gets a `<<` in front of the longest run of preceding words that also
//! occurs in the learner sentence.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::preprocess::comment_tokens;
use crate::{CITE_CLOSE, CITE_OPEN, TERM_CLOSE, TERM_OPEN};

/// Longest citation, in tokens, that repair will reconstruct.
pub const CITATION_WINDOW: usize = 6;

fn is_bracket(token: &str) -> bool {
    matches!(token, "<" | ">" | "<<" | ">>")
}

/// Grammar terms harvested from `< ... >` regions of reference comments.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermLexicon {
    terms: BTreeSet<String>,
    max_term_tokens: usize,
}

/// Result of harvesting one comment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Harvest {
    pub terms: Vec<String>,
    /// Bracket tokens that had no partner and were skipped.
    pub unbalanced: usize,
}

/// Extracts the contents of every matched `< ... >` pair, ignoring
/// `<< ... >>` citations.
pub fn harvest_terms(comment: &str) -> Harvest {
    let tokens = comment_tokens(&comment.to_lowercase());
    let mut harvest = Harvest::default();
    let mut i = 0;
    while i < tokens.len() {
        match tokens[i].as_str() {
            CITE_OPEN => match tokens[i + 1..].iter().position(|t| t == CITE_CLOSE) {
                Some(off) => i += off + 2,
                None => {
                    harvest.unbalanced += 1;
                    i += 1;
                }
            },
            TERM_OPEN => {
                let close = tokens[i + 1..].iter().position(|t| is_bracket(t)).map(|off| i + 1 + off);
                match close {
                    Some(j) if tokens[j] == TERM_CLOSE && j > i + 1 => {
                        harvest.terms.push(tokens[i + 1..j].join(" "));
                        i = j + 1;
                    }
                    _ => {
                        harvest.unbalanced += 1;
                        i += 1;
                    }
                }
            }
            TERM_CLOSE | CITE_CLOSE => {
                harvest.unbalanced += 1;
                i += 1;
            }
            _ => i += 1,
        }
    }
    harvest
}

impl TermLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a lexicon from reference comments. Unbalanced bracket regions
    /// are skipped; their count is returned alongside.
    pub fn build<I, S>(comments: I) -> (TermLexicon, usize)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut lex = TermLexicon::new();
        let mut unbalanced = 0;
        for comment in comments {
            let harvest = harvest_terms(comment.as_ref());
            unbalanced += harvest.unbalanced;
            for term in harvest.terms {
                lex.insert(&term);
            }
        }
        (lex, unbalanced)
    }

    /// Adds a term after lowercasing and whitespace collapse. Empty terms
    /// and terms containing angle brackets are ignored.
    pub fn insert(&mut self, term: &str) -> bool {
        let term = term.to_lowercase();
        let words: Vec<&str> = term.split_whitespace().collect();
        if words.is_empty() || term.contains(['<', '>']) {
            return false;
        }
        self.max_term_tokens = self.max_term_tokens.max(words.len());
        self.terms.insert(words.join(" "))
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.contains(term)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_term_tokens(&self) -> usize {
        self.max_term_tokens
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }

    /// One term per line, sorted, newline terminated.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for term in &self.terms {
            out.push_str(term);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> TermLexicon {
        let mut lex = TermLexicon::new();
        for line in text.lines() {
            lex.insert(line);
        }
        lex
    }
}

impl<S: AsRef<str>> FromIterator<S> for TermLexicon {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut lex = TermLexicon::new();
        for term in iter {
            lex.insert(term.as_ref());
        }
        lex
    }
}

/// The lexicon term with the most tokens that equals a token suffix of
/// `prefix_tokens`.
pub fn longest_term_suffix<S: AsRef<str>>(prefix_tokens: &[S], lex: &TermLexicon) -> Option<String> {
    let longest = lex.max_term_tokens().min(prefix_tokens.len());
    (1..=longest).rev().find_map(|k| {
        let candidate = join(&prefix_tokens[prefix_tokens.len() - k..]);
        lex.contains(&candidate).then_some(candidate)
    })
}

/// Longest token suffix of `prefix_tokens` (at most `window` tokens) that
/// occurs contiguously in `learner`. Comparison is case-insensitive.
pub fn longest_citation_suffix<S: AsRef<str>, L: AsRef<str>>(
    prefix_tokens: &[S],
    learner: &[L],
    window: usize,
) -> Option<usize> {
    let learner: Vec<String> = learner.iter().map(|t| t.as_ref().to_lowercase()).collect();
    let longest = window.min(prefix_tokens.len()).min(learner.len());
    (1..=longest).rev().find(|&k| {
        let suffix: Vec<String> = prefix_tokens[prefix_tokens.len() - k..]
            .iter()
            .map(|t| t.as_ref().to_lowercase())
            .collect();
        learner.windows(k).any(|w| w == suffix.as_slice())
    })
}

fn join<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(t.as_ref());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum FixKind {
    Term,
    Citation,
}

/// One inserted opening bracket.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Fix {
    /// Token index of the inserted bracket in the repaired text.
    pub position: usize,
    pub kind: FixKind,
    /// The words the new bracket pair encloses.
    pub inserted: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RepairOutcome {
    pub text: String,
    pub fixes: Vec<Fix>,
    /// Token indices (in `text`) of closing brackets left unmatched.
    pub unresolved: Vec<usize>,
}

/// Inserts missing opening brackets. Closing brackets that already have a
/// partner are left alone; those without a usable candidate stay in place
/// and are listed in `unresolved`.
pub fn repair_comment<L: AsRef<str>>(generated: &str, learner_tokens: &[L], lex: &TermLexicon) -> RepairOutcome {
    let mut out: Vec<String> = Vec::new();
    let mut fixes = Vec::new();
    let mut unresolved = Vec::new();
    let (mut open_terms, mut open_cites) = (0usize, 0usize);
    // candidates never reach back past the most recent bracket token
    let mut barrier = 0;

    for token in comment_tokens(generated) {
        match token.as_str() {
            TERM_OPEN => open_terms += 1,
            CITE_OPEN => open_cites += 1,
            TERM_CLOSE if open_terms > 0 => open_terms -= 1,
            CITE_CLOSE if open_cites > 0 => open_cites -= 1,
            TERM_CLOSE => {
                let window = &out[barrier..];
                match longest_term_suffix(window, lex) {
                    Some(term) => {
                        let position = out.len() - term.split(' ').count();
                        out.insert(position, TERM_OPEN.to_string());
                        fixes.push(Fix { position, kind: FixKind::Term, inserted: term });
                    }
                    None => unresolved.push(out.len()),
                }
            }
            CITE_CLOSE => {
                let window = &out[barrier..];
                match longest_citation_suffix(window, learner_tokens, CITATION_WINDOW) {
                    Some(k) => {
                        let position = out.len() - k;
                        let inserted = join(&out[position..]);
                        out.insert(position, CITE_OPEN.to_string());
                        fixes.push(Fix { position, kind: FixKind::Citation, inserted });
                    }
                    None => unresolved.push(out.len()),
                }
            }
            _ => {
                out.push(token);
                continue;
            }
        }
        out.push(token);
        barrier = out.len();
    }
    RepairOutcome { text: out.join(" "), fixes, unresolved }
}

/// Tokens of `text` with every bracket token removed.
pub fn plain_tokens(text: &str) -> Vec<String> {
    comment_tokens(text).into_iter().filter(|t| !is_bracket(t)).collect()
}

/// Positions of closing brackets in `text` that have no opening partner,
/// counting each bracket kind separately.
pub fn unmatched_closers(text: &str) -> Vec<usize> {
    let (mut terms, mut cites) = (0usize, 0usize);
    let mut out = Vec::new();
    for (i, token) in comment_tokens(text).iter().enumerate() {
        match token.as_str() {
            TERM_OPEN => terms += 1,
            CITE_OPEN => cites += 1,
            TERM_CLOSE if terms > 0 => terms -= 1,
            CITE_CLOSE if cites > 0 => cites -= 1,
            TERM_CLOSE | CITE_CLOSE => out.push(i),
            _ => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn lex(terms: &[&str]) -> TermLexicon {
        terms.iter().collect()
    }

    #[test]
    fn harvests_terms_not_citations() {
        let (l, bad) = TermLexicon::build([
            "<< agree >> is an < intransitive verb > and needs a < preposition > .",
            "<< about >> is not the appropriate < preposition > after < help + someone >",
        ]);
        assert_eq!(bad, 0);
        assert_eq!(l.iter().collect::<Vec<_>>(), ["help + someone", "intransitive verb", "preposition"]);
        assert_eq!(l.max_term_tokens(), 3);

        let (l, bad) = TermLexicon::build(["<< agree >> is wrong"]);
        assert!(l.is_empty());
        assert_eq!(bad, 0);
    }

    #[test]
    fn harvest_skips_unbalanced_regions() {
        let h = harvest_terms("< verb is < noun > and > odd << x");
        assert_eq!(h.terms, vec!["noun"]);
        assert_eq!(h.unbalanced, 3);
        assert_eq!(harvest_terms("> x <").unbalanced, 2);
        let h = harvest_terms("< > empty");
        assert!(h.terms.is_empty());
    }

    #[test]
    fn lexicon_text_round_trip() {
        let l = lex(&["verb", "Auxiliary  verb", "<bad>", " "]);
        assert_eq!(l.to_text(), "auxiliary verb\nverb\n");
        assert_eq!(TermLexicon::from_text(&l.to_text()), l);
    }

    #[test]
    fn longest_suffix_wins() {
        let l = lex(&["verb", "auxiliary verb"]);
        assert_eq!(longest_term_suffix(&["follow", "an", "auxiliary", "verb"], &l).as_deref(), Some("auxiliary verb"));
        assert_eq!(longest_term_suffix(&["a", "banana"], &lex(&["verb"])), None);
        let empty: [&str; 0] = [];
        assert_eq!(longest_term_suffix(&empty, &l), None);
    }

    #[test]
    fn restores_table_example() {
        let l = lex(&["verbs", "auxiliary verb", "verb", "infinitive form"]);
        let out = repair_comment("verbs > that follow an auxiliary verb > are used ...", &["x"], &l);
        assert_eq!(out.text, "< verbs > that follow an < auxiliary verb > are used ...");
        assert_eq!(
            out.fixes,
            vec![
                Fix { position: 0, kind: FixKind::Term, inserted: "verbs".into() },
                Fix { position: 6, kind: FixKind::Term, inserted: "auxiliary verb".into() },
            ]
        );
        assert!(out.unresolved.is_empty());
    }

    #[test]
    fn restores_citations_from_learner_sentence() {
        let learner = ["They", "can", "help", "their", "father", "about", "money", "."];
        let l = lex(&["verb", "preposition"]);
        let out = repair_comment("about >> is not the appropriate preposition > . look up the verb > help >> now", &learner, &l);
        assert_eq!(
            out.text,
            "<< about >> is not the appropriate < preposition > . look up the < verb > << help >> now"
        );
        assert_eq!(out.fixes.len(), 4);
        assert_eq!(out.fixes[3], Fix { position: 17, kind: FixKind::Citation, inserted: "help".into() });
        assert!(unmatched_closers(&out.text).is_empty());
    }

    #[test]
    fn balanced_input_is_identity() {
        let text = "<< about >> is not the appropriate < preposition > .";
        let out = repair_comment(text, &["about"], &lex(&["preposition"]));
        assert_eq!(out.text, text);
        assert!(out.fixes.is_empty());
        assert!(out.unresolved.is_empty());
    }

    #[test]
    fn unresolved_closers_stay_in_place() {
        let out = repair_comment("a banana > and pear >>", &["apple"], &lex(&["verb"]));
        assert_eq!(out.text, "a banana > and pear >>");
        assert_eq!(out.unresolved, vec![2, 5]);
        assert_eq!(unmatched_closers(&out.text), out.unresolved);
    }

    #[test]
    fn candidates_stop_at_previous_bracket() {
        // "verb" directly after the first ">" is fine, but the search for the
        // second ">" must not reach back across it
        let out = repair_comment("verb > >", &["x"], &lex(&["verb"]));
        assert_eq!(out.text, "< verb > >");
        assert_eq!(out.unresolved, vec![3]);
    }

    #[test]
    fn citation_window_is_bounded() {
        let learner: Vec<&str> = "a b c d e f g h".split(' ').collect();
        let out = repair_comment("a b c d e f g h >>", &learner, &TermLexicon::new());
        assert_eq!(out.text, "a b << c d e f g h >>");
    }
}
