//! Brute-force reference implementations used to cross-check the library.
//! Nothing here calls into the code under test.

#![allow(dead_code)]

use std::collections::BTreeSet;

/// BLEU-4 from explicit n-gram count tables, one reference per hypothesis,
/// corpus-level aggregation, no smoothing.
pub fn bleu(hyps: &[String], refs: &[String]) -> f64 {
    fn table(words: &[&str], n: usize) -> Vec<(Vec<String>, usize)> {
        let mut t: Vec<(Vec<String>, usize)> = Vec::new();
        if words.len() < n {
            return t;
        }
        for i in 0..=words.len() - n {
            let gram: Vec<String> = words[i..i + n].iter().map(|w| w.to_string()).collect();
            match t.iter_mut().find(|(g, _)| *g == gram) {
                Some(entry) => entry.1 += 1,
                None => t.push((gram, 1)),
            }
        }
        t
    }

    let mut clipped = [0.0f64; 4];
    let mut total = [0.0f64; 4];
    let mut c = 0.0;
    let mut r = 0.0;
    for (h, rf) in hyps.iter().zip(refs) {
        let hw: Vec<&str> = h.split_whitespace().collect();
        let rw: Vec<&str> = rf.split_whitespace().collect();
        c += hw.len() as f64;
        r += rw.len() as f64;
        for n in 1..=4 {
            let ht = table(&hw, n);
            let rt = table(&rw, n);
            for (gram, count) in &ht {
                let in_ref = rt.iter().find(|(g, _)| g == gram).map(|(_, k)| *k).unwrap_or(0);
                clipped[n - 1] += (*count).min(in_ref) as f64;
                total[n - 1] += *count as f64;
            }
        }
    }
    let mut p = [0.0f64; 4];
    for n in 0..4 {
        if clipped[n] == 0.0 {
            return 0.0;
        }
        p[n] = clipped[n] / total[n];
    }
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    bp * ((p[0].ln() + p[1].ln() + p[2].ln() + p[3].ln()) / 4.0).exp()
}

/// Span tokens plus every token sharing an edge with one of them, found by
/// scanning the full (dependent, head) edge list. Dependents attached with
/// `punct` are not counted.
pub fn neighbors(heads: &[Option<usize>], rels: &[&str], start: usize, end: usize) -> BTreeSet<usize> {
    let mut out: BTreeSet<usize> = (start..end).collect();
    for (dep, head) in heads.iter().enumerate() {
        let Some(head) = *head else { continue };
        let dep_in = (start..end).contains(&dep);
        let head_in = (start..end).contains(&head);
        if dep_in {
            out.insert(head);
        }
        if head_in && rels[dep] != "punct" {
            out.insert(dep);
        }
    }
    out
}

/// The lexicon term that is a token suffix of `prefix` with the most
/// tokens, then most characters, then lexicographically smallest.
pub fn term_suffix(prefix: &[String], terms: &[String]) -> Option<String> {
    let mut best: Option<&String> = None;
    for term in terms {
        let words: Vec<&str> = term.split(' ').collect();
        if words.len() > prefix.len() {
            continue;
        }
        let tail = &prefix[prefix.len() - words.len()..];
        if tail.iter().zip(&words).all(|(a, b)| a == b) {
            let key = |t: &String| (t.split(' ').count(), t.len(), std::cmp::Reverse(t.clone()));
            if best.is_none_or(|b| key(term) > key(b)) {
                best = Some(term);
            }
        }
    }
    best.cloned()
}

fn is_bracket(t: &str) -> bool {
    matches!(t, "<" | ">" | "<<" | ">>")
}

fn occurs_in(words: &[String], learner: &[String]) -> bool {
    learner.windows(words.len()).any(|w| w == words)
}

/// Repair by exhaustive search over insertion points, for comments without
/// opening brackets. For every closing bracket, each position between the
/// previous bracket and the closer is tried; the widest region that is a
/// lexicon term (`>`) or a learner-sentence phrase of at most six words
/// (`>>`) wins. Returns the repaired tokens and the positions of closers
/// left unmatched, and checks that the result is balanced apart from those.
pub fn repair(tokens: &[String], learner: &[String], terms: &[String]) -> (Vec<String>, Vec<usize>) {
    assert!(tokens.iter().all(|t| t != "<" && t != "<<"), "oracle expects no opening brackets");
    let learner: Vec<String> = learner.iter().map(|t| t.to_lowercase()).collect();
    let mut inserts: Vec<(usize, &str)> = Vec::new();
    let mut unresolved_src: Vec<usize> = Vec::new();
    let mut region_start = 0;
    for (c, tok) in tokens.iter().enumerate() {
        if !is_bracket(tok) {
            continue;
        }
        let mut chosen: Option<usize> = None;
        for j in region_start..c {
            let region = &tokens[j..c];
            let ok = if tok == ">" {
                terms.iter().any(|t| *t == region.join(" "))
            } else {
                let lower: Vec<String> = region.iter().map(|t| t.to_lowercase()).collect();
                region.len() <= 6 && occurs_in(&lower, &learner)
            };
            if ok {
                chosen = Some(j);
                break; // smallest j = widest region
            }
        }
        match chosen {
            Some(j) => inserts.push((j, if tok == ">" { "<" } else { "<<" })),
            None => unresolved_src.push(c),
        }
        region_start = c + 1;
    }

    let mut out = Vec::new();
    let mut unresolved = Vec::new();
    for (i, tok) in tokens.iter().enumerate() {
        for (j, open) in &inserts {
            if *j == i {
                out.push(open.to_string());
            }
        }
        if unresolved_src.contains(&i) {
            unresolved.push(out.len());
        }
        out.push(tok.clone());
    }

    // balance check: every closer except the unresolved ones has a partner
    let mut stack_term = 0i64;
    let mut stack_cite = 0i64;
    for (i, t) in out.iter().enumerate() {
        match t.as_str() {
            "<" => stack_term += 1,
            "<<" => stack_cite += 1,
            ">" | ">>" => {
                let counter = if t == ">" { &mut stack_term } else { &mut stack_cite };
                if *counter > 0 {
                    *counter -= 1;
                } else {
                    assert!(unresolved.contains(&i), "unbalanced closer at {i} in {out:?}");
                }
            }
            _ => {}
        }
    }
    (out, unresolved)
}
