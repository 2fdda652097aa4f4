//! POS template extraction/matching and exact repeated-string search.
//!
//! Both indexes map an n-gram (of tags or of surface tokens) to every place
//! it occurs. Spans are token indices `[start, end)` into the document.

use std::collections::{HashMap, HashSet};
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::tagger::Tagger;
use crate::{Error, Result};

/// n range the exploration UI offers for both tabs.
pub const UI_N_RANGE: RangeInclusive<usize> = 2..=10;

/// Template default: "appears in more than 2 texts".
pub const DEFAULT_PATTERN_MIN_DOCS: usize = 3;
pub const DEFAULT_TOP_N: usize = 100;
pub const DEFAULT_EXACT_MIN_DOCS: usize = 2;

pub fn check_ui_n(n: usize) -> Result<()> {
    if UI_N_RANGE.contains(&n) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "n = {n} outside {}..={}",
            UI_N_RANGE.start(),
            UI_N_RANGE.end()
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Occurrence {
    pub doc: String,
    pub start: usize,
    pub end: usize,
    /// Original text covering the span.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternEntry {
    /// Tags for template indexes, tokens for exact-match indexes.
    pub pattern: Vec<String>,
    pub doc_count: usize,
    pub occurrences: Vec<Occurrence>,
}

impl PatternEntry {
    /// Total occurrences across the corpus.
    pub fn frequency(&self) -> usize {
        self.occurrences.len()
    }

    pub fn key(&self) -> String {
        self.pattern.join(" ")
    }
}

/// Most frequent POS n-grams shared by at least `min_docs` documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternIndex {
    pub n: usize,
    pub min_docs: usize,
    pub top_n: usize,
    /// Id of the tagger the index was built with.
    pub tagger: String,
    pub patterns: Vec<PatternEntry>,
}

/// Token n-grams shared by at least `min_docs` documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactMatchIndex {
    pub n: usize,
    pub min_docs: usize,
    #[serde(default)]
    pub lowercase: bool,
    pub patterns: Vec<PatternEntry>,
}

/// One template hit inside a document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternMatch {
    pub pattern: Vec<String>,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

struct Gathered {
    occurrences: Vec<Occurrence>,
    docs: usize,
}

/// Collects every n-gram of `seqs[d]` with its occurrences, merging in
/// document order.
fn gather(corpus: &Corpus, seqs: &[Vec<String>], n: usize) -> HashMap<Vec<String>, Gathered> {
    let per_doc: Vec<Vec<(Vec<String>, Occurrence)>> = corpus
        .documents()
        .par_iter()
        .zip(seqs.par_iter())
        .map(|(doc, seq)| {
            seq.windows(n)
                .enumerate()
                .map(|(start, w)| {
                    (
                        w.to_vec(),
                        Occurrence {
                            doc: doc.id().to_string(),
                            start,
                            end: start + n,
                            text: doc.surface(start, start + n).to_string(),
                        },
                    )
                })
                .collect()
        })
        .collect();
    let mut map: HashMap<Vec<String>, Gathered> = HashMap::new();
    for doc_entries in per_doc {
        let mut seen_here: HashSet<Vec<String>> = HashSet::new();
        for (gram, occ) in doc_entries {
            let first_in_doc = seen_here.insert(gram.clone());
            let g = map.entry(gram).or_insert_with(|| Gathered {
                occurrences: Vec::new(),
                docs: 0,
            });
            if first_in_doc {
                g.docs += 1;
            }
            g.occurrences.push(occ);
        }
    }
    map
}

fn entries(map: HashMap<Vec<String>, Gathered>, min_docs: usize) -> Vec<PatternEntry> {
    map.into_iter()
        .filter(|(_, g)| g.docs >= min_docs)
        .map(|(pattern, g)| PatternEntry {
            pattern,
            doc_count: g.docs,
            occurrences: g.occurrences,
        })
        .collect()
}

/// Top `top_n` POS n-grams by total occurrences among those found in at
/// least `min_docs` documents. Ties go to the lexicographically smaller
/// pattern string.
pub fn extract_patterns(
    corpus: &Corpus,
    tagger: &Tagger,
    n: usize,
    top_n: usize,
    min_docs: usize,
) -> Result<PatternIndex> {
    if n < 1 {
        return Err(Error::InvalidParameter(
            "pattern length must be >= 1".into(),
        ));
    }
    let tag_seqs = corpus
        .documents()
        .iter()
        .map(|d| Ok(tagger.tags_for(d)?.tags().to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let mut patterns = entries(gather(corpus, &tag_seqs, n), min_docs);
    let mut keyed: Vec<(String, PatternEntry)> = patterns.drain(..).map(|e| (e.key(), e)).collect();
    keyed.sort_by(|(ka, a), (kb, b)| b.frequency().cmp(&a.frequency()).then_with(|| ka.cmp(kb)));
    keyed.truncate(top_n);
    Ok(PatternIndex {
        n,
        min_docs,
        top_n,
        tagger: tagger.id(),
        patterns: keyed.into_iter().map(|(_, e)| e).collect(),
    })
}

/// Every position of `doc` whose tag n-gram is a retained pattern, left to
/// right. `doc` must carry tags from the index's tagger.
pub fn match_patterns(doc: &Document, index: &PatternIndex) -> Result<Vec<PatternMatch>> {
    let tags = doc
        .tags()
        .ok_or_else(|| Error::Untagged(doc.id().to_string()))?;
    if tags.tagger() != index.tagger {
        return Err(Error::TaggerMismatch {
            index: index.tagger.clone(),
            document: tags.tagger().to_string(),
        });
    }
    let wanted: HashSet<&[String]> = index
        .patterns
        .iter()
        .map(|e| e.pattern.as_slice())
        .collect();
    Ok(tags
        .tags()
        .windows(index.n)
        .enumerate()
        .filter(|(_, w)| wanted.contains(w))
        .map(|(start, w)| PatternMatch {
            pattern: w.to_vec(),
            start,
            end: start + index.n,
            text: doc.surface(start, start + index.n).to_string(),
        })
        .collect())
}

/// Like [`match_patterns`], tagging `doc` first when it lacks suitable tags.
pub fn match_patterns_with(
    doc: &Document,
    index: &PatternIndex,
    tagger: &Tagger,
) -> Result<Vec<PatternMatch>> {
    if tagger.id() != index.tagger {
        return Err(Error::TaggerMismatch {
            index: index.tagger.clone(),
            document: tagger.id(),
        });
    }
    let tags = tagger.tags_for(doc)?.into_owned();
    match_patterns(&doc.with_tags(tags)?, index)
}

/// Token n-grams present in at least `min_docs` documents, sorted by
/// document count, then frequency (both descending), then pattern.
pub fn exact_matches(
    corpus: &Corpus,
    n: usize,
    min_docs: usize,
    lowercase: bool,
) -> Result<ExactMatchIndex> {
    if n < 1 {
        return Err(Error::InvalidParameter("string length must be >= 1".into()));
    }
    if min_docs < 2 {
        return Err(Error::InvalidParameter("min_docs must be >= 2".into()));
    }
    let seqs: Vec<Vec<String>> = corpus
        .documents()
        .iter()
        .map(|d| {
            d.tokens()
                .iter()
                .map(|t| {
                    if lowercase {
                        t.to_lowercase()
                    } else {
                        t.clone()
                    }
                })
                .collect()
        })
        .collect();
    let mut keyed: Vec<(String, PatternEntry)> = entries(gather(corpus, &seqs, n), min_docs)
        .into_iter()
        .map(|e| (e.key(), e))
        .collect();
    keyed.sort_by(|(ka, a), (kb, b)| {
        b.doc_count
            .cmp(&a.doc_count)
            .then_with(|| b.frequency().cmp(&a.frequency()))
            .then_with(|| ka.cmp(kb))
    });
    Ok(ExactMatchIndex {
        n,
        min_docs,
        lowercase,
        patterns: keyed.into_iter().map(|(_, e)| e).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(texts: &[&str]) -> Corpus {
        Corpus::from_texts(texts.iter().copied()).unwrap()
    }

    #[test]
    fn no_shared_pattern_gives_empty_index() {
        let corpus = c(&["the dog", "run quickly", "the cat"]);
        let idx = extract_patterns(&corpus, &Tagger::builtin(), 2, 100, 3).unwrap();
        assert!(idx.patterns.is_empty());
    }

    #[test]
    fn shared_template_retained() {
        let corpus = c(&["the dog runs", "a cat sleeps", "this bird sings"]);
        let idx = extract_patterns(&corpus, &Tagger::builtin(), 3, 100, 3).unwrap();
        assert_eq!(idx.patterns.len(), 1);
        let e = &idx.patterns[0];
        assert_eq!(e.pattern, ["DT", "NN", "VBZ"]);
        assert_eq!(e.doc_count, 3);
        assert_eq!(e.frequency(), 3);
        assert_eq!(e.occurrences[1].text, "a cat sleeps");
    }

    #[test]
    fn match_examples() {
        let corpus = c(&["the dog the cat", "a man", "the car"]);
        let tagger = Tagger::builtin();
        let idx = extract_patterns(&corpus, &tagger, 2, 100, 3).unwrap();
        assert_eq!(idx.patterns[0].pattern, ["DT", "NN"]);
        let doc = corpus.tagged(&tagger).unwrap().documents()[0].clone();
        let m = match_patterns(&doc, &idx).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(
            (m[0].start, m[0].end, m[0].text.as_str()),
            (0, 2, "the dog")
        );
        assert_eq!(
            (m[1].start, m[1].end, m[1].text.as_str()),
            (2, 4, "the cat")
        );
        // whole-document match
        let doc = corpus.tagged(&tagger).unwrap().documents()[1].clone();
        assert_eq!(match_patterns(&doc, &idx).unwrap().len(), 1);
    }

    #[test]
    fn match_requires_same_tagger() {
        let corpus = c(&["the dog", "a cat", "the car"]);
        let idx = extract_patterns(&corpus, &Tagger::builtin(), 2, 100, 3).unwrap();
        let untagged = corpus.documents()[0].clone();
        assert!(matches!(
            match_patterns(&untagged, &idx),
            Err(Error::Untagged(_))
        ));
        let pre = Document::from_pretagged("p", "the/DT dog/NN").unwrap();
        assert!(matches!(
            match_patterns(&pre, &idx),
            Err(Error::TaggerMismatch { .. })
        ));
        assert_eq!(
            match_patterns_with(&untagged, &idx, &Tagger::builtin())
                .unwrap()
                .len(),
            1
        );
    }

    #[test]
    fn demo_texts_exact_match() {
        let corpus = c(&[
            "I enjoy walking with my cute dog...",
            "I enjoy walking outside with...",
            "I enjoy jogging on a sunny...",
        ]);
        let idx = exact_matches(&corpus, 3, 2, false).unwrap();
        let two: Vec<_> = idx.patterns.iter().filter(|e| e.doc_count == 2).collect();
        assert_eq!(two.len(), 1);
        assert_eq!(two[0].pattern, ["I", "enjoy", "walking"]);
        // the trailing ellipsis is shared by all three
        assert_eq!(idx.patterns[0].pattern, [".", ".", "."]);
        assert_eq!(idx.patterns[0].doc_count, 3);
    }

    #[test]
    fn exact_match_case_fold() {
        let corpus = c(&["Big Cat here", "big cat there"]);
        assert!(exact_matches(&corpus, 2, 2, false)
            .unwrap()
            .patterns
            .is_empty());
        let idx = exact_matches(&corpus, 2, 2, true).unwrap();
        assert_eq!(idx.patterns[0].pattern, ["big", "cat"]);
        assert_eq!(idx.patterns[0].occurrences[0].text, "Big Cat");
    }

    #[test]
    fn parameter_checks() {
        let corpus = c(&["a b", "a b"]);
        assert!(exact_matches(&corpus, 2, 1, false).is_err());
        assert!(exact_matches(&corpus, 0, 2, false).is_err());
        assert!(check_ui_n(11).is_err());
        assert!(check_ui_n(1).is_err());
        assert!(check_ui_n(4).is_ok());
    }

    #[test]
    fn json_layout() {
        let corpus = c(&["a b", "a b"]);
        let idx = exact_matches(&corpus, 2, 2, false).unwrap();
        let v = serde_json::to_value(&idx).unwrap();
        assert_eq!(v["n"], 2);
        assert_eq!(v["min_docs"], 2);
        assert_eq!(v["patterns"][0]["pattern"], serde_json::json!(["a", "b"]));
        assert_eq!(v["patterns"][0]["doc_count"], 2);
        assert_eq!(v["patterns"][0]["occurrences"][1]["doc"], "1");
        assert_eq!(v["patterns"][0]["occurrences"][1]["text"], "a b");
    }
}
