//! Token/type-family scores: n-gram diversity, MATTR, HD-D and
//! self-repetition.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::vocab::Interned;
use crate::{Error, Result};

/// How document boundaries are treated by n-gram diversity and MATTR.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMode {
    /// n-grams and windows are taken inside each document and pooled.
    #[default]
    PerDocument,
    /// One token stream over the concatenated corpus; n-grams and windows may
    /// span adjacent documents.
    Concatenated,
}

fn streams(interned: &Interned, mode: BoundaryMode) -> Vec<Vec<u32>> {
    match mode {
        BoundaryMode::PerDocument => interned.docs.clone(),
        BoundaryMode::Concatenated => vec![interned.concatenated()],
    }
}

/// Sum over `n = 1..=max_n` of unique / total n-gram counts.
pub fn ngram_diversity(
    corpus: &Corpus,
    max_n: usize,
    lowercase: bool,
    mode: BoundaryMode,
) -> Result<f64> {
    if max_n < 1 {
        return Err(Error::InvalidParameter("max_n must be >= 1".into()));
    }
    let interned = Interned::new(corpus, lowercase);
    let total_tokens = interned.total();
    if total_tokens < max_n {
        return Err(Error::TooShort {
            needed: max_n,
            found: total_tokens,
        });
    }
    let streams = streams(&interned, mode);
    let mut score = 0.0;
    for n in 1..=max_n {
        let mut unique: HashSet<&[u32]> = HashSet::new();
        let mut total = 0usize;
        for s in &streams {
            for w in s.windows(n) {
                unique.insert(w);
                total += 1;
            }
        }
        if total == 0 {
            // every document is shorter than n
            let longest = streams.iter().map(Vec::len).max().unwrap_or(0);
            return Err(Error::TooShort {
                needed: n,
                found: longest,
            });
        }
        score += unique.len() as f64 / total as f64;
    }
    Ok(score)
}

/// Moving-average type-token ratio with stride-1 windows.
///
/// When the pooled token count does not exceed `window` the result is the
/// plain type-token ratio of the whole stream. In per-document mode a
/// document shorter than the window contributes its own TTR as one window.
pub fn mattr(corpus: &Corpus, window: usize, lowercase: bool, mode: BoundaryMode) -> Result<f64> {
    if window < 1 {
        return Err(Error::InvalidParameter("window must be >= 1".into()));
    }
    let interned = Interned::new(corpus, lowercase);
    let total = interned.total();
    if total <= window {
        let types: HashSet<u32> = interned.docs.iter().flatten().copied().collect();
        return Ok(types.len() as f64 / total as f64);
    }
    let mut counts = vec![0u32; interned.vocab_size];
    let mut sum = 0.0;
    let mut windows = 0usize;
    for s in streams(&interned, mode) {
        if s.is_empty() {
            continue;
        }
        if s.len() <= window {
            let types: HashSet<u32> = s.iter().copied().collect();
            sum += types.len() as f64 / s.len() as f64;
            windows += 1;
            continue;
        }
        let mut distinct = 0u64;
        for &t in &s[..window] {
            if counts[t as usize] == 0 {
                distinct += 1;
            }
            counts[t as usize] += 1;
        }
        let mut distinct_sum = distinct;
        for i in window..s.len() {
            let out = s[i - window] as usize;
            counts[out] -= 1;
            if counts[out] == 0 {
                distinct -= 1;
            }
            let inc = s[i] as usize;
            if counts[inc] == 0 {
                distinct += 1;
            }
            counts[inc] += 1;
            distinct_sum += distinct;
        }
        let n_windows = s.len() - window + 1;
        sum += distinct_sum as f64 / window as f64;
        windows += n_windows;
        for &t in &s[s.len() - window..] {
            counts[t as usize] = 0;
        }
    }
    Ok(sum / windows as f64)
}

/// Probability that a type with `freq` occurrences is absent from a
/// `sample`-token draw without replacement out of `total` tokens:
/// `C(total - freq, sample) / C(total, sample)`.
fn hypergeometric_absent(total: usize, freq: usize, sample: usize) -> f64 {
    if total - freq < sample {
        return 0.0;
    }
    let mut p = 1.0;
    for i in 0..sample {
        p *= (total - freq - i) as f64 / (total - i) as f64;
    }
    p
}

/// HD-D: expected type-token ratio of a random `sample`-token draw
/// (hypergeometric, exact).
pub fn hdd(corpus: &Corpus, sample: usize, lowercase: bool) -> Result<f64> {
    if sample < 1 {
        return Err(Error::InvalidParameter("sample must be >= 1".into()));
    }
    let interned = Interned::new(corpus, lowercase);
    let total = interned.total();
    if total < sample {
        return Err(Error::TooShort {
            needed: sample,
            found: total,
        });
    }
    let mut freq = vec![0usize; interned.vocab_size];
    for &t in interned.docs.iter().flatten() {
        freq[t as usize] += 1;
    }
    // many types share a frequency
    let mut by_freq: HashMap<usize, usize> = HashMap::new();
    for &f in &freq {
        *by_freq.entry(f).or_default() += 1;
    }
    let mut keys: Vec<_> = by_freq.into_iter().collect();
    keys.sort_unstable();
    let score = keys
        .into_iter()
        .map(|(f, n_types)| n_types as f64 * (1.0 - hypergeometric_absent(total, f, sample)))
        .sum::<f64>();
    Ok(score / sample as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelfRepetitionParams {
    pub n: usize,
    pub per_document: bool,
    pub lowercase: bool,
}

impl Default for SelfRepetitionParams {
    fn default() -> Self {
        Self {
            n: 4,
            per_document: false,
            lowercase: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfRepetition {
    /// Mean per-document score.
    pub score: f64,
    /// `(document id, score)` in corpus order, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_document: Option<Vec<(String, f64)>>,
}

/// Self-repetition: for each document, `ln(1 + Σ_i N_i)` where the sum runs
/// over every n-gram position of the document and `N_i` counts the other
/// documents containing that n-gram; averaged over documents.
pub fn self_repetition(corpus: &Corpus, params: &SelfRepetitionParams) -> Result<SelfRepetition> {
    if params.n < 1 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    if corpus.len() < 2 {
        return Err(Error::TooFewDocuments {
            needed: 2,
            found: corpus.len(),
        });
    }
    let interned = Interned::new(corpus, params.lowercase);
    let n = params.n;
    let mut doc_freq: HashMap<&[u32], u64> = HashMap::new();
    for doc in &interned.docs {
        let distinct: HashSet<&[u32]> = doc.windows(n).collect();
        for g in distinct {
            *doc_freq.entry(g).or_default() += 1;
        }
    }
    let per_doc: Vec<f64> = interned
        .docs
        .iter()
        .map(|doc| {
            let shared: u64 = doc.windows(n).map(|g| doc_freq[g] - 1).sum();
            ((shared + 1) as f64).ln()
        })
        .collect();
    let score = per_doc.iter().sum::<f64>() / per_doc.len() as f64;
    let per_document = params.per_document.then(|| {
        corpus
            .ids()
            .map(str::to_string)
            .zip(per_doc.iter().copied())
            .collect()
    });
    Ok(SelfRepetition {
        score,
        per_document,
    })
}
