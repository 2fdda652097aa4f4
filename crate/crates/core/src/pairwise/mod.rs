//! Pairwise similarity scores.
//!
//! Homogenization averages a document-pair similarity over every ordered
//! pair of distinct documents. Each unordered pair is scored once: symmetric
//! similarities directly, asymmetric ones (BLEU, ROUGE-L with `β ≠ 1`) as the
//! mean of both directions, so the ordered-pair mean equals the unordered
//! mean. Pair scores are memoized in a [`SimilarityCache`] and computed on a
//! bounded worker pool.

mod bleu;
mod cache;
mod embed;
mod rouge;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bleu::{bleu, DEFAULT_EPSILON, DEFAULT_MAX_ORDER};
pub use cache::{CacheStats, SimilarityCache};
pub use embed::{
    cosine, embed, Embedder, EmbeddingProvider, EmbeddingVector, RemoteEmbedder, StubEmbedder,
    ENV_ENDPOINT, ENV_MODEL, ENV_TOKEN,
};
pub use rouge::{lcs_len, rouge_l_tokens};

use crate::corpus::{Corpus, Document};
use crate::vocab::Interned;
use crate::{Error, Result};

use bleu::BleuTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SimilarityKind {
    Bleu {
        max_order: usize,
        epsilon: f64,
        lowercase: bool,
    },
    #[serde(rename = "rougeL")]
    RougeL { beta: f64, lowercase: bool },
    /// `(1 + cos) / 2` between document embeddings.
    EmbedCosine,
}

impl SimilarityKind {
    pub fn bleu() -> Self {
        SimilarityKind::Bleu {
            max_order: DEFAULT_MAX_ORDER,
            epsilon: DEFAULT_EPSILON,
            lowercase: false,
        }
    }

    pub fn rouge_l() -> Self {
        SimilarityKind::RougeL {
            beta: 1.0,
            lowercase: false,
        }
    }

    /// Identifies the configuration a cache was filled with.
    pub fn fingerprint(&self) -> String {
        match self {
            SimilarityKind::Bleu {
                max_order,
                epsilon,
                lowercase,
            } => format!("bleu:{max_order}:{epsilon:e}:{lowercase}"),
            SimilarityKind::RougeL { beta, lowercase } => format!("rougeL:{beta}:{lowercase}"),
            SimilarityKind::EmbedCosine => "embed-cosine".to_string(),
        }
    }
}

/// How the ordered-pair sum is normalized.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Mean over the `|D|(|D|-1)` ordered pairs; in `[0, 1]`.
    #[default]
    MeanPairs,
    /// Ordered-pair sum divided by `|D| - 1`; equals `MeanPairs × |D|`.
    Literal,
}

/// Scores unordered document pairs by corpus position.
pub trait PairScorer: Sync {
    /// Must match the fingerprint of any cache the scorer fills.
    fn fingerprint(&self) -> String;

    /// Symmetric score of documents `i` and `j` (`i < j`).
    fn score(&self, i: usize, j: usize) -> Result<f64>;
}

enum Backend {
    Bleu(BleuTable),
    Rouge { docs: Vec<Vec<u32>>, beta: f64 },
    Cosine(Vec<Vec<f32>>),
}

/// Per-corpus precomputation for one [`SimilarityKind`].
pub struct PreparedSimilarity {
    kind: SimilarityKind,
    backend: Backend,
}

impl PreparedSimilarity {
    pub fn new(corpus: &Corpus, kind: SimilarityKind, embedder: Option<&Embedder>) -> Result<Self> {
        let backend = match kind {
            SimilarityKind::Bleu {
                max_order,
                epsilon,
                lowercase,
            } => {
                if max_order < 1 {
                    return Err(Error::InvalidParameter(
                        "BLEU max order must be >= 1".into(),
                    ));
                }
                Backend::Bleu(BleuTable::new(
                    &Interned::new(corpus, lowercase).docs,
                    max_order,
                    epsilon,
                ))
            }
            SimilarityKind::RougeL { beta, lowercase } => {
                #[allow(clippy::neg_cmp_op_on_partial_ord)]
                if !(beta > 0.0) {
                    return Err(Error::InvalidParameter("ROUGE-L beta must be > 0".into()));
                }
                Backend::Rouge {
                    docs: Interned::new(corpus, lowercase).docs,
                    beta,
                }
            }
            SimilarityKind::EmbedCosine => {
                let embedder = embedder.ok_or_else(|| {
                    Error::InvalidParameter(
                        "embedding similarity needs an embedding provider".into(),
                    )
                })?;
                Backend::Cosine(document_vectors(corpus, embedder)?)
            }
        };
        Ok(Self { kind, backend })
    }

    pub fn kind(&self) -> SimilarityKind {
        self.kind
    }

    /// Directed similarity with `i` as hypothesis/candidate and `j` as
    /// reference.
    pub fn directed(&self, i: usize, j: usize) -> f64 {
        match &self.backend {
            Backend::Bleu(t) => t.score(i, j),
            Backend::Rouge { docs, beta } => rouge_l_tokens(&docs[i], &docs[j], *beta),
            Backend::Cosine(v) => (1.0 + cosine(&v[i], &v[j])) / 2.0,
        }
    }

    fn symmetric(&self) -> bool {
        match &self.backend {
            Backend::Bleu(_) => false,
            Backend::Rouge { beta, .. } => *beta == 1.0,
            Backend::Cosine(_) => true,
        }
    }
}

impl PairScorer for PreparedSimilarity {
    fn fingerprint(&self) -> String {
        self.kind.fingerprint()
    }

    fn score(&self, i: usize, j: usize) -> Result<f64> {
        Ok(if self.symmetric() {
            self.directed(i, j)
        } else {
            (self.directed(i, j) + self.directed(j, i)) / 2.0
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseStats {
    pub pairs: usize,
    pub hits: usize,
    pub misses: usize,
}

/// Rayon pool with `workers` threads; zero means all available CPUs.
pub fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot build worker pool: {e}")))
}

const CHUNK: usize = 4096;

/// Fills `cache` with every unordered pair of `corpus`. Cached pairs are not
/// recomputed. Work proceeds in chunks; if scoring fails, chunks finished
/// before the failure stay cached and a later call resumes from there.
pub fn pairwise_map(
    corpus: &Corpus,
    scorer: &dyn PairScorer,
    cache: &SimilarityCache,
    workers: usize,
) -> Result<PairwiseStats> {
    if scorer.fingerprint() != cache.fingerprint() {
        return Err(Error::InvalidParameter(format!(
            "cache holds `{}` scores, scorer produces `{}`",
            cache.fingerprint(),
            scorer.fingerprint()
        )));
    }
    let ids: Vec<&str> = corpus.ids().collect();
    let n = ids.len();
    let pairs = n * n.saturating_sub(1) / 2;
    let missing: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| !cache.contains(ids[i], ids[j]))
        .collect();
    let misses = missing.len();
    let hits = pairs - misses;
    cache.record(hits as u64, 0);
    if !missing.is_empty() {
        let pool = worker_pool(workers)?;
        for chunk in missing.chunks(CHUNK) {
            let scores: Vec<f64> = pool.install(|| {
                chunk
                    .par_iter()
                    .map(|&(i, j)| scorer.score(i, j))
                    .collect::<Result<Vec<f64>>>()
            })?;
            cache.record(0, chunk.len() as u64);
            cache.insert_many(
                chunk
                    .iter()
                    .zip(scores)
                    .map(|(&(i, j), s)| (ids[i].to_string(), ids[j].to_string(), s)),
            );
        }
    }
    Ok(PairwiseStats {
        pairs,
        hits,
        misses,
    })
}

/// Options for [`homogenization_with`].
#[derive(Default, Clone, Copy)]
pub struct PairwiseOptions<'a> {
    /// Worker threads; zero means all CPUs.
    pub workers: usize,
    pub cache: Option<&'a SimilarityCache>,
    pub embedder: Option<&'a Embedder>,
}

/// Homogenization with default options (all CPUs, fresh cache).
pub fn homogenization(
    corpus: &Corpus,
    sim: SimilarityKind,
    normalization: Normalization,
) -> Result<f64> {
    homogenization_with(corpus, sim, normalization, &PairwiseOptions::default())
}

pub fn homogenization_with(
    corpus: &Corpus,
    sim: SimilarityKind,
    normalization: Normalization,
    options: &PairwiseOptions<'_>,
) -> Result<f64> {
    let n = corpus.len();
    if n < 2 {
        return Err(Error::TooFewDocuments {
            needed: 2,
            found: n,
        });
    }
    let local;
    let cache = match options.cache {
        Some(c) => c,
        None => {
            local = SimilarityCache::new(sim.fingerprint());
            &local
        }
    };
    let ids: Vec<&str> = corpus.ids().collect();
    let complete = (0..n).all(|i| (i + 1..n).all(|j| cache.contains(ids[i], ids[j])));
    if complete {
        cache.record((n * (n - 1) / 2) as u64, 0);
    } else {
        let scorer = PreparedSimilarity::new(corpus, sim, options.embedder)?;
        pairwise_map(corpus, &scorer, cache, options.workers)?;
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            sum += cache
                .lookup(ids[i], ids[j])
                .expect("pairwise_map fills every pair");
        }
    }
    let unordered = (n * (n - 1) / 2) as f64;
    Ok(match normalization {
        Normalization::MeanPairs => sum / unordered,
        Normalization::Literal => 2.0 * sum / (n - 1) as f64,
    })
}

/// Self-BLEU: homogenization with single-reference BLEU.
pub fn self_bleu(corpus: &Corpus) -> Result<f64> {
    homogenization(corpus, SimilarityKind::bleu(), Normalization::MeanPairs)
}

/// ROUGE-L F-measure between two documents' token sequences.
pub fn rouge_l(a: &Document, b: &Document, beta: f64) -> f64 {
    rouge_l_tokens(a.tokens(), b.tokens(), beta)
}

fn document_vectors(corpus: &Corpus, embedder: &Embedder) -> Result<Vec<Vec<f32>>> {
    let texts: Vec<String> = corpus
        .documents()
        .iter()
        .map(|d| d.text().to_string())
        .collect();
    Ok(embedder
        .embed(&texts)?
        .into_iter()
        .map(|v| v.values)
        .collect())
}

fn distance_rows(corpus: &Corpus, embedder: &Embedder) -> Result<Vec<Vec<f64>>> {
    let n = corpus.len();
    if n < 2 {
        return Err(Error::TooFewDocuments {
            needed: 2,
            found: n,
        });
    }
    let v = document_vectors(corpus, embedder)?;
    Ok((0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| 1.0 - cosine(&v[i], &v[j]))
                .collect()
        })
        .collect())
}

/// Mean over documents of the mean cosine distance to every other document.
pub fn remote_clique(corpus: &Corpus, embedder: &Embedder) -> Result<f64> {
    let rows = distance_rows(corpus, embedder)?;
    let n = rows.len() as f64;
    Ok(rows
        .iter()
        .map(|r| r.iter().sum::<f64>() / r.len() as f64)
        .sum::<f64>()
        / n)
}

/// Mean over documents of the smallest cosine distance to another document.
pub fn chamfer_dist(corpus: &Corpus, embedder: &Embedder) -> Result<f64> {
    let rows = distance_rows(corpus, embedder)?;
    let n = rows.len() as f64;
    Ok(rows
        .iter()
        .map(|r| r.iter().copied().fold(f64::INFINITY, f64::min))
        .sum::<f64>()
        / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn c(texts: &[&str]) -> Corpus {
        Corpus::from_texts(texts.iter().copied()).unwrap()
    }

    #[test]
    fn identical_docs_self_bleu_one() {
        let v = self_bleu(&c(&["the cat sat", "the cat sat", "the cat sat"])).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_rouge_zero() {
        let v = homogenization(
            &c(&["a b", "c d", "e f"]),
            SimilarityKind::rouge_l(),
            Normalization::MeanPairs,
        )
        .unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn literal_is_mean_times_size() {
        let corpus = c(&["a b c", "a b d", "x b c d"]);
        let mean =
            homogenization(&corpus, SimilarityKind::rouge_l(), Normalization::MeanPairs).unwrap();
        let lit =
            homogenization(&corpus, SimilarityKind::rouge_l(), Normalization::Literal).unwrap();
        assert!((lit - 3.0 * mean).abs() < 1e-12);
    }

    #[test]
    fn needs_two_docs() {
        assert!(matches!(
            self_bleu(&c(&["a b"])),
            Err(Error::TooFewDocuments { .. })
        ));
    }

    #[test]
    fn cache_fingerprint_checked() {
        let corpus = c(&["a b", "b c"]);
        let scorer = PreparedSimilarity::new(&corpus, SimilarityKind::bleu(), None).unwrap();
        let cache = SimilarityCache::new("other");
        assert!(pairwise_map(&corpus, &scorer, &cache, 1).is_err());
    }

    #[test]
    fn embed_kind_requires_provider() {
        let corpus = c(&["a b", "b c"]);
        assert!(homogenization(
            &corpus,
            SimilarityKind::EmbedCosine,
            Normalization::MeanPairs
        )
        .is_err());
        let e = Embedder::new(Arc::new(StubEmbedder::new(16, 0)));
        let opts = PairwiseOptions {
            embedder: Some(&e),
            ..Default::default()
        };
        let v = homogenization_with(
            &c(&["a b", "a b"]),
            SimilarityKind::EmbedCosine,
            Normalization::MeanPairs,
            &opts,
        )
        .unwrap();
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rouge_l_on_documents() {
        let a = Document::new("a", "a b c d");
        let b = Document::new("b", "a c d");
        assert!((rouge_l(&a, &b, 1.0) - 6.0 / 7.0).abs() < 1e-12);
        assert_eq!(rouge_l(&a, &Document::new("e", ""), 1.0), 0.0);
    }

    #[test]
    fn identical_docs_zero_distance() {
        let e = Embedder::new(Arc::new(StubEmbedder::new(32, 3)));
        let corpus = c(&["same words here", "same words here", "same words here"]);
        assert!(remote_clique(&corpus, &e).unwrap().abs() < 1e-9);
        assert!(chamfer_dist(&corpus, &e).unwrap().abs() < 1e-9);
    }
}
