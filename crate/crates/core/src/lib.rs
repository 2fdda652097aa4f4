//! Corpus-level text diversity analysis.
//!
//! The crate groups its functionality the way an analysis usually flows:
//!
//! - [`corpus`] / [`tokenize`]: ingest a collection of texts and tokenize it.
//! - [`tagger`]: Penn Treebank part-of-speech tagging (builtin rules, pretagged
//!   input, or an external process/endpoint).
//! - [`compression`]: gzip compression ratios over text and tag streams.
//! - [`lexical`]: n-gram diversity, MATTR, HD-D and self-repetition.
//! - [`pairwise`]: homogenization scores (Self-BLEU, ROUGE-L, embedding
//!   cosine), remote-clique and Chamfer distances, memoized pair evaluation.
//! - [`patterns`]: POS template extraction/matching and exact repeated-string
//!   search.
//! - [`analysis`]: length control, the all-metrics report and correlation
//!   matrices.

pub mod analysis;
pub mod compression;
pub mod corpus;
mod error;
pub mod lexical;
pub mod pairwise;
pub mod patterns;
pub mod tagger;
pub mod tokenize;
mod vocab;

pub use analysis::{
    compute_all_metrics, compute_metric, correlate, truncate_to_shortest, CorrelationMatrix,
    CorrelationMethod, Metric, MetricReport, MetricsConfig, SystemGroup,
};
pub use compression::{compression_ratio, pos_compression_ratio, CompressionConfig, Compressor};
pub use corpus::{avg_length, concat, ngrams, Corpus, Document, Format, NGram, Source};
pub use error::{EmbeddingError, Error, Result};
pub use lexical::{
    hdd, mattr, ngram_diversity, self_repetition, BoundaryMode, SelfRepetition,
    SelfRepetitionParams,
};
pub use pairwise::{
    chamfer_dist, homogenization, remote_clique, rouge_l, self_bleu, Embedder, EmbeddingProvider,
    Normalization, SimilarityCache, SimilarityKind,
};
pub use patterns::{
    exact_matches, extract_patterns, match_patterns, ExactMatchIndex, Occurrence, PatternIndex,
    PatternMatch,
};
pub use tagger::{TagSequence, Tagger, TaggerSpec};
pub use tokenize::tokenize;
