//! Synthetic corpora for the benchmarks.

use divkit_core::Corpus;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: &[&str] = &[
    "the", "a", "model", "writes", "short", "stories", "about", "quiet", "towns", "and", "rivers",
    "near", "old", "bridges", "where", "people", "walk", "slowly", "every", "morning", "before",
    "work", "begins", "with", "coffee", "bread", "fresh", "news", "from", "distant", "cities",
    "under", "grey", "skies", ".", ",", "they", "she", "he", "it", "was", "is", "will", "be",
    "green", "bright", "long", "summer",
];

/// `docs` documents of roughly `len` tokens each, reproducible from `seed`.
pub fn synthetic_corpus(docs: usize, len: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let texts: Vec<String> = (0..docs)
        .map(|_| {
            let n = rng.random_range(len * 9 / 10..=len * 11 / 10);
            (0..n)
                .map(|_| *WORDS.choose(&mut rng).unwrap())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    Corpus::from_texts(texts).expect("non-empty")
}
