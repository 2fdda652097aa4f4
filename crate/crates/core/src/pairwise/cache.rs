use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

/// Symmetric memo of pair scores keyed by unordered document-id pairs.
///
/// One cache belongs to one corpus and one similarity configuration (its
/// fingerprint). Entries are written once and never replaced.
#[derive(Debug)]
pub struct SimilarityCache {
    fingerprint: String,
    entries: RwLock<HashMap<(String, String), f64>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    pub entries: usize,
    pub hits: u64,
    pub misses: u64,
}

fn key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl SimilarityCache {
    pub fn new(fingerprint: impl Into<String>) -> Self {
        Self {
            fingerprint: fingerprint.into(),
            entries: RwLock::new(HashMap::new()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn lookup(&self, a: &str, b: &str) -> Option<f64> {
        self.entries
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(&key(a, b))
            .copied()
    }

    pub fn contains(&self, a: &str, b: &str) -> bool {
        self.lookup(a, b).is_some()
    }

    /// Inserts unless present; returns whether the value was stored.
    pub fn insert(&self, a: &str, b: &str, score: f64) -> bool {
        let mut map = self.entries.write().unwrap_or_else(|e| e.into_inner());
        match map.entry(key(a, b)) {
            std::collections::hash_map::Entry::Occupied(_) => false,
            std::collections::hash_map::Entry::Vacant(v) => {
                v.insert(score);
                true
            }
        }
    }

    pub(crate) fn insert_many(&self, items: impl IntoIterator<Item = (String, String, f64)>) {
        let mut map = self.entries.write().unwrap_or_else(|e| e.into_inner());
        for (a, b, s) in items {
            map.entry(key(&a, &b)).or_insert(s);
        }
    }

    pub(crate) fn record(&self, hits: u64, misses: u64) {
        self.hits.fetch_add(hits, Ordering::Relaxed);
        self.misses.fetch_add(misses, Ordering::Relaxed);
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            entries: self.len(),
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
        }
    }

    /// Ordered copy of every entry.
    pub fn snapshot(&self) -> BTreeMap<(String, String), f64> {
        self.entries
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .iter()
            .map(|(k, v)| (k.clone(), *v))
            .collect()
    }
}
