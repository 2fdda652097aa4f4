use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use divkit_core::{Corpus, SimilarityCache};
use tokio::sync::OnceCell;

use crate::metrics::MetricsJob;

pub type PatternKey = (usize, usize, usize);
pub type ExactKey = (usize, usize);

type Slot = Arc<OnceCell<Arc<serde_json::Value>>>;

/// One uploaded or demo corpus and everything derived from it. Lives only in
/// memory.
pub struct Session {
    pub id: String,
    pub corpus: Corpus,
    pub created: Instant,
    pub(crate) tagged: OnceCell<Corpus>,
    patterns: Mutex<HashMap<PatternKey, Slot>>,
    exact: Mutex<HashMap<ExactKey, Slot>>,
    pub(crate) metrics: MetricsJob,
}

impl Session {
    pub fn new(id: String, corpus: Corpus, bleu_fingerprint: String) -> Self {
        Self {
            id,
            corpus,
            created: Instant::now(),
            tagged: OnceCell::new(),
            patterns: Mutex::new(HashMap::new()),
            exact: Mutex::new(HashMap::new()),
            metrics: MetricsJob::new(SimilarityCache::new(bleu_fingerprint)),
        }
    }

    /// Shared slot for a pattern query; concurrent callers with the same key
    /// await one computation.
    pub(crate) fn pattern_slot(&self, key: PatternKey) -> Slot {
        lock(&self.patterns).entry(key).or_default().clone()
    }

    pub(crate) fn exact_slot(&self, key: ExactKey) -> Slot {
        lock(&self.exact).entry(key).or_default().clone()
    }
}

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

/// Session table with a fixed lifetime per entry.
pub struct SessionStore {
    ttl: Duration,
    sessions: Mutex<HashMap<String, Arc<Session>>>,
}

impl SessionStore {
    pub fn new(ttl: Duration) -> Self {
        Self {
            ttl,
            sessions: Mutex::new(HashMap::new()),
        }
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    pub fn insert(&self, session: Session) -> Arc<Session> {
        let s = Arc::new(session);
        lock(&self.sessions).insert(s.id.clone(), s.clone());
        s
    }

    /// Live session by id; an expired one is dropped on the spot.
    pub fn get(&self, id: &str) -> Option<Arc<Session>> {
        let mut map = lock(&self.sessions);
        match map.get(id) {
            Some(s) if s.created.elapsed() < self.ttl => Some(s.clone()),
            Some(_) => {
                map.remove(id);
                None
            }
            None => None,
        }
    }

    pub fn remove(&self, id: &str) -> bool {
        lock(&self.sessions).remove(id).is_some()
    }

    /// Drops every expired session; returns how many went.
    pub fn sweep(&self) -> usize {
        let mut map = lock(&self.sessions);
        let before = map.len();
        map.retain(|_, s| s.created.elapsed() < self.ttl);
        before - map.len()
    }

    pub fn len(&self) -> usize {
        lock(&self.sessions).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn new_session_id() -> String {
    format!("{:032x}", rand::random::<u128>())
}
