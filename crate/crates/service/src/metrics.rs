use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

use divkit_core::pairwise::{homogenization_with, PairwiseOptions};
use divkit_core::{compute_metric, Metric, SimilarityCache, Tagger};
use serde::Serialize;
use tokio::sync::OnceCell;

use crate::session::Session;
use crate::AppState;

/// Metrics shown on the dashboard, in display order.
pub const DASHBOARD: [Metric; 5] = [
    Metric::Cr,
    Metric::CrPos,
    Metric::SelfRep,
    Metric::SelfBleu,
    Metric::HomEmbed,
];

const FAST: [Metric; 3] = [Metric::Cr, Metric::CrPos, Metric::SelfRep];

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Entry {
    Ok { value: f64 },
    Pending,
    Skipped { reason: String },
    Unavailable { reason: String },
}

impl From<Result<f64, String>> for Entry {
    fn from(r: Result<f64, String>) -> Self {
        match r {
            Ok(value) => Entry::Ok { value },
            Err(reason) => Entry::Skipped { reason },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct MetricView {
    pub metric: &'static str,
    pub label: &'static str,
    pub arrow: &'static str,
    pub higher_is_more_diverse: bool,
    #[serde(flatten)]
    pub entry: Entry,
}

#[derive(Debug, Serialize)]
pub struct GuideEntry {
    pub metric: &'static str,
    pub label: &'static str,
    pub arrow: &'static str,
    pub summary: &'static str,
}

pub fn guide() -> Vec<GuideEntry> {
    let text = |m: Metric| {
        match m {
        Metric::Cr => "Size of the concatenated texts divided by their gzip-compressed size. Repetitive corpora compress well and score high. Fast to compute.",
        Metric::CrPos => "Compression ratio of the part-of-speech tag stream. Picks up repeated syntactic templates even when the words differ.",
        Metric::SelfRep => "Log count of how often each text's 4-grams recur in other texts, averaged. Targets long copied phrases.",
        Metric::SelfBleu => "Mean BLEU between every pair of texts, one serving as reference. Slow on large corpora; complements the scores above.",
        Metric::HomEmbed => "Mean embedding similarity between every pair of texts. Needs an embedding provider.",
        _ => "",
    }
    };
    DASHBOARD
        .iter()
        .map(|&m| GuideEntry {
            metric: m.name(),
            label: m.label(),
            arrow: m.arrow(),
            summary: text(m),
        })
        .collect()
}

pub(crate) struct MetricsJob {
    fast: OnceCell<Arc<BTreeMap<&'static str, Entry>>>,
    slow: Mutex<BTreeMap<&'static str, Entry>>,
    started: AtomicBool,
    pub(crate) bleu_cache: SimilarityCache,
}

impl MetricsJob {
    pub(crate) fn new(bleu_cache: SimilarityCache) -> Self {
        Self {
            fast: OnceCell::new(),
            slow: Mutex::new(BTreeMap::new()),
            started: AtomicBool::new(false),
            bleu_cache,
        }
    }

    fn slow(&self) -> std::sync::MutexGuard<'_, BTreeMap<&'static str, Entry>> {
        self.slow.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn set(&self, metric: Metric, entry: Entry) {
        self.slow().insert(metric.name(), entry);
    }

    pub(crate) fn pending(&self) -> Vec<&'static str> {
        self.slow()
            .iter()
            .filter(|(_, e)| **e == Entry::Pending)
            .map(|(k, _)| *k)
            .collect()
    }
}

pub(crate) async fn tagged(session: &Arc<Session>) -> Result<divkit_core::Corpus, String> {
    let s = session.clone();
    session
        .tagged
        .get_or_try_init(|| async move {
            tokio::task::spawn_blocking(move || s.corpus.tagged(&Tagger::builtin()))
                .await
                .map_err(|e| e.to_string())?
                .map_err(|e| e.to_string())
        })
        .await
        .cloned()
}

async fn fast_part(state: &AppState, session: &Arc<Session>) -> Arc<BTreeMap<&'static str, Entry>> {
    let config = state.config.metrics.clone();
    let s = session.clone();
    session
        .metrics
        .fast
        .get_or_init(|| async move {
            let tagged = tagged(&s).await;
            let computed = tokio::task::spawn_blocking(move || {
                let tagger = Tagger::builtin();
                FAST.iter()
                    .map(|&m| {
                        let entry = match (&tagged, m) {
                            (Err(e), Metric::CrPos) => Entry::Skipped { reason: e.clone() },
                            (Ok(t), _) => compute_metric(t, m, &config, &tagger, None).into(),
                            (Err(_), _) => {
                                compute_metric(&s.corpus, m, &config, &tagger, None).into()
                            }
                        };
                        (m.name(), entry)
                    })
                    .collect::<BTreeMap<_, _>>()
            })
            .await;
            Arc::new(computed.unwrap_or_else(|e| {
                FAST.iter()
                    .map(|m| {
                        (
                            m.name(),
                            Entry::Skipped {
                                reason: e.to_string(),
                            },
                        )
                    })
                    .collect()
            }))
        })
        .await
        .clone()
}

fn start_slow(state: &AppState, session: &Arc<Session>) {
    if session.metrics.started.swap(true, Ordering::SeqCst) {
        return;
    }
    let config = &state.config.metrics;
    let n = session.corpus.len();
    let pairs = n * n.saturating_sub(1) / 2;
    let gate = || -> Option<String> {
        if n < 2 {
            Some(format!("needs at least 2 documents, corpus has {n}"))
        } else if pairs > config.pair_budget && !config.force {
            Some(format!(
                "{pairs} pairs exceed the pair budget of {}",
                config.pair_budget
            ))
        } else {
            None
        }
    };

    match gate() {
        Some(reason) => session
            .metrics
            .set(Metric::SelfBleu, Entry::Skipped { reason }),
        None => {
            session.metrics.set(Metric::SelfBleu, Entry::Pending);
            let s = session.clone();
            let cfg = config.clone();
            tokio::task::spawn_blocking(move || {
                let opts = PairwiseOptions {
                    workers: cfg.workers,
                    cache: Some(&s.metrics.bleu_cache),
                    embedder: None,
                };
                let r = homogenization_with(&s.corpus, cfg.bleu_kind(), cfg.normalization, &opts)
                    .map_err(|e| e.to_string());
                s.metrics.set(Metric::SelfBleu, r.into());
            });
        }
    }

    match (&state.config.embedder, gate()) {
        (None, _) => session.metrics.set(
            Metric::HomEmbed,
            Entry::Unavailable {
                reason: "no embedding provider configured".into(),
            },
        ),
        (Some(_), Some(reason)) => session
            .metrics
            .set(Metric::HomEmbed, Entry::Skipped { reason }),
        (Some(embedder), None) => {
            session.metrics.set(Metric::HomEmbed, Entry::Pending);
            let s = session.clone();
            let cfg = config.clone();
            let embedder = embedder.clone();
            tokio::task::spawn_blocking(move || {
                let r = compute_metric(
                    &s.corpus,
                    Metric::HomEmbed,
                    &cfg,
                    &Tagger::builtin(),
                    Some(&embedder),
                );
                s.metrics.set(Metric::HomEmbed, r.into());
            });
        }
    }
}

#[derive(Debug, Serialize)]
pub struct MetricsResponse {
    pub session_id: String,
    pub doc_count: usize,
    pub avg_length: f64,
    pub complete: bool,
    pub metrics: Vec<MetricView>,
    pub flags: Vec<String>,
    pub guide: Vec<GuideEntry>,
}

/// Current dashboard state, kicking off the slow metrics on first call.
pub(crate) async fn report(state: &AppState, session: &Arc<Session>) -> MetricsResponse {
    let fast = fast_part(state, session).await;
    start_slow(state, session);
    let slow = session.metrics.slow().clone();
    let metrics: Vec<MetricView> = DASHBOARD
        .iter()
        .map(|&m| MetricView {
            metric: m.name(),
            label: m.label(),
            arrow: m.arrow(),
            higher_is_more_diverse: m.higher_is_more_diverse(),
            entry: fast
                .get(m.name())
                .or_else(|| slow.get(m.name()))
                .cloned()
                .unwrap_or(Entry::Pending),
        })
        .collect();
    let complete = metrics.iter().all(|v| v.entry != Entry::Pending);
    let mut flags = Vec::new();
    if divkit_core::compression::is_tiny(&session.corpus) {
        flags.push(format!(
            "tiny input (< {} bytes): compression ratios are dominated by container overhead",
            divkit_core::compression::TINY_INPUT_BYTES
        ));
    }
    MetricsResponse {
        session_id: session.id.clone(),
        doc_count: session.corpus.len(),
        avg_length: divkit_core::avg_length(&session.corpus),
        complete,
        metrics,
        flags,
        guide: guide(),
    }
}

#[derive(Debug, Serialize)]
pub struct Progress {
    pub pairs_done: usize,
    pub pairs_total: usize,
}

#[derive(Debug, Serialize)]
pub struct StatusResponse {
    pub state: &'static str,
    pub pending: Vec<&'static str>,
    pub self_bleu: Progress,
}

pub(crate) fn status(session: &Session) -> StatusResponse {
    let n = session.corpus.len();
    let pending = session.metrics.pending();
    let state = if !session.metrics.started.load(Ordering::SeqCst) {
        "idle"
    } else if pending.is_empty() {
        "done"
    } else {
        "running"
    };
    StatusResponse {
        state,
        pending,
        self_bleu: Progress {
            pairs_done: session.metrics.bleu_cache.len(),
            pairs_total: n * n.saturating_sub(1) / 2,
        },
    }
}
