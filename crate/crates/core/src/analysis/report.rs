use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::compression::{self, CompressionConfig};
use crate::corpus::{avg_length, Corpus};
use crate::lexical::{self, BoundaryMode, SelfRepetitionParams};
use crate::pairwise::{
    self, Embedder, Normalization, PairwiseOptions, SimilarityKind, DEFAULT_EPSILON,
};
use crate::tagger::{Tagger, TaggerSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Cr,
    CrPos,
    Ngd,
    Mattr,
    Hdd,
    SelfRep,
    SelfBleu,
    HomRougel,
    HomEmbed,
    RemoteClique,
    Chamfer,
}

impl Metric {
    pub const ALL: [Metric; 11] = [
        Metric::Cr,
        Metric::CrPos,
        Metric::Ngd,
        Metric::Mattr,
        Metric::Hdd,
        Metric::SelfRep,
        Metric::SelfBleu,
        Metric::HomRougel,
        Metric::HomEmbed,
        Metric::RemoteClique,
        Metric::Chamfer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Cr => "cr",
            Metric::CrPos => "cr_pos",
            Metric::Ngd => "ngd",
            Metric::Mattr => "mattr",
            Metric::Hdd => "hdd",
            Metric::SelfRep => "self_rep",
            Metric::SelfBleu => "self_bleu",
            Metric::HomRougel => "hom_rougel",
            Metric::HomEmbed => "hom_embed",
            Metric::RemoteClique => "remote_clique",
            Metric::Chamfer => "chamfer",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::Cr => "CR",
            Metric::CrPos => "CR:POS",
            Metric::Ngd => "NGD",
            Metric::Mattr => "MATTR",
            Metric::Hdd => "HD-D",
            Metric::SelfRep => "Self-Rep.",
            Metric::SelfBleu => "Self-BLEU",
            Metric::HomRougel => "Hom. (R-L)",
            Metric::HomEmbed => "Hom. (embed)",
            Metric::RemoteClique => "Remote clique",
            Metric::Chamfer => "Chamfer",
        }
    }

    /// Direction of more diversity.
    pub fn higher_is_more_diverse(self) -> bool {
        matches!(
            self,
            Metric::Ngd | Metric::Mattr | Metric::Hdd | Metric::RemoteClique | Metric::Chamfer
        )
    }

    pub fn arrow(self) -> &'static str {
        if self.higher_is_more_diverse() {
            "↑"
        } else {
            "↓"
        }
    }

    /// Needs an embedding provider.
    pub fn needs_embeddings(self) -> bool {
        matches!(
            self,
            Metric::HomEmbed | Metric::RemoteClique | Metric::Chamfer
        )
    }

    /// Scores document pairs (subject to the pair budget).
    pub fn is_pairwise(self) -> bool {
        matches!(
            self,
            Metric::SelfBleu
                | Metric::HomRougel
                | Metric::HomEmbed
                | Metric::RemoteClique
                | Metric::Chamfer
        )
    }

    /// Cheap enough to compute inline in interactive use.
    pub fn is_fast(self) -> bool {
        !self.is_pairwise()
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ':'], "_");
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == norm)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown metric `{s}`")))
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Every knob `compute_all_metrics` honours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    /// Restrict to these metrics; `None` runs everything applicable.
    pub only: Option<BTreeSet<Metric>>,
    pub lowercase: bool,
    pub compression: CompressionConfig,
    pub tagger: TaggerSpec,
    pub ngd_max_n: usize,
    pub boundary: BoundaryMode,
    pub mattr_window: usize,
    pub hdd_sample: usize,
    pub selfrep_n: usize,
    pub bleu_max_order: usize,
    pub rouge_beta: f64,
    pub normalization: Normalization,
    /// Worker threads for pairwise metrics; zero means all CPUs.
    pub workers: usize,
    /// Skip pairwise metrics needing more unordered pairs than this.
    pub pair_budget: usize,
    /// Ignore the pair budget.
    pub force: bool,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            only: None,
            lowercase: false,
            compression: CompressionConfig::default(),
            tagger: TaggerSpec::default(),
            ngd_max_n: 4,
            boundary: BoundaryMode::PerDocument,
            mattr_window: 50,
            hdd_sample: 42,
            selfrep_n: 4,
            bleu_max_order: 4,
            rouge_beta: 1.0,
            normalization: Normalization::MeanPairs,
            workers: 0,
            pair_budget: 1_000_000,
            force: false,
        }
    }
}

impl MetricsConfig {
    /// Metrics this config asks for, given whether embeddings are available.
    /// Without `only`, embedding metrics are included only with a provider.
    pub fn selected(&self, have_embedder: bool) -> Vec<Metric> {
        match &self.only {
            Some(set) => set.iter().copied().collect(),
            None => Metric::ALL
                .into_iter()
                .filter(|m| have_embedder || !m.needs_embeddings())
                .collect(),
        }
    }

    pub fn params_for(&self, metric: Metric) -> serde_json::Value {
        match metric {
            Metric::Cr => json!({"compression": self.compression}),
            Metric::CrPos => json!({"compression": self.compression, "tagger": self.tagger}),
            Metric::Ngd => {
                json!({"max_n": self.ngd_max_n, "lowercase": self.lowercase, "boundary": self.boundary})
            }
            Metric::Mattr => {
                json!({"window": self.mattr_window, "lowercase": self.lowercase, "boundary": self.boundary})
            }
            Metric::Hdd => json!({"sample": self.hdd_sample, "lowercase": self.lowercase}),
            Metric::SelfRep => json!({"n": self.selfrep_n, "lowercase": self.lowercase}),
            Metric::SelfBleu => {
                json!({"similarity": self.bleu_kind(), "normalization": self.normalization})
            }
            Metric::HomRougel => {
                json!({"similarity": self.rouge_kind(), "normalization": self.normalization})
            }
            Metric::HomEmbed => {
                json!({"similarity": SimilarityKind::EmbedCosine, "normalization": self.normalization})
            }
            Metric::RemoteClique | Metric::Chamfer => json!({"distance": "cosine"}),
        }
    }

    pub fn bleu_kind(&self) -> SimilarityKind {
        SimilarityKind::Bleu {
            max_order: self.bleu_max_order,
            epsilon: DEFAULT_EPSILON,
            lowercase: self.lowercase,
        }
    }

    pub fn rouge_kind(&self) -> SimilarityKind {
        SimilarityKind::RougeL {
            beta: self.rouge_beta,
            lowercase: self.lowercase,
        }
    }
}

/// Scores for one corpus, with parameters, skipped entries and timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub corpus_id: String,
    pub doc_count: usize,
    pub avg_length: f64,
    pub scores: BTreeMap<String, f64>,
    pub params: BTreeMap<String, serde_json::Value>,
    /// Metric name → reason it has no score.
    #[serde(default)]
    pub skipped: BTreeMap<String, String>,
    #[serde(default)]
    pub flags: Vec<String>,
    /// Wall time per metric; excluded from determinism comparisons.
    #[serde(default)]
    pub timings_ms: BTreeMap<String, f64>,
}

impl MetricReport {
    pub fn new(corpus_id: impl Into<String>, corpus: &Corpus) -> Self {
        Self {
            corpus_id: corpus_id.into(),
            doc_count: corpus.len(),
            avg_length: avg_length(corpus),
            scores: BTreeMap::new(),
            params: BTreeMap::new(),
            skipped: BTreeMap::new(),
            flags: Vec::new(),
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn is_partial(&self) -> bool {
        !self.skipped.is_empty()
    }

    pub fn score(&self, metric: Metric) -> Option<f64> {
        self.scores.get(metric.name()).copied()
    }

    /// Copy without timing data, for byte-level comparisons.
    pub fn without_timings(&self) -> Self {
        Self {
            timings_ms: BTreeMap::new(),
            ..self.clone()
        }
    }

    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let mut rows: Vec<(String, String)> = vec![
            ("Documents".into(), self.doc_count.to_string()),
            ("Avg. Length".into(), format!("{:.2}", self.avg_length)),
        ];
        for m in Metric::ALL {
            let label = format!("{} ({})", m.label(), m.arrow());
            if let Some(v) = self.scores.get(m.name()) {
                rows.push((label, format!("{v:.3}")));
            } else if let Some(reason) = self.skipped.get(m.name()) {
                rows.push((label, format!("skipped: {reason}")));
            }
        }
        let width = rows
            .iter()
            .map(|(l, _)| l.chars().count())
            .max()
            .unwrap_or(0);
        let mut out = format!("{}\n", self.corpus_id);
        for (l, v) in rows {
            let pad = width - l.chars().count();
            out.push_str(&format!("  {l}{}  {v}\n", " ".repeat(pad)));
        }
        for f in &self.flags {
            out.push_str(&format!("  note: {f}\n"));
        }
        out
    }

    /// `metric,value,status` rows; avg_length first.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value,status\n");
        out.push_str(&format!("avg_length,{},ok\n", self.avg_length));
        for m in Metric::ALL {
            if let Some(v) = self.scores.get(m.name()) {
                out.push_str(&format!("{},{v},ok\n", m.name()));
            } else if let Some(reason) = self.skipped.get(m.name()) {
                out.push_str(&format!(
                    "{},,\"skipped: {}\"\n",
                    m.name(),
                    reason.replace('"', "'")
                ));
            }
        }
        out
    }
}

/// Runs one metric. `Err` carries the reason no score was produced, whether
/// the metric was gated off or failed.
pub fn compute_metric(
    corpus: &Corpus,
    metric: Metric,
    config: &MetricsConfig,
    tagger: &Tagger,
    embedder: Option<&Embedder>,
) -> std::result::Result<f64, String> {
    let n = corpus.len();
    if (metric.is_pairwise() || metric == Metric::SelfRep) && n < 2 {
        return Err(format!("needs at least 2 documents, corpus has {n}"));
    }
    if metric.is_pairwise() && !config.force {
        let pairs = n * (n - 1) / 2;
        if pairs > config.pair_budget {
            return Err(format!(
                "{pairs} pairs exceed the pair budget of {} (use force)",
                config.pair_budget
            ));
        }
    }
    if metric.needs_embeddings() && embedder.is_none() {
        return Err("no embedding provider configured".into());
    }
    let opts = PairwiseOptions {
        workers: config.workers,
        cache: None,
        embedder,
    };
    let result = match metric {
        Metric::Cr => compression::compression_ratio(corpus, &config.compression),
        Metric::CrPos => compression::pos_compression_ratio(corpus, tagger, &config.compression),
        Metric::Ngd => {
            lexical::ngram_diversity(corpus, config.ngd_max_n, config.lowercase, config.boundary)
        }
        Metric::Mattr => lexical::mattr(
            corpus,
            config.mattr_window,
            config.lowercase,
            config.boundary,
        ),
        Metric::Hdd => lexical::hdd(corpus, config.hdd_sample, config.lowercase),
        Metric::SelfRep => lexical::self_repetition(
            corpus,
            &SelfRepetitionParams {
                n: config.selfrep_n,
                per_document: false,
                lowercase: config.lowercase,
            },
        )
        .map(|r| r.score),
        Metric::SelfBleu => {
            pairwise::homogenization_with(corpus, config.bleu_kind(), config.normalization, &opts)
        }
        Metric::HomRougel => {
            pairwise::homogenization_with(corpus, config.rouge_kind(), config.normalization, &opts)
        }
        Metric::HomEmbed => pairwise::homogenization_with(
            corpus,
            SimilarityKind::EmbedCosine,
            config.normalization,
            &opts,
        ),
        Metric::RemoteClique => pairwise::remote_clique(corpus, embedder.expect("checked above")),
        Metric::Chamfer => pairwise::chamfer_dist(corpus, embedder.expect("checked above")),
    };
    result.map_err(|e| e.to_string())
}

/// Runs every selected metric. Failures and gated metrics are recorded in
/// `skipped` and never abort the report.
pub fn compute_all_metrics(
    corpus: &Corpus,
    config: &MetricsConfig,
    embedder: Option<&Embedder>,
) -> MetricReport {
    let corpus_id = corpus
        .source()
        .path
        .clone()
        .unwrap_or_else(|| "corpus".to_string());
    let mut report = MetricReport::new(corpus_id, corpus);
    let tagger = Tagger::from_spec(&config.tagger);
    let selected = config.selected(embedder.is_some());
    for metric in &selected {
        report
            .params
            .insert(metric.name().into(), config.params_for(*metric));
        let started = Instant::now();
        let outcome = match &tagger {
            Ok(t) => compute_metric(corpus, *metric, config, t, embedder),
            Err(e) if *metric == Metric::CrPos => Err(e.to_string()),
            Err(_) => compute_metric(corpus, *metric, config, &Tagger::builtin(), embedder),
        };
        report
            .timings_ms
            .insert(metric.name().into(), started.elapsed().as_secs_f64() * 1e3);
        match outcome {
            Ok(v) => {
                report.scores.insert(metric.name().into(), v);
            }
            Err(reason) => {
                report.skipped.insert(metric.name().into(), reason);
            }
        }
    }
    if selected
        .iter()
        .any(|m| matches!(m, Metric::Cr | Metric::CrPos))
        && compression::is_tiny(corpus)
    {
        report.flags.push(format!(
            "tiny input (< {} bytes): compression ratios are dominated by container overhead",
            compression::TINY_INPUT_BYTES
        ));
    }
    report
}
