//! Document embeddings: provider trait, a deterministic hash-projection stub
//! and an OpenAI-embeddings-compatible HTTP client.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::tokenize::tokenize;
use crate::EmbeddingError;

pub const ENV_ENDPOINT: &str = "DIVKIT_EMBED_ENDPOINT";
pub const ENV_MODEL: &str = "DIVKIT_EMBED_MODEL";
pub const ENV_TOKEN: &str = "DIVKIT_EMBED_TOKEN";

/// Something that turns texts into fixed-dimension vectors.
pub trait EmbeddingProvider: Send + Sync {
    fn model_id(&self) -> &str;

    /// One vector per input text, in order.
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbeddingError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f32>,
    pub model_id: String,
}

/// Batches requests to a provider, caches vectors by content hash and checks
/// that every vector has the same dimension.
pub struct Embedder {
    provider: Arc<dyn EmbeddingProvider>,
    batch_size: usize,
    cache: Mutex<HashMap<[u8; 32], Arc<Vec<f32>>>>,
    dimension: Mutex<Option<usize>>,
}

impl Embedder {
    pub fn new(provider: Arc<dyn EmbeddingProvider>) -> Self {
        Self::with_batch_size(provider, 64)
    }

    pub fn with_batch_size(provider: Arc<dyn EmbeddingProvider>, batch_size: usize) -> Self {
        Self {
            provider,
            batch_size: batch_size.max(1),
            cache: Mutex::new(HashMap::new()),
            dimension: Mutex::new(None),
        }
    }

    pub fn model_id(&self) -> &str {
        self.provider.model_id()
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
        let keys: Vec<[u8; 32]> = texts
            .iter()
            .map(|t| Sha256::digest(t.as_bytes()).into())
            .collect();
        let mut missing: Vec<usize> = Vec::new();
        {
            let cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
            let mut seen = std::collections::HashSet::new();
            for (i, k) in keys.iter().enumerate() {
                if !cache.contains_key(k) && seen.insert(*k) {
                    missing.push(i);
                }
            }
        }
        for chunk in missing.chunks(self.batch_size) {
            let batch: Vec<String> = chunk.iter().map(|&i| texts[i].clone()).collect();
            let vectors = self.provider.embed_batch(&batch)?;
            if vectors.len() != batch.len() {
                return Err(EmbeddingError::Protocol(format!(
                    "{} vectors for {} inputs",
                    vectors.len(),
                    batch.len()
                )));
            }
            let mut dim = self.dimension.lock().unwrap_or_else(|e| e.into_inner());
            for v in &vectors {
                match *dim {
                    None => *dim = Some(v.len()),
                    Some(d) if d != v.len() => {
                        return Err(EmbeddingError::DimensionMismatch {
                            expected: d,
                            found: v.len(),
                        })
                    }
                    _ => {}
                }
            }
            let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
            for (&i, v) in chunk.iter().zip(vectors) {
                cache.insert(keys[i], Arc::new(v));
            }
        }
        let cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        Ok(keys
            .iter()
            .map(|k| EmbeddingVector {
                values: cache[k].as_ref().clone(),
                model_id: self.provider.model_id().to_string(),
            })
            .collect())
    }
}

/// Embeds `texts` through `embedder`.
pub fn embed(
    texts: &[String],
    embedder: &Embedder,
) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
    embedder.embed(texts)
}

/// Deterministic bag-of-tokens hash projection. Each lowercased token adds
/// ±1 at a few seeded positions. Meant for tests and offline runs.
#[derive(Debug, Clone)]
pub struct StubEmbedder {
    dimension: usize,
    seed: u64,
    model_id: String,
}

impl StubEmbedder {
    pub fn new(dimension: usize, seed: u64) -> Self {
        Self {
            dimension: dimension.max(1),
            seed,
            model_id: format!("stub-hash-{dimension}-{seed}"),
        }
    }

    pub fn vector(&self, text: &str) -> Vec<f32> {
        let mut v = vec![0f32; self.dimension];
        for tok in tokenize(text) {
            let h = fnv1a(tok.to_lowercase().as_bytes()) ^ self.seed;
            for k in 0..4u64 {
                let x = splitmix64(h.wrapping_add(k.wrapping_mul(0x9e37_79b9_7f4a_7c15)));
                let idx = (x % self.dimension as u64) as usize;
                v[idx] += if (x >> 63) == 0 { 1.0 } else { -1.0 };
            }
        }
        v
    }
}

impl EmbeddingProvider for StubEmbedder {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbeddingError> {
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    model: &'a str,
    input: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    data: Vec<EmbedDatum>,
}

#[derive(Deserialize)]
struct EmbedDatum {
    embedding: Vec<f32>,
}

/// HTTP client for `POST {model, input}` → `{data: [{embedding}]}`.
pub struct RemoteEmbedder {
    endpoint: String,
    model: String,
    token: Option<String>,
    max_retries: u32,
    backoff: Duration,
    agent: ureq::Agent,
}

impl RemoteEmbedder {
    pub fn new(
        endpoint: impl Into<String>,
        model: impl Into<String>,
        token: Option<String>,
    ) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            token,
            max_retries: 2,
            backoff: Duration::from_millis(200),
            agent,
        }
    }

    /// Reads endpoint, model and token from the environment. `None` when no
    /// endpoint is set.
    pub fn from_env() -> Option<Self> {
        let endpoint = std::env::var(ENV_ENDPOINT).ok().filter(|s| !s.is_empty())?;
        let model = std::env::var(ENV_MODEL).unwrap_or_else(|_| "default".into());
        let token = std::env::var(ENV_TOKEN).ok().filter(|s| !s.is_empty());
        Some(Self::new(endpoint, model, token))
    }

    pub fn with_retries(mut self, max_retries: u32, backoff: Duration) -> Self {
        self.max_retries = max_retries;
        self.backoff = backoff;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn attempt(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, (EmbeddingError, bool)> {
        let mut req = self.agent.post(&self.endpoint);
        if let Some(token) = &self.token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let body = EmbedRequest {
            model: &self.model,
            input: texts,
        };
        let mut resp = req.send_json(&body).map_err(|e| {
            (
                EmbeddingError::Unreachable {
                    endpoint: self.endpoint.clone(),
                    message: e.to_string(),
                },
                true,
            )
        })?;
        let status = resp.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 => {
                return Err((
                    EmbeddingError::Auth {
                        endpoint: self.endpoint.clone(),
                        status,
                    },
                    false,
                ))
            }
            429 | 500..=599 => {
                return Err((
                    EmbeddingError::Status {
                        endpoint: self.endpoint.clone(),
                        status,
                    },
                    true,
                ))
            }
            _ => {
                return Err((
                    EmbeddingError::Status {
                        endpoint: self.endpoint.clone(),
                        status,
                    },
                    false,
                ))
            }
        }
        let parsed: EmbedResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| (EmbeddingError::Protocol(e.to_string()), false))?;
        Ok(parsed.data.into_iter().map(|d| d.embedding).collect())
    }
}

impl EmbeddingProvider for RemoteEmbedder {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbeddingError> {
        let mut tries = 0;
        loop {
            match self.attempt(texts) {
                Ok(v) => return Ok(v),
                Err((err, retryable)) => {
                    if !retryable || tries >= self.max_retries {
                        return Err(err);
                    }
                    tries += 1;
                    std::thread::sleep(self.backoff * tries);
                }
            }
        }
    }
}

/// Cosine similarity; zero when either vector is all zeros.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut dot, mut na, mut nb) = (0f64, 0f64, 0f64);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (*x as f64, *y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}
