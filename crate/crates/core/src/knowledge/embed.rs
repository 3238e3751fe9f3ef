use std::collections::BTreeMap;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::KnowledgeError;

/// Text to unit-length vector. Implementations must be deterministic.
pub trait Embedder: Send + Sync {
    fn dimension(&self) -> usize;

    /// Identifier persisted with a store so mismatched embedders are caught.
    fn id(&self) -> String;

    fn embed(&self, text: &str) -> Result<Vec<f32>, KnowledgeError>;

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, KnowledgeError> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

/// Cosine similarity computed in f64.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (*x as f64, *y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

fn unit(mut v: Vec<f64>) -> Vec<f32> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        v[0] = 1.0;
        return v.into_iter().map(|x| x as f32).collect();
    }
    v.iter_mut().for_each(|x| *x /= norm);
    v.into_iter().map(|x| x as f32).collect()
}

/// Offline embedder: character trigram counts projected through seeded
/// random ±1-range directions. Needs no model download and is identical on
/// every platform.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self { dim: dim.max(1), seed }
    }

    fn fnv1a(bytes: &[u8]) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in bytes {
            h ^= *b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self::new(64, 0x5eed)
    }
}

impl Embedder for HashEmbedder {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn id(&self) -> String {
        format!("hash-trigram-d{}-s{}", self.dim, self.seed)
    }

    fn embed(&self, text: &str) -> Result<Vec<f32>, KnowledgeError> {
        let norm: String = text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
        let chars: Vec<char> = format!(" {norm} ").chars().collect();
        let mut grams: BTreeMap<u64, f64> = BTreeMap::new();
        for w in chars.windows(3) {
            let g: String = w.iter().collect();
            *grams.entry(Self::fnv1a(g.as_bytes())).or_default() += 1.0;
        }
        let mut v = vec![0.0f64; self.dim];
        for (h, count) in grams {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ h);
            for slot in v.iter_mut() {
                *slot += count * rng.random_range(-1.0..1.0);
            }
        }
        Ok(unit(v))
    }
}

/// Remote embedding service: POST `{"texts": [...]}` returning either
/// `{"embeddings": [[...]]}` or a bare array of vectors.
#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    pub url: String,
    pub dim: usize,
    pub timeout: Duration,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EmbedResponse {
    Wrapped { embeddings: Vec<Vec<f32>> },
    Bare(Vec<Vec<f32>>),
}

impl HttpEmbedder {
    pub fn new(url: impl Into<String>, dim: usize) -> Self {
        Self {
            url: url.into(),
            dim,
            timeout: Duration::from_secs(60),
        }
    }
}

impl Embedder for HttpEmbedder {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn id(&self) -> String {
        format!("http:{}", self.url)
    }

    fn embed(&self, text: &str) -> Result<Vec<f32>, KnowledgeError> {
        let mut out = self.embed_batch(&[text.to_string()])?;
        out.pop().ok_or_else(|| KnowledgeError::Embedder("empty response".into()))
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, KnowledgeError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .build()
            .into();
        let resp: EmbedResponse = agent
            .post(&self.url)
            .send_json(serde_json::json!({ "texts": texts }))
            .and_then(|mut r| r.body_mut().read_json())
            .map_err(|e| KnowledgeError::Embedder(e.to_string()))?;
        let vecs = match resp {
            EmbedResponse::Wrapped { embeddings } => embeddings,
            EmbedResponse::Bare(v) => v,
        };
        if vecs.len() != texts.len() {
            return Err(KnowledgeError::Embedder(format!(
                "asked for {} embeddings, got {}",
                texts.len(),
                vecs.len()
            )));
        }
        vecs.into_iter()
            .map(|v| {
                if v.len() != self.dim {
                    return Err(KnowledgeError::DimensionMismatch {
                        expected: self.dim,
                        actual: v.len(),
                    });
                }
                Ok(unit(v.into_iter().map(f64::from).collect()))
            })
            .collect()
    }
}
