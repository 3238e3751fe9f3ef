use std::cmp::Ordering;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{cosine, Chunk, Embedder, RetrievalConfig, ScoredPassage};
use crate::error::KnowledgeError;

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StoreManifest {
    version: u32,
    dim: usize,
    count: usize,
    embedder: String,
}

/// Flat exact-search index: chunk metadata plus row-major f32 vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorStore {
    pub dim: usize,
    pub embedder: String,
    pub chunks: Vec<Chunk>,
    vectors: Vec<f32>,
}

impl VectorStore {
    pub fn new(dim: usize, embedder: impl Into<String>) -> Self {
        Self {
            dim,
            embedder: embedder.into(),
            chunks: Vec::new(),
            vectors: Vec::new(),
        }
    }

    pub fn push(&mut self, chunk: Chunk, vector: &[f32]) -> Result<(), KnowledgeError> {
        if vector.len() != self.dim {
            return Err(KnowledgeError::DimensionMismatch {
                expected: self.dim,
                actual: vector.len(),
            });
        }
        self.chunks.push(chunk);
        self.vectors.extend_from_slice(vector);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn vector(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    /// Writes `manifest.json`, `vectors.bin` (little-endian f32) and `chunks.jsonl`.
    pub fn save(&self, dir: &Path) -> Result<(), KnowledgeError> {
        fs::create_dir_all(dir)?;
        let manifest = StoreManifest {
            version: FORMAT_VERSION,
            dim: self.dim,
            count: self.chunks.len(),
            embedder: self.embedder.clone(),
        };
        fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
        let mut bin = Vec::with_capacity(self.vectors.len() * 4);
        for v in &self.vectors {
            bin.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(dir.join("vectors.bin"), bin)?;
        let mut jsonl = Vec::new();
        for c in &self.chunks {
            serde_json::to_writer(&mut jsonl, c)?;
            jsonl.write_all(b"\n")?;
        }
        fs::write(dir.join("chunks.jsonl"), jsonl)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, KnowledgeError> {
        let manifest: StoreManifest = serde_json::from_slice(&fs::read(dir.join("manifest.json"))?)?;
        if manifest.version != FORMAT_VERSION {
            return Err(KnowledgeError::CorruptStore(format!("unsupported store version {}", manifest.version)));
        }
        let bin = fs::read(dir.join("vectors.bin"))?;
        if bin.len() != manifest.count * manifest.dim * 4 {
            return Err(KnowledgeError::CorruptStore(format!(
                "vectors.bin holds {} bytes, expected {}",
                bin.len(),
                manifest.count * manifest.dim * 4
            )));
        }
        let vectors = bin
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        let chunks = fs::read_to_string(dir.join("chunks.jsonl"))?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<Vec<Chunk>, _>>()?;
        if chunks.len() != manifest.count {
            return Err(KnowledgeError::CorruptStore(format!(
                "chunks.jsonl holds {} chunks, manifest says {}",
                chunks.len(),
                manifest.count
            )));
        }
        Ok(Self {
            dim: manifest.dim,
            embedder: manifest.embedder,
            chunks,
            vectors,
        })
    }

    /// Exact cosine scan: passages with s_raw ≥ τ, best first, at most `k`.
    pub fn search(&self, query: &[f32], k: usize, tau: f64) -> Result<Vec<ScoredPassage>, KnowledgeError> {
        if self.is_empty() {
            return Ok(Vec::new());
        }
        if query.len() != self.dim {
            return Err(KnowledgeError::DimensionMismatch {
                expected: self.dim,
                actual: query.len(),
            });
        }
        let mut hits: Vec<ScoredPassage> = (0..self.len())
            .map(|i| (i, cosine(query, self.vector(i))))
            .filter(|(_, s)| *s >= tau)
            .map(|(i, s)| ScoredPassage {
                chunk: self.chunks[i].clone(),
                s_raw: s,
                w_domain: 1.0,
                s_adj: s,
            })
            .collect();
        hits.sort_by(|a, b| b.s_raw.total_cmp(&a.s_raw).then_with(|| attribution_order(a, b)));
        hits.truncate(k);
        Ok(hits)
    }
}

/// Deterministic tie-break on source file, page, then chunk id.
pub(crate) fn attribution_order(a: &ScoredPassage, b: &ScoredPassage) -> Ordering {
    a.chunk
        .source_file
        .cmp(&b.chunk.source_file)
        .then(a.chunk.page.cmp(&b.chunk.page))
        .then_with(|| a.chunk.id.cmp(&b.chunk.id))
}

pub fn retrieve(
    query: &str,
    store: &VectorStore,
    embedder: &dyn Embedder,
    cfg: &RetrievalConfig,
) -> Result<Vec<ScoredPassage>, KnowledgeError> {
    if store.is_empty() {
        return Ok(Vec::new());
    }
    if embedder.dimension() != store.dim {
        return Err(KnowledgeError::DimensionMismatch {
            expected: store.dim,
            actual: embedder.dimension(),
        });
    }
    store.search(&embedder.embed(query)?, cfg.top_k, cfg.similarity_threshold)
}
