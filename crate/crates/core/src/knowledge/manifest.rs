use std::path::Path;

use serde::Deserialize;

use super::{chunk_document, is_threshold_heavy, Chunk, Embedder, RetrievalConfig, StudyDesign, VectorStore};
use crate::error::KnowledgeError;
use crate::metric::Metric;

/// One corpus document. Study design and topics are editorial labels.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub path: String,
    #[serde(default)]
    pub study_design: StudyDesign,
    #[serde(default)]
    pub topics: Vec<String>,
    #[serde(default)]
    pub primary_metric: Option<Metric>,
    /// Forces the threshold-heavy flag for every chunk of the document.
    #[serde(default)]
    pub threshold_heavy: Option<bool>,
}

/// Parses a JSONL manifest, reporting failures with 1-based line numbers.
pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>, KnowledgeError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| KnowledgeError::Manifest {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Reads, chunks and embeds every manifest document; paths resolve against `base`.
pub fn index_corpus(
    entries: &[ManifestEntry],
    base: &Path,
    embedder: &dyn Embedder,
    cfg: &RetrievalConfig,
) -> Result<VectorStore, KnowledgeError> {
    let mut store = VectorStore::new(embedder.dimension(), embedder.id());
    for entry in entries {
        let path = base.join(&entry.path);
        let text = std::fs::read_to_string(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => KnowledgeError::MissingDocument(path.clone()),
            _ => KnowledgeError::Io(e),
        })?;
        let spans = chunk_document(&text, cfg);
        let texts: Vec<String> = spans.iter().map(|s| s.text.clone()).collect();
        let vectors = embedder.embed_batch(&texts)?;
        for (i, (span, v)) in spans.into_iter().zip(vectors).enumerate() {
            let heavy = entry.threshold_heavy.unwrap_or_else(|| is_threshold_heavy(&span.text));
            let chunk = Chunk {
                id: format!("{}#{i}", entry.path),
                text: span.text,
                source_file: entry.path.clone(),
                page: span.page,
                study_design: entry.study_design,
                topics: entry.topics.clone(),
                primary_metric: entry.primary_metric,
                threshold_heavy: heavy,
            };
            store.push(chunk, &v)?;
        }
    }
    Ok(store)
}
