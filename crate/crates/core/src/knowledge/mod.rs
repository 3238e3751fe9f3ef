//! Literature store: chunking, pluggable embedders, exact cosine retrieval,
//! state-aware query construction and evidence-governance re-ranking.

mod chunk;
mod embed;
mod govern;
mod manifest;
mod query;
mod store;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::metric::Metric;

pub use chunk::{chunk_document, count_threshold_claims, is_threshold_heavy, TextSpan};
pub use embed::{cosine, Embedder, HashEmbedder, HttpEmbedder};
pub use govern::{domain_weight, govern};
pub use manifest::{index_corpus, parse_manifest, ManifestEntry};
pub use query::{build_queries, metric_topic, Query, QueryKind};
pub use store::{retrieve, VectorStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyDesign {
    Rct,
    Controlled,
    Observational,
    Opinion,
    #[default]
    Unknown,
}

/// One indexed passage with its attribution metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub id: String,
    pub text: String,
    pub source_file: String,
    pub page: u32,
    pub study_design: StudyDesign,
    #[serde(default)]
    pub topics: Vec<String>,
    #[serde(default)]
    pub primary_metric: Option<Metric>,
    #[serde(default)]
    pub threshold_heavy: bool,
}

impl Chunk {
    /// Attribution marker carried into prompts and expected back in reports.
    pub fn citation(&self) -> String {
        format!("[RAG: {}, p.{}]", self.source_file, self.page)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPassage {
    pub chunk: Chunk,
    pub s_raw: f64,
    pub w_domain: f64,
    pub s_adj: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalConfig {
    pub chunk_size: usize,
    pub chunk_overlap: usize,
    /// Sentence-boundary search window at the end of a chunk, in tokens.
    pub boundary_tolerance: usize,
    pub top_k: usize,
    pub similarity_threshold: f64,
    pub metric_weights: BTreeMap<Metric, f64>,
    pub design_modifiers: BTreeMap<StudyDesign, f64>,
    pub threshold_penalty: f64,
    pub topic_bonus_unit: f64,
    pub topic_bonus_cap: f64,
    pub w_base: f64,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            chunk_size: 1000,
            chunk_overlap: 200,
            boundary_tolerance: 100,
            top_k: 5,
            similarity_threshold: 0.3,
            metric_weights: BTreeMap::from([
                (Metric::Rmssd, 0.9),
                (Metric::Sdnn, 0.7),
                (Metric::SampEn, 0.6),
                (Metric::DfaAlpha, 0.5),
                (Metric::Sd1Sd2, 0.4),
                (Metric::LfHf, 0.3),
            ]),
            design_modifiers: BTreeMap::from([
                (StudyDesign::Rct, 1.08),
                (StudyDesign::Controlled, 1.08),
                (StudyDesign::Observational, 1.05),
                (StudyDesign::Opinion, 0.97),
                (StudyDesign::Unknown, 1.0),
            ]),
            threshold_penalty: 0.85,
            topic_bonus_unit: 0.1,
            topic_bonus_cap: 0.5,
            w_base: 1.0,
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.chunk_size == 0 || self.chunk_overlap >= self.chunk_size {
            return Err("chunk_overlap must be smaller than a non-zero chunk_size".into());
        }
        if !(0.0..=1.0).contains(&self.similarity_threshold) {
            return Err("similarity threshold must lie in [0, 1]".into());
        }
        let weights_ok = self.metric_weights.values().all(|w| *w > 0.0)
            && self.design_modifiers.values().all(|w| *w > 0.0)
            && self.threshold_penalty > 0.0
            && self.w_base > 0.0;
        if !weights_ok {
            return Err("retrieval weights must be positive".into());
        }
        Ok(())
    }
}
