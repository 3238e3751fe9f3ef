//! Guardrailed, retrieval-augmented stepwise interpretation of heart rate
//! variability.
//!
//! The crate turns raw RR intervals into a quantitative feature panel,
//! normalizes it against population and within-subject baselines, derives
//! deterministic guardrail decisions, retrieves and re-ranks supporting
//! literature, drives an eight-step prompting pipeline against a pluggable
//! completion backend, and scores the resulting reports.

pub mod error;
pub mod evaluation;
pub mod guardrails;
pub mod knowledge;
pub mod metric;
pub mod normalization;
pub mod reasoning;
pub mod run;
pub mod signal;

#[cfg(test)]
mod test_support;

pub use error::{Error, Result};
pub use metric::Metric;
pub use signal::{extract_features, FeatureConfig, FeaturePanel, RrSeries};
