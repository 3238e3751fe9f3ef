use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::T3Mode;
use crate::guardrails::GuardrailConfig;
use crate::knowledge::{Embedder, HashEmbedder, HttpEmbedder};
use crate::normalization::{BaselineMode, NormConfig};
use crate::reasoning::{CompletionClient, FixtureClient, HeuristicClient, HttpClient, PipelineConfig};
use crate::signal::FeatureConfig;

/// The three component switches that define an ablation row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Switches {
    pub rag: bool,
    pub guardrails: bool,
    pub delta_z: bool,
}

impl Default for Switches {
    fn default() -> Self {
        AblationRow::Full.switches()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AblationRow {
    Full,
    NoRag,
    NoGuardrails,
    NoDeltaZ,
    Minimal,
}

impl AblationRow {
    pub const ALL: [AblationRow; 5] = [
        AblationRow::Full,
        AblationRow::NoRag,
        AblationRow::NoGuardrails,
        AblationRow::NoDeltaZ,
        AblationRow::Minimal,
    ];

    pub fn label(self) -> &'static str {
        match self {
            AblationRow::Full => "Full System",
            AblationRow::NoRag => "w/o RAG",
            AblationRow::NoGuardrails => "w/o Guardrails",
            AblationRow::NoDeltaZ => "w/o ΔZ",
            AblationRow::Minimal => "Minimal",
        }
    }

    /// Directory name under an ablation output root.
    pub fn slug(self) -> &'static str {
        match self {
            AblationRow::Full => "full",
            AblationRow::NoRag => "no-rag",
            AblationRow::NoGuardrails => "no-guardrails",
            AblationRow::NoDeltaZ => "no-delta-z",
            AblationRow::Minimal => "minimal",
        }
    }

    pub fn switches(self) -> Switches {
        let (rag, guardrails, delta_z) = match self {
            AblationRow::Full => (true, true, true),
            AblationRow::NoRag => (false, true, true),
            AblationRow::NoGuardrails => (true, false, true),
            AblationRow::NoDeltaZ => (true, true, false),
            AblationRow::Minimal => (false, false, false),
        };
        Switches { rag, guardrails, delta_z }
    }

    /// The named row for a switch combination, if it is one of the five.
    pub fn from_switches(s: Switches) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.switches() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    /// Built-in rule-based client; needs no model.
    #[default]
    Mock,
    /// Canned responses keyed by prompt hash.
    Fixture,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub url: Option<String>,
    pub timeout_s: u64,
    pub fixtures: Option<PathBuf>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Mock,
            url: None,
            timeout_s: 120,
            fixtures: None,
        }
    }
}

impl BackendConfig {
    pub fn build(&self) -> Result<Box<dyn CompletionClient>> {
        Ok(match self.kind {
            BackendKind::Mock => Box::new(HeuristicClient),
            BackendKind::Fixture => {
                let dir = self
                    .fixtures
                    .as_ref()
                    .ok_or_else(|| Error::Config("fixture backend needs a fixtures directory".into()))?;
                Box::new(FixtureClient::from_dir(dir)?)
            }
            BackendKind::Http => {
                let url = self
                    .url
                    .as_ref()
                    .ok_or_else(|| Error::Config("http backend needs a url".into()))?;
                Box::new(HttpClient::new(url.clone(), Duration::from_secs(self.timeout_s)))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedderKind {
    #[default]
    Hash,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedderConfig {
    pub kind: EmbedderKind,
    pub dim: usize,
    pub seed: u64,
    pub url: Option<String>,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        let h = HashEmbedder::default();
        Self {
            kind: EmbedderKind::Hash,
            dim: h.dim,
            seed: h.seed,
            url: None,
        }
    }
}

impl EmbedderConfig {
    pub fn build(&self) -> Result<Box<dyn Embedder>> {
        Ok(match self.kind {
            EmbedderKind::Hash => Box::new(HashEmbedder::new(self.dim, self.seed)),
            EmbedderKind::Http => {
                let url = self
                    .url
                    .as_ref()
                    .ok_or_else(|| Error::Config("http embedder needs a url".into()))?;
                Box::new(HttpEmbedder::new(url.clone(), self.dim))
            }
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub store: Option<PathBuf>,
    pub population_stats: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
}

/// Everything a run depends on. Serialized into every run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub ablation: Switches,
    pub baseline_mode: BaselineMode,
    pub seed: u64,
    /// Trial worker bound; 0 lets the pool pick.
    pub workers: usize,
    pub backend: BackendConfig,
    pub embedder: EmbedderConfig,
    pub paths: Paths,
    pub t3_mode: T3Mode,
    pub features: FeatureConfig,
    pub normalization: NormConfig,
    pub guardrails: GuardrailConfig,
    pub pipeline: PipelineConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            ablation: Switches::default(),
            baseline_mode: BaselineMode::Retrospective,
            seed: 42,
            workers: 0,
            backend: BackendConfig::default(),
            embedder: EmbedderConfig::default(),
            paths: Paths::default(),
            t3_mode: T3Mode::Valence,
            features: FeatureConfig::default(),
            normalization: NormConfig::default(),
            guardrails: GuardrailConfig::default(),
            pipeline: PipelineConfig::default(),
        }
    }
}

impl RunConfig {
    /// Copy with the switches and baseline mode pushed into the component
    /// configs, which is what the run actually uses.
    pub fn effective(&self) -> Self {
        let mut c = self.clone();
        c.pipeline.rag = c.ablation.rag;
        c.guardrails.enabled = c.ablation.guardrails;
        c.normalization.delta_z = c.ablation.delta_z;
        c.normalization.baseline_mode = c.baseline_mode;
        c
    }

    pub fn with_row(&self, row: AblationRow) -> Self {
        let mut c = self.clone();
        c.ablation = row.switches();
        c
    }

    pub fn row(&self) -> Option<AblationRow> {
        AblationRow::from_switches(self.ablation)
    }

    pub fn validate(&self) -> Result<()> {
        self.features.validate()?;
        self.pipeline.retrieval.validate().map_err(Error::Config)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_cover_the_switch_table() {
        let got: Vec<(bool, bool, bool)> = AblationRow::ALL
            .iter()
            .map(|r| {
                let s = r.switches();
                (s.rag, s.guardrails, s.delta_z)
            })
            .collect();
        assert_eq!(
            got,
            vec![
                (true, true, true),
                (false, true, true),
                (true, false, true),
                (true, true, false),
                (false, false, false)
            ]
        );
        for r in AblationRow::ALL {
            assert_eq!(AblationRow::from_switches(r.switches()), Some(r));
        }
        let odd = Switches {
            rag: false,
            guardrails: false,
            delta_z: true,
        };
        assert_eq!(AblationRow::from_switches(odd), None);
    }

    #[test]
    fn effective_pushes_switches_down() {
        let c = RunConfig::default().with_row(AblationRow::Minimal).effective();
        assert!(!c.pipeline.rag && !c.guardrails.enabled && !c.normalization.delta_z);
        let c = RunConfig {
            baseline_mode: BaselineMode::Causal,
            ..RunConfig::default()
        };
        assert_eq!(c.effective().normalization.baseline_mode, BaselineMode::Causal);
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = RunConfig::default().with_row(AblationRow::NoDeltaZ);
        let s = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        let partial: RunConfig = serde_json::from_str(r#"{"seed": 7, "backend": {"kind": "http", "url": "http://x"}}"#).unwrap();
        assert_eq!(partial.seed, 7);
        assert_eq!(partial.backend.timeout_s, 120);
    }
}
