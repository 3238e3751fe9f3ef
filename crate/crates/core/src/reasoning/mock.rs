use std::collections::{BTreeMap, VecDeque};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{LazyLock, Mutex};

use regex::Regex;
use sha2::{Digest, Sha256};

use super::{CompletionClient, CompletionRequest, CompletionResponse};
use crate::error::CompletionError;

/// SHA-256 of system and user prompt, hex encoded. Fixture files are named by it.
pub fn prompt_hash(req: &CompletionRequest) -> String {
    let mut h = Sha256::new();
    h.update(req.system.as_bytes());
    h.update([0u8]);
    h.update(req.user.as_bytes());
    hex::encode(h.finalize())
}

/// Replays canned responses in order and records every request.
#[derive(Debug, Default)]
pub struct ScriptedClient {
    script: Mutex<VecDeque<Result<String, CompletionError>>>,
    seen: Mutex<Vec<CompletionRequest>>,
    calls: AtomicUsize,
}

impl ScriptedClient {
    pub fn new(script: Vec<Result<String, CompletionError>>) -> Self {
        Self {
            script: Mutex::new(script.into()),
            ..Self::default()
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn requests(&self) -> Vec<CompletionRequest> {
        self.seen.lock().expect("poisoned").clone()
    }
}

impl CompletionClient for ScriptedClient {
    fn id(&self) -> String {
        "scripted".into()
    }

    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, CompletionError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.seen.lock().expect("poisoned").push(req.clone());
        match self.script.lock().expect("poisoned").pop_front() {
            Some(r) => r.map(CompletionResponse::stop),
            None => Err(CompletionError::BackendRefused("script exhausted".into())),
        }
    }
}

/// Serves `<prompt hash>.txt` files from a directory.
#[derive(Debug, Clone, Default)]
pub struct FixtureClient {
    fixtures: BTreeMap<String, String>,
}

impl FixtureClient {
    pub fn from_dir(dir: &Path) -> std::io::Result<Self> {
        let mut fixtures = BTreeMap::new();
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "txt") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    fixtures.insert(stem.to_string(), std::fs::read_to_string(&path)?);
                }
            }
        }
        Ok(Self { fixtures })
    }

    pub fn insert(&mut self, req: &CompletionRequest, text: impl Into<String>) {
        self.fixtures.insert(prompt_hash(req), text.into());
    }
}

impl CompletionClient for FixtureClient {
    fn id(&self) -> String {
        format!("fixture:{}", self.fixtures.len())
    }

    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, CompletionError> {
        let key = prompt_hash(req);
        self.fixtures
            .get(&key)
            .map(CompletionResponse::stop)
            .ok_or_else(|| CompletionError::BackendRefused(format!("no fixture for prompt {key}")))
    }
}

static SUMMARY_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?m)^- (\S+): [^|\n]*\| z_trad = (\S+)(?: \| z_Δ = (\S+))?").expect("static regex")
});
static MARKER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[RAG: [^\]]+\]").expect("static regex"));

/// Rule-based stand-in for a model. Steps 1–7 get a one-line acknowledgement;
/// Step 8 reads the quantitative summary and writes a template-conformant
/// report whose wording agrees with the z-scores it cites.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicClient;

fn z_of(summary: &BTreeMap<String, f64>, name: &str) -> f64 {
    summary.get(name).copied().unwrap_or(0.0)
}

fn phrase(metric: &str, z: f64) -> &'static str {
    match (metric, z > 0.0) {
        ("RMSSD", true) => "increased vagal tone",
        ("RMSSD", false) => "reduced vagal tone",
        ("SDNN", true) => "increased overall variability",
        ("SDNN", false) => "reduced overall variability",
        ("pNN50", true) => "increased vagal modulation",
        ("pNN50", false) => "decreased vagal modulation",
        ("MeanHR", true) => "elevated heart rate",
        ("MeanHR", false) => "lowered heart rate",
        ("LF/HF", true) => "increased LF/HF",
        ("LF/HF", false) => "decreased LF/HF",
        ("SampEn", true) => "increased complexity",
        ("SampEn", false) => "reduced complexity",
        ("DFA_alpha", true) => "increased fractal correlation",
        (_, _) => "reduced fractal correlation",
    }
}

impl HeuristicClient {
    fn integrate(req: &CompletionRequest) -> String {
        let summary_block = req.user.split("\nStep reports:").next().unwrap_or("");
        let mut z = BTreeMap::new();
        for c in SUMMARY_LINE.captures_iter(summary_block) {
            let pick = c.get(3).map(|m| m.as_str()).unwrap_or(&c[2]);
            if let Ok(v) = pick.parse::<f64>() {
                z.insert(c[1].to_string(), v);
            }
        }
        let arousal = z_of(&z, "MeanHR") - z_of(&z, "RMSSD");
        let valence = z_of(&z, "SampEn") - z_of(&z, "LF/HF");
        let high_a = arousal > 0.0;
        let high_v = valence > 0.0;
        let state = match (high_v, high_a) {
            (true, true) => "HVHA",
            (true, false) => "HVLA",
            (false, true) => "LVHA",
            (false, false) => "LVLA",
        };
        let capped = req.system.contains("may not exceed Medium");
        let confidence = if arousal.abs() > 1.5 && valence.abs() > 0.5 && !capped {
            "High"
        } else if arousal.abs() > 0.5 {
            "Medium"
        } else {
            "Low"
        };
        let mut rationale = Vec::new();
        rationale.push(if high_a {
            "The pattern suggests sympathetic activation with elevated arousal.".to_string()
        } else {
            "The pattern suggests relaxation with reduced arousal.".to_string()
        });
        for (name, v) in &z {
            if v.abs() > 0.5 {
                rationale.push(format!("{name} (z = {v:+.2}) indicates {}.", phrase(name, *v)));
            }
        }
        let lfhf_banned = req.system.contains("Prohibit using LF/HF");
        if lfhf_banned {
            rationale.push("LF/HF is not used for sympathovagal balance because of respiratory overlap.".to_string());
        }
        if req.system.contains("[RAG: file, p.N]") {
            if let Some(m) = MARKER.find(&req.user) {
                rationale.push(format!("Supporting evidence: {}.", m.as_str()));
            }
        }
        let mut limits = vec!["Short-term recording; heuristic interpretation.".to_string()];
        if req.system.contains("Quality warning") {
            limits.push("Signal quality warnings apply.".into());
        }
        if req.system.contains("rely on time-domain features only") {
            limits.push("Nonlinear metrics were excluded for insufficient data length.".into());
        }
        format!(
            "State: {state}\nConfidence: {confidence}\nRationale: {}\nLimitations: {}\n",
            rationale.join(" "),
            limits.join(" ")
        )
    }
}

impl CompletionClient for HeuristicClient {
    fn id(&self) -> String {
        "heuristic-mock".into()
    }

    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, CompletionError> {
        let text = if req.step == 8 {
            Self::integrate(req)
        } else {
            let lines = req.user.lines().filter(|l| l.starts_with("- ")).count();
            let directives = req.system.lines().filter(|l| l.starts_with("- ")).count();
            format!(
                "Step {} reviewed {lines} quantitative inputs under {directives} directives.",
                req.step
            )
        };
        Ok(CompletionResponse::stop(text))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reasoning::{parse_report, SamplingParams, StateLabel};

    #[test]
    fn fixture_lookup_by_hash() {
        let req = CompletionRequest::new(2, "sys".into(), "user".into(), &SamplingParams::default());
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(format!("{}.txt", prompt_hash(&req))), "fixture text").unwrap();
        let c = FixtureClient::from_dir(dir.path()).unwrap();
        assert_eq!(c.complete(&req).unwrap().text, "fixture text");
        let other = CompletionRequest::new(2, "sys".into(), "other".into(), &SamplingParams::default());
        assert!(matches!(c.complete(&other), Err(CompletionError::BackendRefused(_))));
    }

    #[test]
    fn hash_separates_system_from_user() {
        let p = SamplingParams::default();
        let a = CompletionRequest::new(1, "ab".into(), "c".into(), &p);
        let b = CompletionRequest::new(1, "a".into(), "bc".into(), &p);
        assert_ne!(prompt_hash(&a), prompt_hash(&b));
        assert_eq!(prompt_hash(&a).len(), 64);
    }

    #[test]
    fn heuristic_reads_the_summary() {
        let user = "Quantitative summary:\n- RMSSD: 30.00 ms | z_trad = +0.10 | z_Δ = -1.50 (moderate ↓)\n- MeanHR: 90.00 bpm | z_trad = +0.20 | z_Δ = +2.00 (marked ↑)\n- SampEn: 1.000 | z_trad = -0.30 | z_Δ = -1.00 (mild ↓)\n\nStep reports:\n- RMSSD: 1 | z_trad = +9.00\n";
        let req = CompletionRequest::new(8, "template".into(), user.into(), &SamplingParams::default());
        let r = parse_report(&HeuristicClient.complete(&req).unwrap().text);
        assert_eq!(r.state, StateLabel::Lvha);
        assert_eq!(r.z_scores_cited.len(), 3);
    }
}
