use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    assemble_prompt, complete_with_retry, downgrade, parse_report, step_name, truncate_repetition, validate,
    CompletionClient, CompletionRequest, Confidence, EegFeatures, PromptConfig, RetryPolicy, StepContext,
    StructuredReport, ValidationConfig, ValidationResult, REGENERATION_INSTRUCTION,
};
use crate::error::{CompletionError, KnowledgeError};
use crate::guardrails::GuardrailSet;
use crate::knowledge::{build_queries, govern, retrieve, Embedder, QueryKind, RetrievalConfig, ScoredPassage, VectorStore};
use crate::metric::{Domain, Metric};
use crate::normalization::NormalizedPanel;
use crate::signal::FeaturePanel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub prompt: PromptConfig,
    pub retrieval: RetrievalConfig,
    /// Off under the "w/o RAG" ablation.
    pub rag: bool,
    pub retry: RetryPolicy,
    pub validation: ValidationConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            prompt: PromptConfig::default(),
            retrieval: RetrievalConfig::default(),
            rag: true,
            retry: RetryPolicy::default(),
            validation: ValidationConfig::default(),
        }
    }
}

/// The literature store and the embedder that built it.
#[derive(Clone, Copy)]
pub struct Knowledge<'a> {
    pub store: &'a VectorStore,
    pub embedder: &'a dyn Embedder,
}

#[derive(Debug, Clone)]
pub struct TrialInput {
    pub features: FeaturePanel,
    pub panel: NormalizedPanel,
    pub guardrails: GuardrailSet,
    pub eeg: Option<EegFeatures>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: u8,
    pub name: String,
    pub skipped: bool,
    pub system: String,
    pub user: String,
    pub citations: Vec<String>,
    pub response: Option<String>,
    pub finish_reason: Option<String>,
    pub attempts: u32,
    /// Step 8 only: the answer that triggered the mapping-paradox retry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub superseded_response: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEvent {
    pub trial: String,
    pub step: Option<u8>,
    pub event: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub steps: Vec<StepReport>,
    pub report: StructuredReport,
    pub validation: ValidationResult,
    pub log: Vec<LogEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub step: Option<u8>,
    pub reason: String,
    pub steps: Vec<StepReport>,
    pub log: Vec<LogEvent>,
}

/// Governed passages per step (2, 3, 4 by metric domain) plus the merged
/// set that Step 8 sees.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Evidence {
    pub by_step: BTreeMap<u8, Vec<ScoredPassage>>,
    pub integrated: Vec<ScoredPassage>,
    pub queries: usize,
}

fn merge_top(into: &mut Vec<ScoredPassage>, more: &[ScoredPassage], cfg: &RetrievalConfig) {
    for p in more {
        match into.iter_mut().find(|q| q.chunk.id == p.chunk.id) {
            Some(q) if p.s_adj > q.s_adj => *q = p.clone(),
            Some(_) => {}
            None => into.push(p.clone()),
        }
    }
    // already weighted; re-sort with the governance order and cut
    let taken = std::mem::take(into);
    let mut sorted: Vec<ScoredPassage> = taken;
    sorted.sort_by(|a, b| {
        b.s_adj
            .total_cmp(&a.s_adj)
            .then(b.s_raw.total_cmp(&a.s_raw))
            .then_with(|| a.chunk.source_file.cmp(&b.chunk.source_file))
            .then(a.chunk.page.cmp(&b.chunk.page))
            .then_with(|| a.chunk.id.cmp(&b.chunk.id))
    });
    sorted.truncate(cfg.top_k);
    *into = sorted;
}

fn step_for(metric: Metric) -> u8 {
    match metric.domain() {
        Domain::Time => 2,
        Domain::Frequency => 3,
        Domain::Nonlinear => 4,
    }
}

/// State queries for every changed metric plus, when guardrails are on,
/// one warning query per contradiction pattern.
pub fn gather_evidence(
    panel: &NormalizedPanel,
    guardrails: &GuardrailSet,
    knowledge: Knowledge,
    cfg: &RetrievalConfig,
) -> Result<Evidence, KnowledgeError> {
    let flags = if guardrails.enabled { guardrails.contradictions.as_slice() } else { &[] };
    let queries = build_queries(panel, flags);
    let mut ev = Evidence {
        queries: queries.len(),
        ..Evidence::default()
    };
    for q in &queries {
        let hits = govern(retrieve(&q.text, knowledge.store, knowledge.embedder, cfg)?, &q.topics, cfg);
        if let QueryKind::State { metric, .. } = q.kind {
            merge_top(ev.by_step.entry(step_for(metric)).or_default(), &hits, cfg);
        }
        merge_top(&mut ev.integrated, &hits, cfg);
    }
    Ok(ev)
}

/// Sign conflicts between z_trad and z_Δ, and a Step-2 versus Step-6
/// disagreement on the arousal direction (MeanHR minus RMSSD).
pub fn detect_step_conflicts(panel: &NormalizedPanel) -> Vec<String> {
    let mut out: Vec<String> = panel
        .entries
        .iter()
        .filter(|e| e.conflict)
        .map(|e| {
            format!(
                "sign(z_trad) != sign(z_Δ) for {} (z_trad = {:+.2}, z_Δ = {:+.2})",
                e.metric.name(),
                e.z_trad.unwrap_or(0.0),
                e.z_delta.unwrap_or(0.0)
            )
        })
        .collect();
    let pair = |f: fn(&crate::normalization::NormalizedMetric) -> Option<f64>| {
        Some(f(panel.get(Metric::MeanHr)?)? - f(panel.get(Metric::Rmssd)?)?)
    };
    if let (Some(s2), Some(s6)) = (pair(|e| e.z_trad), pair(|e| e.z_s6)) {
        if s2 * s6 < 0.0 {
            out.push(format!(
                "Step 2 (population) and Step 6 (within-subject) disagree on arousal direction ({s2:+.2} vs {s6:+.2})"
            ));
        }
    }
    out
}

struct Runner<'a> {
    trial: String,
    client: &'a dyn CompletionClient,
    cfg: &'a PipelineConfig,
    log: Vec<LogEvent>,
    steps: Vec<StepReport>,
}

impl Runner<'_> {
    fn note(&mut self, step: Option<u8>, event: &str, detail: String) {
        self.log.push(LogEvent {
            trial: self.trial.clone(),
            step,
            event: event.to_string(),
            detail,
        });
    }

    fn call(&mut self, req: &CompletionRequest) -> Result<(String, String, u32), CompletionError> {
        let out = complete_with_retry(self.client, req, &self.cfg.retry);
        match out.result {
            Ok(r) => {
                self.note(Some(req.step), "completed", format!("attempts={} finish={}", out.attempts, r.finish_reason));
                Ok((r.text, r.finish_reason, out.attempts))
            }
            Err(e) => {
                self.note(Some(req.step), "completion_error", format!("attempts={} {e}", out.attempts));
                Err(e)
            }
        }
    }

    fn fail(self, step: Option<u8>, reason: String) -> TrialFailure {
        TrialFailure {
            step,
            reason,
            steps: self.steps,
            log: self.log,
        }
    }
}

fn report_of(step: u8, req: Option<&CompletionRequest>, passages: &[ScoredPassage]) -> StepReport {
    StepReport {
        step,
        name: step_name(step).to_string(),
        skipped: req.is_none(),
        system: req.map(|r| r.system.clone()).unwrap_or_default(),
        user: req.map(|r| r.user.clone()).unwrap_or_default(),
        citations: passages.iter().map(|p| p.chunk.citation()).collect(),
        response: None,
        finish_reason: None,
        attempts: 0,
        superseded_response: None,
    }
}

/// Runs steps 1–8 in order for one trial. Completion failures end the trial
/// but never panic; the caller decides whether the batch continues.
pub fn run_pipeline(
    input: &TrialInput,
    knowledge: Option<Knowledge>,
    client: &dyn CompletionClient,
    cfg: &PipelineConfig,
) -> Result<TrialOutcome, TrialFailure> {
    let trial = format!("{}_{}", input.features.subject_id, input.features.trial_id);
    let mut run = Runner {
        trial,
        client,
        cfg,
        log: Vec::new(),
        steps: Vec::new(),
    };

    let evidence = match knowledge.filter(|_| cfg.rag) {
        Some(k) => match gather_evidence(&input.panel, &input.guardrails, k, &cfg.retrieval) {
            Ok(ev) => ev,
            Err(e) => return Err(run.fail(None, format!("retrieval failed: {e}"))),
        },
        None => Evidence::default(),
    };
    if cfg.rag {
        run.note(
            None,
            "retrieval",
            format!("queries={} passages={}", evidence.queries, evidence.integrated.len()),
        );
    }
    let conflicts = detect_step_conflicts(&input.panel);

    for step in 1..=7u8 {
        let passages: &[ScoredPassage] = evidence.by_step.get(&step).map_or(&[], |v| v.as_slice());
        if step == 7 && input.eeg.is_none() {
            run.note(Some(7), "skipped", "no EEG channel".into());
            run.steps.push(report_of(7, None, &[]));
            continue;
        }
        let ctx = StepContext {
            step,
            features: &input.features,
            panel: &input.panel,
            guardrails: &input.guardrails,
            passages,
            prior: &[],
            conflicts: &[],
            eeg: input.eeg.as_ref(),
        };
        let req = match assemble_prompt(&ctx, &cfg.prompt) {
            Ok(r) => r,
            Err(e) => return Err(run.fail(Some(step), e.to_string())),
        };
        let mut rep = report_of(step, Some(&req), passages);
        match run.call(&req) {
            Ok((text, finish, attempts)) => {
                rep.response = Some(text);
                rep.finish_reason = Some(finish);
                rep.attempts = attempts;
                run.steps.push(rep);
            }
            Err(e) => {
                run.steps.push(rep);
                return Err(run.fail(Some(step), e.to_string()));
            }
        }
    }

    let prior = run.steps.clone();
    let ctx = StepContext {
        step: 8,
        features: &input.features,
        panel: &input.panel,
        guardrails: &input.guardrails,
        passages: &evidence.integrated,
        prior: &prior,
        conflicts: &conflicts,
        eeg: input.eeg.as_ref(),
    };
    let req = match assemble_prompt(&ctx, &cfg.prompt) {
        Ok(r) => r,
        Err(e) => return Err(run.fail(Some(8), e.to_string())),
    };
    let mut rep = report_of(8, Some(&req), &evidence.integrated);

    let (text, finish, attempts) = match run.call(&req) {
        Ok(x) => x,
        Err(e) => {
            run.steps.push(rep);
            return Err(run.fail(Some(8), e.to_string()));
        }
    };
    let (clean, truncated) = truncate_repetition(&text);
    let mut report = parse_report(&clean);
    let mut validation = validate(&report, &input.features, &input.panel, &cfg.validation);
    validation.repetition_truncated = truncated;
    rep.response = Some(text);
    rep.finish_reason = Some(finish);
    rep.attempts = attempts;

    if validation.mapping_paradox {
        run.note(Some(8), "mapping_paradox", format!("state {} contradicts rationale", report.state));
        let mut retry = req.clone();
        retry.system.push('\n');
        retry.system.push_str(REGENERATION_INSTRUCTION);
        retry.system.push('\n');
        let (text2, finish2, attempts2) = match run.call(&retry) {
            Ok(x) => x,
            Err(e) => {
                run.steps.push(rep);
                return Err(run.fail(Some(8), e.to_string()));
            }
        };
        let (clean2, truncated2) = truncate_repetition(&text2);
        report = parse_report(&clean2);
        let mut v2 = validate(&report, &input.features, &input.panel, &cfg.validation);
        v2.repetition_truncated = truncated || truncated2;
        v2.regenerated = true;
        v2.actions_taken.insert(0, "regenerated once after mapping paradox".into());
        if v2.mapping_paradox {
            let lowered = downgrade(report.confidence);
            report.confidence = Some(lowered);
            v2.actions_taken.push(format!("paradox persisted; confidence downgraded to {}", lowered.as_str()));
        }
        validation = v2;
        rep.superseded_response = rep.response.replace(text2);
        rep.finish_reason = Some(finish2);
        rep.attempts += attempts2;
    }
    if validation.repetition_truncated {
        validation.actions_taken.push("truncated repeated output".into());
    }
    if input.guardrails.caps_confidence() && report.confidence == Some(Confidence::High) {
        report.confidence = Some(Confidence::Medium);
        validation.actions_taken.push("confidence capped at Medium by the quality gate".into());
    }
    for a in &validation.actions_taken {
        let a = a.clone();
        run.note(Some(8), "validation", a);
    }
    run.steps.push(rep);

    Ok(TrialOutcome {
        steps: run.steps,
        report,
        validation,
        log: run.log,
    })
}
