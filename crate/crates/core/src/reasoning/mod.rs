//! Stepwise prompting over a pluggable completion backend, report parsing
//! and post-hoc validation.

mod client;
mod mock;
mod pipeline;
mod prompt;
mod repetition;
mod report;
mod validate;

pub use client::{
    complete_with_retry, Attempted, CompletionClient, CompletionRequest, CompletionResponse, HttpClient, RetryPolicy,
    SamplingParams,
};
pub use mock::{prompt_hash, FixtureClient, HeuristicClient, ScriptedClient};
pub use pipeline::{
    detect_step_conflicts, gather_evidence, run_pipeline, Evidence, Knowledge, LogEvent, PipelineConfig, StepReport,
    TrialFailure, TrialInput, TrialOutcome,
};
pub use prompt::{
    assemble_prompt, step_name, EegFeatures, IncompleteContext, PromptConfig, StepContext, HIERARCHY_REMINDER,
    KEY_METRICS, REGENERATION_INSTRUCTION,
};
pub use repetition::{truncate_repetition, MAX_CHAR_RUN, MAX_NGRAM_REPEATS, NGRAM_TOKENS};
pub use report::{extract_citations, extract_z_scores, parse_report, Confidence, StateLabel, StructuredReport};
pub use validate::{
    detect_mapping_paradox, downgrade, validate, ArousalLexicon, CrossCheckFailure, NumericHallucination,
    ValidationConfig, ValidationResult, ZConflict,
};
