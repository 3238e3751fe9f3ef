use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::CompletionError;

/// Decoding knobs carried with every request. The backend enforces them;
/// the mocks ignore them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingParams {
    pub temperature: f64,
    pub top_p: f64,
    pub repetition_penalty: f64,
    pub max_tokens: u32,
    /// Budget for the Step-8 integration call.
    pub final_max_tokens: u32,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self {
            temperature: 0.3,
            top_p: 0.85,
            repetition_penalty: 1.05,
            max_tokens: 1024,
            final_max_tokens: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    /// Pipeline step that issued the request; not sent to the backend.
    #[serde(skip_serializing, default)]
    pub step: u8,
    pub system: String,
    pub user: String,
    pub temperature: f64,
    pub top_p: f64,
    pub repetition_penalty: f64,
    pub max_tokens: u32,
}

impl CompletionRequest {
    pub fn new(step: u8, system: String, user: String, params: &SamplingParams) -> Self {
        Self {
            step,
            system,
            user,
            temperature: params.temperature,
            top_p: params.top_p,
            repetition_penalty: params.repetition_penalty,
            max_tokens: if step == 8 { params.final_max_tokens } else { params.max_tokens },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
    #[serde(default)]
    pub tokens: usize,
    #[serde(default = "default_finish")]
    pub finish_reason: String,
}

fn default_finish() -> String {
    "stop".to_string()
}

impl CompletionResponse {
    pub fn stop(text: impl Into<String>) -> Self {
        let text = text.into();
        Self {
            tokens: text.split_whitespace().count(),
            text,
            finish_reason: default_finish(),
        }
    }
}

/// A text-completion backend. Implementations must be shareable across the
/// trial worker pool.
pub trait CompletionClient: Send + Sync {
    fn id(&self) -> String;
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, CompletionError>;
}

/// Exponential backoff for transport failures and timeouts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub factor: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            base_delay_ms: 250,
            factor: 2,
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, retry: u32) -> Duration {
        Duration::from_millis(self.base_delay_ms.saturating_mul(u64::from(self.factor).saturating_pow(retry)))
    }
}

/// Outcome of a retried call: the last result and how many attempts it took.
#[derive(Debug, Clone, PartialEq)]
pub struct Attempted {
    pub result: Result<CompletionResponse, CompletionError>,
    pub attempts: u32,
}

pub fn complete_with_retry(client: &dyn CompletionClient, req: &CompletionRequest, policy: &RetryPolicy) -> Attempted {
    let mut attempts = 0;
    loop {
        attempts += 1;
        let result = client.complete(req);
        match &result {
            Err(e) if e.is_retryable() && attempts <= policy.max_retries => {
                log::warn!("step {} attempt {attempts} failed: {e}", req.step);
                std::thread::sleep(policy.delay(attempts - 1));
            }
            _ => return Attempted { result, attempts },
        }
    }
}

/// JSON-over-HTTP backend: POSTs the request and expects `{text, finish_reason}`.
#[derive(Debug)]
pub struct HttpClient {
    url: String,
    agent: ureq::Agent,
}

impl HttpClient {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { url: url.into(), agent }
    }
}

impl CompletionClient for HttpClient {
    fn id(&self) -> String {
        format!("http:{}", self.url)
    }

    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, CompletionError> {
        let mut resp = self.agent.post(&self.url).send_json(req).map_err(|e| match e {
            ureq::Error::Timeout(_) => CompletionError::Timeout(e.to_string()),
            other => CompletionError::Transport(other.to_string()),
        })?;
        let status = resp.status().as_u16();
        if (400..500).contains(&status) {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(CompletionError::BackendRefused(format!("HTTP {status}: {body}")));
        }
        if status >= 500 {
            return Err(CompletionError::Transport(format!("HTTP {status}")));
        }
        resp.body_mut()
            .read_json::<CompletionResponse>()
            .map_err(|e| CompletionError::Transport(format!("malformed response: {e}")))
    }
}
