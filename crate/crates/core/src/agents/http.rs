//! Chat-completions style HTTP backend.

use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{finish, Agent, AgentError, AgentResponse, ParsePolicy, TrialSeed};
use crate::scenarios::{Prompt, Task};

/// Appended to 2x2 game prompts when the backend is asked for a motivation.
pub const MOTIVATION_REQUEST: &str = "Before giving your answer, briefly explain the motivation for your choice. \
Then write your answer, the single letter \"C\" or \"D\", alone on the final line.";

/// Exponential backoff for HTTP 429/5xx and transport failures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub base_ms: u64,
    pub factor: f64,
    pub cap_ms: u64,
    pub max_retries: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            base_ms: 1_000,
            factor: 2.0,
            cap_ms: 60_000,
            max_retries: 5,
        }
    }
}

impl RetryPolicy {
    /// Wait before retry number `retry` (zero-based).
    pub fn delay(&self, retry: u32) -> Duration {
        let ms = self.base_ms as f64 * self.factor.powi(retry as i32);
        Duration::from_millis(ms.min(self.cap_ms as f64) as u64)
    }
}

fn default_temperature() -> f64 {
    0.8
}

fn default_max_tokens() -> u32 {
    512
}

fn default_timeout_secs() -> f64 {
    120.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmHttpSpec {
    pub endpoint_url: String,
    pub model_name: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default)]
    pub ask_motivation: bool,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: f64,
    /// Name of the environment variable holding the bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_token_env: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_k: Option<u32>,
    #[serde(default)]
    pub case_insensitive: bool,
    #[serde(default)]
    pub retry: RetryPolicy,
}

impl LlmHttpSpec {
    pub fn new(endpoint_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            endpoint_url: endpoint_url.into(),
            model_name: model_name.into(),
            temperature: default_temperature(),
            max_tokens: default_max_tokens(),
            ask_motivation: false,
            timeout_secs: default_timeout_secs(),
            auth_token_env: None,
            top_p: None,
            top_k: None,
            case_insensitive: false,
            retry: RetryPolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(AgentError::Config("temperature must be >= 0".into()));
        }
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(AgentError::Config("timeout must be positive".into()));
        }
        if self.endpoint_url.is_empty() || self.model_name.is_empty() {
            return Err(AgentError::Config("endpoint and model are required".into()));
        }
        Ok(())
    }

    pub fn parse_policy(&self) -> ParsePolicy {
        ParsePolicy {
            case_insensitive: self.case_insensitive,
            final_line: self.ask_motivation,
        }
    }

    /// JSON request body for one prompt.
    pub fn request_body(&self, prompt: &Prompt) -> Value {
        let mut user = prompt.bundle.user.clone();
        // Contribution answers are read from the first number, so the
        // motivation request only applies to 2x2 games.
        if self.ask_motivation && matches!(prompt.task, Task::Matrix(_)) {
            user.push('\n');
            user.push_str(MOTIVATION_REQUEST);
        }
        let mut body = json!({
            "model": self.model_name,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "messages": [
                {"role": "system", "content": prompt.bundle.system},
                {"role": "user", "content": user},
            ],
        });
        if let Some(top_p) = self.top_p {
            body["top_p"] = json!(top_p);
        }
        if let Some(top_k) = self.top_k {
            body["top_k"] = json!(top_k);
        }
        body
    }
}

pub struct LlmHttpAgent {
    spec: LlmHttpSpec,
    token: Option<String>,
    client: ureq::Agent,
}

impl LlmHttpAgent {
    pub fn new(spec: LlmHttpSpec) -> Result<Self, AgentError> {
        spec.validate()?;
        let token = match &spec.auth_token_env {
            Some(var) => Some(
                std::env::var(var)
                    .map_err(|_| AgentError::Config(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let client = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(spec.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self { spec, token, client })
    }

    fn send_once(&self, body: &Value) -> Result<String, Attempt> {
        let mut request = self.client.post(&self.spec.endpoint_url);
        if let Some(token) = &self.token {
            request = request.header("Authorization", format!("Bearer {token}"));
        }
        let mut response = request.send_json(body).map_err(|e| match e {
            ureq::Error::Timeout(_) => Attempt::Retry(AgentError::Timeout),
            other => Attempt::Retry(AgentError::Transport(other.to_string())),
        })?;
        let status = response.status().as_u16();
        if !(200..300).contains(&status) {
            let body = response.body_mut().read_to_string().unwrap_or_default();
            let err = AgentError::Http { status, body };
            return Err(if status == 429 || status >= 500 {
                Attempt::Retry(err)
            } else {
                Attempt::Fatal(err)
            });
        }
        let value: Value = response
            .body_mut()
            .read_json()
            .map_err(|e| Attempt::Fatal(AgentError::Protocol(e.to_string())))?;
        extract_content(&value).map_err(Attempt::Fatal)
    }
}

enum Attempt {
    Retry(AgentError),
    Fatal(AgentError),
}

/// Text of the first choice's message.
pub(crate) fn extract_content(value: &Value) -> Result<String, AgentError> {
    value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| AgentError::Protocol("missing choices[0].message.content".into()))
}

impl Agent for LlmHttpAgent {
    fn decide(&self, prompt: &Prompt, _seed: TrialSeed) -> Result<AgentResponse, AgentError> {
        let body = self.spec.request_body(prompt);
        let started = Instant::now();
        let mut retry = 0;
        loop {
            match self.send_once(&body) {
                Ok(text) => return Ok(finish(&prompt.task, text, self.spec.parse_policy(), started)),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(e)) if retry >= self.spec.retry.max_retries => return Err(e),
                Err(Attempt::Retry(_)) => {
                    thread::sleep(self.spec.retry.delay(retry));
                    retry += 1;
                }
            }
        }
    }
}
