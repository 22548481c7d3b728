use std::time::Duration;

use serde_json::{json, Value};

use super::gateway::{BackendConfig, BackendError, Completion, CompletionBackend};
use super::CompletionRequest;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Minimal POST-a-JSON-body transport, swappable in tests.
pub trait HttpTransport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        bearer: &str,
        body: &Value,
        timeout: Duration,
    ) -> Result<HttpResponse, BackendError>;
}

pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new() -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(ReqwestTransport { client })
    }
}

impl HttpTransport for ReqwestTransport {
    fn post_json(
        &self,
        url: &str,
        bearer: &str,
        body: &Value,
        timeout: Duration,
    ) -> Result<HttpResponse, BackendError> {
        let resp = self
            .client
            .post(url)
            .bearer_auth(bearer)
            .timeout(timeout)
            .json(body)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    BackendError::Timeout
                } else {
                    BackendError::Transport(e.to_string())
                }
            })?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| {
            if e.is_timeout() {
                BackendError::Timeout
            } else {
                BackendError::Transport(e.to_string())
            }
        })?;
        Ok(HttpResponse { status, body })
    }
}

/// Chat-completions client for OpenAI-compatible endpoints.
pub struct OpenAiBackend {
    config: BackendConfig,
    transport: Box<dyn HttpTransport>,
    credential: Option<String>,
}

impl OpenAiBackend {
    /// Reads the credential from the environment variable named in `config`.
    pub fn from_env(config: BackendConfig) -> Result<Self, BackendError> {
        let credential = std::env::var(&config.credential_env).ok();
        Ok(Self::with_transport(config, Box::new(ReqwestTransport::new()?), credential))
    }

    pub fn with_transport(
        config: BackendConfig,
        transport: Box<dyn HttpTransport>,
        credential: Option<String>,
    ) -> Self {
        OpenAiBackend {
            config,
            transport,
            credential: credential.filter(|c| !c.is_empty()),
        }
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.config.endpoint.trim_end_matches('/'))
    }

    fn body(&self, request: &CompletionRequest) -> Value {
        let mut body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": request.prompt}],
        });
        if let Some(t) = self.config.temperature {
            body["temperature"] = json!(t);
        }
        if let Some(m) = self.config.max_tokens {
            body["max_tokens"] = json!(m);
        }
        body
    }
}

fn parse_body(body: &str) -> Result<Completion, BackendError> {
    let v: Value =
        serde_json::from_str(body).map_err(|e| BackendError::MalformedResponse(e.to_string()))?;
    let text = v
        .pointer("/choices/0/message/content")
        .or_else(|| v.pointer("/choices/0/text"))
        .and_then(Value::as_str)
        .ok_or_else(|| BackendError::MalformedResponse("no choices[0] content".into()))?;
    Ok(Completion {
        text: text.to_string(),
        request_id: v.get("id").and_then(Value::as_str).map(String::from),
        prompt_tokens: v.pointer("/usage/prompt_tokens").and_then(Value::as_u64),
        completion_tokens: v.pointer("/usage/completion_tokens").and_then(Value::as_u64),
    })
}

impl CompletionBackend for OpenAiBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, BackendError> {
        let Some(key) = &self.credential else {
            return Err(BackendError::AuthFailed(format!(
                "environment variable {} is not set",
                self.config.credential_env
            )));
        };
        let resp = self.transport.post_json(
            &self.url(),
            key,
            &self.body(request),
            Duration::from_millis(self.config.timeout_ms),
        )?;
        match resp.status {
            200..=299 => parse_body(&resp.body),
            401 | 403 => Err(BackendError::AuthFailed(format!("status {}", resp.status))),
            429 => Err(BackendError::RateLimited),
            408 => Err(BackendError::Timeout),
            status => Err(BackendError::Server {
                status,
                body: resp.body.chars().take(500).collect(),
            }),
        }
    }

    fn fingerprint(&self) -> String {
        format!("openai:{}@{}", self.config.model, self.config.endpoint)
    }
}
