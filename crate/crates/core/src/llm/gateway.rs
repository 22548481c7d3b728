use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::CompletionRequest;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum BackendError {
    #[error("request timed out")]
    Timeout,
    #[error("rate limited")]
    RateLimited,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("server error {status}: {body}")]
    Server { status: u16, body: String },
    #[error("authentication failed: {0}")]
    AuthFailed(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("invalid backend config: {0}")]
    Config(String),
}

impl BackendError {
    /// Worth retrying under the gateway's policy.
    pub fn is_transient(&self) -> bool {
        match self {
            BackendError::Timeout | BackendError::RateLimited | BackendError::Transport(_) => true,
            BackendError::Server { status, .. } => *status >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub request_id: Option<String>,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

impl Completion {
    pub fn text(text: impl Into<String>) -> Self {
        Completion {
            text: text.into(),
            ..Completion::default()
        }
    }
}

pub trait CompletionBackend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, BackendError>;
    /// Stable description recorded in run manifests.
    fn fingerprint(&self) -> String;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub backoff_factor: f64,
    pub max_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 4,
            initial_backoff_ms: 500,
            backoff_factor: 2.0,
            max_backoff_ms: 8_000,
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, retry: u32) -> Duration {
        let ms = self.initial_backoff_ms as f64 * self.backoff_factor.powi(retry as i32);
        Duration::from_millis((ms as u64).min(self.max_backoff_ms))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub credential_env: String,
    pub timeout_ms: u64,
    pub retry: RetryPolicy,
    pub max_in_flight: usize,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            endpoint: "https://api.openai.com/v1".into(),
            model: "gpt-4o-mini".into(),
            credential_env: "OPENAI_API_KEY".into(),
            timeout_ms: 60_000,
            retry: RetryPolicy::default(),
            max_in_flight: 4,
            temperature: None,
            max_tokens: None,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.timeout_ms == 0 {
            return Err(BackendError::Config("timeout_ms must be positive".into()));
        }
        if self.retry.max_attempts == 0 {
            return Err(BackendError::Config("retry.max_attempts must be at least 1".into()));
        }
        if self.max_in_flight == 0 {
            return Err(BackendError::Config("max_in_flight must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GatewayStats {
    pub calls: usize,
    pub attempts: usize,
    pub failures: usize,
    pub peak_in_flight: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub completion: Completion,
    pub attempts: u32,
}

#[derive(Serialize)]
struct AuditLine<'a> {
    timestamp: String,
    backend: &'a str,
    task: &'a str,
    query: &'a str,
    attempt: u32,
    ok: bool,
    latency_ms: u128,
    request_id: Option<&'a str>,
    prompt_tokens: Option<u64>,
    completion_tokens: Option<u64>,
    error: Option<String>,
}

type Sleeper = dyn Fn(Duration) + Send + Sync;

/// Thread-safe front for a backend: bounded concurrency, retries and an
/// optional JSONL audit log.
pub struct Gateway {
    backend: Arc<dyn CompletionBackend>,
    config: BackendConfig,
    slots: Mutex<usize>,
    freed: Condvar,
    in_flight: AtomicUsize,
    peak: AtomicUsize,
    calls: AtomicUsize,
    attempts: AtomicUsize,
    failures: AtomicUsize,
    audit: Option<Mutex<File>>,
    sleep: Box<Sleeper>,
}

struct Permit<'g>(&'g Gateway);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        self.0.in_flight.fetch_sub(1, Ordering::SeqCst);
        let mut free = self.0.slots.lock().unwrap_or_else(|e| e.into_inner());
        *free += 1;
        self.0.freed.notify_one();
    }
}

impl Gateway {
    pub fn new(backend: Arc<dyn CompletionBackend>, config: BackendConfig) -> Self {
        let slots = config.max_in_flight.max(1);
        Gateway {
            backend,
            config,
            slots: Mutex::new(slots),
            freed: Condvar::new(),
            in_flight: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
            calls: AtomicUsize::new(0),
            attempts: AtomicUsize::new(0),
            failures: AtomicUsize::new(0),
            audit: None,
            sleep: Box::new(std::thread::sleep),
        }
    }

    pub fn with_audit_log(mut self, path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        self.audit = Some(Mutex::new(file));
        Ok(self)
    }

    /// Replaces the backoff sleep, e.g. with a no-op in tests.
    pub fn with_sleeper(mut self, sleep: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleep = Box::new(sleep);
        self
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    pub fn fingerprint(&self) -> String {
        self.backend.fingerprint()
    }

    pub fn stats(&self) -> GatewayStats {
        GatewayStats {
            calls: self.calls.load(Ordering::SeqCst),
            attempts: self.attempts.load(Ordering::SeqCst),
            failures: self.failures.load(Ordering::SeqCst),
            peak_in_flight: self.peak.load(Ordering::SeqCst),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.slots.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.freed.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        drop(free);
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(now, Ordering::SeqCst);
        Permit(self)
    }

    pub fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        self.complete_detailed(request).map(|o| o.completion.text)
    }

    pub fn complete_detailed(&self, request: &CompletionRequest) -> Result<Outcome, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let policy = &self.config.retry;
        let mut attempt = 0;
        loop {
            attempt += 1;
            self.attempts.fetch_add(1, Ordering::SeqCst);
            let started = Instant::now();
            let result = {
                let _permit = self.acquire();
                self.backend.complete(request)
            };
            self.audit(request, attempt, started.elapsed(), &result);
            match result {
                Ok(completion) => {
                    return Ok(Outcome {
                        completion,
                        attempts: attempt,
                    })
                }
                Err(e) if e.is_transient() && attempt < policy.max_attempts => {
                    log::warn!("{} attempt {attempt} failed: {e}", request.task.name());
                    (self.sleep)(policy.delay(attempt - 1));
                }
                Err(e) => {
                    self.failures.fetch_add(1, Ordering::SeqCst);
                    return Err(e);
                }
            }
        }
    }

    fn audit(
        &self,
        request: &CompletionRequest,
        attempt: u32,
        latency: Duration,
        result: &Result<Completion, BackendError>,
    ) {
        let Some(file) = &self.audit else { return };
        let backend = self.backend.fingerprint();
        let ok = result.as_ref().ok();
        let line = AuditLine {
            timestamp: chrono::Utc::now().to_rfc3339(),
            backend: &backend,
            task: request.task.name(),
            query: &request.query,
            attempt,
            ok: ok.is_some(),
            latency_ms: latency.as_millis(),
            request_id: ok.and_then(|c| c.request_id.as_deref()),
            prompt_tokens: ok.and_then(|c| c.prompt_tokens),
            completion_tokens: ok.and_then(|c| c.completion_tokens),
            error: result.as_ref().err().map(ToString::to_string),
        };
        let mut f = file.lock().unwrap_or_else(|e| e.into_inner());
        if let Ok(json) = serde_json::to_string(&line) {
            let _ = writeln!(f, "{json}");
        }
    }
}
