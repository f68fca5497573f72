//! Calling one configured agent for one meme.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use memelabel_core::annotation::{AgentResponse, ResponseStatus};
use memelabel_core::dataset::MemeRecord;
use memelabel_core::prompt::{parse_response, render_prompt, Candidate, PromptError, PromptTemplate};
use rand::Rng;
use thiserror::Error;
use tokio::sync::Semaphore;
use tokio::time::Instant;

use crate::cache::{prompt_hash, sha256_hex, CacheError, CacheKey, ResponseCache};
use crate::config::{AgentConfig, ConfigError};
use crate::limiter::RateLimiter;
use crate::provider::{build_request, extract_text, ImageAttachment};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// The outcome of [`Agent::invoke`].
#[derive(Debug, Clone)]
pub struct Invocation {
    pub response: AgentResponse,
    pub from_cache: bool,
}

enum Attempt {
    Text(String),
    /// Not worth retrying, or retries exhausted.
    Fatal(String),
    Retry {
        error: String,
        after: Option<Duration>,
    },
}

#[derive(Debug)]
pub struct Agent {
    config: AgentConfig,
    template: PromptTemplate,
    credential: Option<String>,
    client: reqwest::Client,
    limiter: RateLimiter,
    slots: Semaphore,
    requests: AtomicU64,
}

impl Agent {
    /// Fails if the agent's credential variable is unset.
    pub fn new(config: AgentConfig, template: PromptTemplate) -> Result<Self, ConfigError> {
        config.validate()?;
        let credential = config.credential()?;
        let client = reqwest::Client::builder()
            .timeout(config.timeout())
            .build()
            .map_err(|e| ConfigError::Agent { agent: config.name.clone(), message: format!("http client: {e}") })?;
        Ok(Agent {
            limiter: RateLimiter::per_minute(config.rate_limit),
            slots: Semaphore::new(config.max_parallel),
            template,
            credential,
            client,
            config,
            requests: AtomicU64::new(0),
        })
    }

    /// Replaces the one-minute rate window (for tests).
    pub fn with_rate_window(mut self, window: Duration) -> Self {
        self.limiter = RateLimiter::new(self.config.rate_limit, window);
        self
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn name(&self) -> &str {
        &self.config.name
    }

    pub fn template(&self) -> &PromptTemplate {
        &self.template
    }

    /// HTTP requests sent so far, retries included.
    pub fn requests_sent(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    /// Renders the prompt, answers from the cache when possible, otherwise
    /// calls the endpoint with retries. Transport and parse failures are
    /// reported in the response status, not as errors.
    pub async fn invoke(
        &self,
        cache: &ResponseCache,
        meme: &MemeRecord,
        image: Option<&ImageAttachment>,
        candidates: Option<&[Candidate]>,
    ) -> Result<Invocation, AgentError> {
        let prompt = render_prompt(&self.template, meme, candidates)?;
        let image_digest = image.map(|i| sha256_hex(&i.bytes)).unwrap_or_default();
        let key = CacheKey {
            agent_name: self.config.name.clone(),
            model_id: self.config.model_id.clone(),
            prompt_hash: prompt_hash(&prompt.text, &image_digest),
            meme_id: meme.id.clone(),
        };
        if let Some(mut response) = cache.get(&key) {
            response.phase = prompt.phase;
            return Ok(Invocation { response, from_cache: true });
        }

        let started = Instant::now();
        let max_attempts = self.config.max_retries + 1;
        let mut attempt = 0;
        let outcome = loop {
            attempt += 1;
            match self.send(&prompt.text, image).await {
                Attempt::Retry { after, .. } if attempt < max_attempts => {
                    tokio::time::sleep(self.backoff(attempt).max(after.unwrap_or_default())).await;
                }
                Attempt::Retry { error, .. } => break Err(error),
                Attempt::Fatal(error) => break Err(error),
                Attempt::Text(text) => break Ok(text),
            }
        };
        let latency_ms = started.elapsed().as_millis() as u64;

        let response = match outcome {
            Ok(text) => {
                let parsed = parse_response(&text, prompt.phase);
                AgentResponse {
                    meme_id: meme.id.clone(),
                    agent_name: self.config.name.clone(),
                    phase: prompt.phase,
                    status: if parsed.is_ok() { ResponseStatus::Ok } else { ResponseStatus::ParseFailed },
                    error: parsed.as_ref().err().map(ToString::to_string),
                    parsed: parsed.ok(),
                    raw_text: text,
                    latency_ms,
                    attempt_count: attempt,
                }
            }
            Err(error) => AgentResponse {
                meme_id: meme.id.clone(),
                agent_name: self.config.name.clone(),
                phase: prompt.phase,
                raw_text: String::new(),
                parsed: None,
                latency_ms,
                attempt_count: attempt,
                status: ResponseStatus::TransportFailed,
                error: Some(error),
            },
        };
        cache.put(key, response.clone())?;
        Ok(Invocation { response, from_cache: false })
    }

    /// `base * 2^(attempt-1)`, jittered by ±20%.
    fn backoff(&self, attempt: u32) -> Duration {
        let base = self.config.backoff_base_ms as f64 * 2f64.powi(attempt.saturating_sub(1).min(20) as i32);
        let jitter = rand::rng().random_range(0.8..=1.2);
        Duration::from_secs_f64(base * jitter / 1000.0)
    }

    async fn send(&self, prompt: &str, image: Option<&ImageAttachment>) -> Attempt {
        let _slot = self.slots.acquire().await.expect("semaphore never closed");
        self.limiter.acquire().await;
        self.requests.fetch_add(1, Ordering::Relaxed);

        let (headers, body) = build_request(&self.config, self.credential.as_deref(), prompt, image);
        let mut request = self.client.post(&self.config.endpoint_url).json(&body);
        for (name, value) in headers {
            request = request.header(name, value);
        }
        let response = match request.send().await {
            Ok(r) => r,
            Err(e) => return Attempt::Retry { error: format!("request failed: {e}"), after: None },
        };
        let status = response.status();
        let retry_after = response
            .headers()
            .get(reqwest::header::RETRY_AFTER)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let text = match response.text().await {
            Ok(t) => t,
            Err(e) => return Attempt::Retry { error: format!("reading response body: {e}"), after: None },
        };
        if status.as_u16() == 429 || status.is_server_error() {
            return Attempt::Retry { error: format!("HTTP {status}: {}", truncate(&text)), after: retry_after };
        }
        if !status.is_success() {
            return Attempt::Fatal(format!("HTTP {status}: {}", truncate(&text)));
        }
        let extracted = serde_json::from_str(&text).ok().and_then(|v| extract_text(self.config.provider, &v));
        // An unexpected envelope is kept verbatim and fails parsing later.
        Attempt::Text(extracted.unwrap_or(text))
    }
}

fn truncate(s: &str) -> &str {
    match s.char_indices().nth(200) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}
