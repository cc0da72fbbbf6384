//! HTTP completion client with retry, a disk cache keyed by request
//! content, a bounded in-flight limit, and an offline oracle backend that
//! answers from gold traces.

#[cfg(test)]
mod tests;

use crate::tasks::{generate, TaskFamily};
use crate::traces::{gold_trace, render};
use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("transport error after {attempts} attempts: {message}")]
    Transport {
        message: String,
        last_status: Option<u16>,
        attempts: u32,
    },
    #[error("protocol error: {message}; payload: {payload}")]
    Protocol { message: String, payload: String },
    #[error("no recording for key {0} (replay mode)")]
    MissingRecording(String),
    #[error("cache io error: {0}")]
    Cache(#[from] std::io::Error),
    #[error("oracle backend error: {0}")]
    Backend(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the API key; the value is
    /// read at call time and never stored.
    pub auth_env: Option<String>,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub max_in_flight: usize,
    /// Chat schema by default; set for legacy completion-style endpoints.
    #[serde(default)]
    pub completion_style: bool,
    /// Backoff base in milliseconds; only tests should shrink this.
    #[serde(default = "default_backoff_ms")]
    pub backoff_base_ms: u64,
}

fn default_backoff_ms() -> u64 {
    1000
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "http://localhost:8000/v1/chat/completions".into(),
            model_name: "local-model".into(),
            auth_env: None,
            temperature: 0.0,
            max_output_tokens: 2048,
            timeout_secs: 120,
            max_retries: 4,
            max_in_flight: 4,
            completion_style: false,
            backoff_base_ms: default_backoff_ms(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    /// Stored verbatim, never trimmed.
    pub text: String,
    pub finish_reason: Option<String>,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
    pub latency_ms: u64,
    pub model_id: Option<String>,
    /// Full provider payload, kept for debugging.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<serde_json::Value>,
}

/// Stable content hash of (model, prompt, sampling params).
pub fn cache_key(model: &str, request: &CompletionRequest) -> String {
    let mut hasher = Sha256::new();
    // fixed field order and separators keep keys stable across platforms
    hasher.update(model.as_bytes());
    hasher.update([0]);
    hasher.update(format!("{:?}", request.temperature).as_bytes());
    hasher.update([0]);
    hasher.update(request.max_tokens.to_le_bytes());
    hasher.update([0]);
    hasher.update(request.prompt.as_bytes());
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheMode {
    /// Miss → network call, then persist.
    Record,
    /// Miss → error; never touches the network.
    Replay,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    key: String,
    created_at: u64,
    value: CompletionResponse,
}

/// One file per key; concurrent reads, writes serialized through a mutex
/// plus an atomic rename.
pub struct DiskCache {
    dir: PathBuf,
    write_lock: Mutex<()>,
}

impl DiskCache {
    pub fn open(dir: impl AsRef<Path>) -> Result<DiskCache, ClientError> {
        std::fs::create_dir_all(dir.as_ref())?;
        Ok(DiskCache {
            dir: dir.as_ref().to_path_buf(),
            write_lock: Mutex::new(()),
        })
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<CompletionResponse> {
        let bytes = std::fs::read(self.path_for(key)).ok()?;
        serde_json::from_slice::<CacheEntry>(&bytes)
            .ok()
            .map(|e| e.value)
    }

    pub fn put(&self, key: &str, value: &CompletionResponse) -> Result<(), ClientError> {
        let entry = CacheEntry {
            key: key.to_string(),
            created_at: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            value: value.clone(),
        };
        let _guard = self.write_lock.lock().unwrap();
        let tmp = self.dir.join(format!(".{key}.tmp"));
        std::fs::write(&tmp, serde_json::to_vec_pretty(&entry).unwrap())?;
        std::fs::rename(&tmp, self.path_for(key))?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        std::fs::read_dir(&self.dir)
            .map(|d| {
                d.filter_map(Result::ok)
                    .filter(|e| e.path().extension().is_some_and(|x| x == "json"))
                    .count()
            })
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

struct Gate {
    state: Mutex<usize>,
    cond: Condvar,
    limit: usize,
}

impl Gate {
    fn acquire(&self) -> GatePermit<'_> {
        let mut inflight = self.state.lock().unwrap();
        while *inflight >= self.limit {
            inflight = self.cond.wait(inflight).unwrap();
        }
        *inflight += 1;
        GatePermit { gate: self }
    }
}

struct GatePermit<'a> {
    gate: &'a Gate,
}

impl Drop for GatePermit<'_> {
    fn drop(&mut self) {
        let mut inflight = self.gate.state.lock().unwrap();
        *inflight -= 1;
        self.gate.cond.notify_one();
    }
}

/// Shareable across threads; at most `max_in_flight` HTTP requests are
/// outstanding at any instant.
pub struct Client {
    pub endpoint: EndpointConfig,
    http: reqwest::blocking::Client,
    gate: Arc<Gate>,
}

impl Client {
    pub fn new(endpoint: EndpointConfig) -> Result<Client, ClientError> {
        if endpoint.max_in_flight == 0 {
            return Err(ClientError::Config("max_in_flight must be >= 1".into()));
        }
        if endpoint.temperature < 0.0 {
            return Err(ClientError::Config("temperature must be >= 0".into()));
        }
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(endpoint.timeout_secs))
            .build()
            .map_err(|e| ClientError::Config(e.to_string()))?;
        let gate = Arc::new(Gate {
            state: Mutex::new(0),
            cond: Condvar::new(),
            limit: endpoint.max_in_flight,
        });
        Ok(Client {
            endpoint,
            http,
            gate,
        })
    }

    pub fn default_request(&self, prompt: String) -> CompletionRequest {
        CompletionRequest {
            prompt,
            temperature: self.endpoint.temperature,
            max_tokens: self.endpoint.max_output_tokens,
        }
    }

    fn auth_header(&self) -> Result<Option<String>, ClientError> {
        match &self.endpoint.auth_env {
            None => Ok(None),
            Some(name) if name.is_empty() => Ok(None),
            Some(name) => std::env::var(name)
                .map(|v| Some(format!("Bearer {v}")))
                .map_err(|_| {
                    ClientError::Config(format!("auth environment variable {name} not set"))
                }),
        }
    }

    /// One completion with retries. Backoff is exponential (base, factor 2)
    /// with up to 25% jitter; 429, 5xx, and transport failures retry,
    /// anything else fails fast.
    pub fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
        let auth = self.auth_header()?;
        let body = if self.endpoint.completion_style {
            serde_json::json!({
                "model": self.endpoint.model_name,
                "prompt": request.prompt,
                "temperature": request.temperature,
                "max_tokens": request.max_tokens,
            })
        } else {
            serde_json::json!({
                "model": self.endpoint.model_name,
                "messages": [{"role": "user", "content": request.prompt}],
                "temperature": request.temperature,
                "max_tokens": request.max_tokens,
            })
        };

        let _permit = self.gate.acquire();
        let mut last_error = String::new();
        let mut last_status = None;
        let start = Instant::now();
        for attempt in 0..=self.endpoint.max_retries {
            if attempt > 0 {
                let base = self.endpoint.backoff_base_ms << (attempt - 1);
                let jitter = jitter_ms(base / 4);
                std::thread::sleep(Duration::from_millis(base + jitter));
            }
            let mut builder = self.http.post(&self.endpoint.base_url).json(&body);
            if let Some(auth) = &auth {
                builder = builder.header("Authorization", auth);
            }
            match builder.send() {
                Err(e) => {
                    last_error = e.to_string();
                    last_status = None;
                }
                Ok(resp) => {
                    let status = resp.status();
                    if status.as_u16() == 429 || status.is_server_error() {
                        last_error = format!("status {status}");
                        last_status = Some(status.as_u16());
                    } else if !status.is_success() {
                        return Err(ClientError::Transport {
                            message: format!("status {status}"),
                            last_status: Some(status.as_u16()),
                            attempts: attempt + 1,
                        });
                    } else {
                        let text = resp.text().map_err(|e| ClientError::Protocol {
                            message: e.to_string(),
                            payload: String::new(),
                        })?;
                        let latency_ms = start.elapsed().as_millis() as u64;
                        return parse_payload(&text, self.endpoint.completion_style, latency_ms);
                    }
                }
            }
        }
        Err(ClientError::Transport {
            message: last_error,
            last_status,
            attempts: self.endpoint.max_retries + 1,
        })
    }

    /// Cache-through completion; the flag reports whether it was a hit.
    pub fn cached_complete(
        &self,
        cache: &DiskCache,
        mode: CacheMode,
        request: &CompletionRequest,
    ) -> Result<(CompletionResponse, bool), ClientError> {
        let key = cache_key(&self.endpoint.model_name, request);
        if let Some(found) = cache.get(&key) {
            return Ok((found, true));
        }
        if mode == CacheMode::Replay {
            return Err(ClientError::MissingRecording(key));
        }
        let fresh = self.complete(request)?;
        cache.put(&key, &fresh)?;
        Ok((fresh, false))
    }
}

fn jitter_ms(max: u64) -> u64 {
    if max == 0 {
        return 0;
    }
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.subsec_nanos() as u64)
        .unwrap_or(0);
    crate::rng::mix(nanos) % max
}

fn parse_payload(
    text: &str,
    completion_style: bool,
    latency_ms: u64,
) -> Result<CompletionResponse, ClientError> {
    let payload: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ClientError::Protocol {
            message: format!("invalid json: {e}"),
            payload: text.to_string(),
        })?;
    let choice = payload
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| ClientError::Protocol {
            message: "no choices in response".into(),
            payload: text.to_string(),
        })?;
    let content = if completion_style {
        choice.get("text").and_then(|t| t.as_str())
    } else {
        choice
            .get("message")
            .and_then(|m| m.get("content"))
            .and_then(|t| t.as_str())
    };
    let content = content.ok_or_else(|| ClientError::Protocol {
        message: "choice carries no text".into(),
        payload: text.to_string(),
    })?;
    Ok(CompletionResponse {
        text: content.to_string(),
        finish_reason: choice
            .get("finish_reason")
            .and_then(|f| f.as_str())
            .map(String::from),
        prompt_tokens: payload
            .pointer("/usage/prompt_tokens")
            .and_then(|v| v.as_u64()),
        completion_tokens: payload
            .pointer("/usage/completion_tokens")
            .and_then(|v| v.as_u64()),
        latency_ms,
        model_id: payload
            .get("model")
            .and_then(|m| m.as_str())
            .map(String::from),
        raw: Some(payload),
    })
}

/// Trailer the eval runner appends so the offline oracle can identify the
/// instance inside an otherwise opaque prompt.
pub fn oracle_trailer(family: TaskFamily, level: u32, seed: u64, id: &str) -> String {
    format!("\n[oracle {} {} {} {}]", family.name(), level, seed, id)
}

/// Offline test double: regenerates the instance named in the trailer,
/// checks its id, and answers with the rendered gold trace.
pub fn oracle_backend(prompt: &str) -> Result<CompletionResponse, ClientError> {
    static RE: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
    let re = RE.get_or_init(|| {
        Regex::new(r"\[oracle (\S+) (\d+) (\d+) ([0-9a-f]+)\]").unwrap()
    });
    let caps = re
        .captures_iter(prompt)
        .last()
        .ok_or_else(|| ClientError::Backend("prompt carries no oracle trailer".into()))?;
    let family = TaskFamily::parse_name(&caps[1])
        .ok_or_else(|| ClientError::Backend(format!("unknown family {}", &caps[1])))?;
    let level: u32 = caps[2]
        .parse()
        .map_err(|_| ClientError::Backend("bad level in trailer".into()))?;
    let seed: u64 = caps[3]
        .parse()
        .map_err(|_| ClientError::Backend("bad seed in trailer".into()))?;
    let instance =
        generate(family, level, seed).map_err(|e| ClientError::Backend(e.to_string()))?;
    if instance.id != caps[4] {
        return Err(ClientError::Backend(format!(
            "trailer id {} does not match regenerated instance {}",
            &caps[4], instance.id
        )));
    }
    let trace = gold_trace(&instance).map_err(|e| ClientError::Backend(e.to_string()))?;
    Ok(CompletionResponse {
        text: render(&trace),
        finish_reason: Some("stop".into()),
        prompt_tokens: None,
        completion_tokens: None,
        latency_ms: 0,
        model_id: Some("oracle".into()),
        raw: None,
    })
}
