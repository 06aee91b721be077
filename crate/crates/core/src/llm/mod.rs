//! Chat-completion plumbing shared by every LLM-backed stage.
//!
//! Stages build [`ChatRequest`]s and hand them to an [`LlmEndpoint`], which
//! either forwards them to a [`ChatBackend`] (live), answers them from a
//! [`Transcript`] (replay), or does both and persists new answers (record).

mod http;
mod payload;
mod transcript;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use http::{EndpointConfig, HttpBackend};
pub use payload::{parse_json_array, parse_json_payload, PayloadError};
pub use transcript::Transcript;

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("missing credential: environment variable {0} is not set")]
    MissingCredential(String),
    #[error("replay miss for request key {0}")]
    ReplayMiss(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("unexpected response shape: {0}")]
    BadResponse(String),
    #[error("transcript error: {0}")]
    Transcript(String),
    #[error("no backend configured for {0} mode")]
    NoBackend(TranscriptMode),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Message {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Message {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// A single chat-completion request.
///
/// `purpose` never goes on the wire; it tags what the request is for and
/// takes part in the request key, so two otherwise identical prompts sent
/// for different reasons (e.g. run 1 and run 2 of a generation) get
/// distinct transcript entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub purpose: String,
    /// Overrides the endpoint's configured model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub messages: Vec<Message>,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_output_tokens: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ChatRequest {
    pub fn new(purpose: impl Into<String>, messages: Vec<Message>) -> Self {
        assert!(!messages.is_empty(), "chat request needs at least one message");
        ChatRequest {
            purpose: purpose.into(),
            model: None,
            messages,
            temperature: 0.0,
            max_output_tokens: None,
            seed: None,
        }
    }

    pub fn temperature(mut self, t: f64) -> Self {
        assert!(t >= 0.0, "temperature must be non-negative");
        self.temperature = t;
        self
    }

    pub fn max_output_tokens(mut self, n: u32) -> Self {
        self.max_output_tokens = Some(n);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Hex SHA-256 over the purpose tag and the sampled content. Stable
    /// across processes and independent of the model name.
    pub fn key(&self) -> String {
        #[derive(Serialize)]
        struct Keyed<'a> {
            purpose: &'a str,
            messages: &'a [Message],
            temperature: String,
            max_output_tokens: Option<u32>,
            seed: Option<u64>,
        }
        let keyed = Keyed {
            purpose: &self.purpose,
            messages: &self.messages,
            temperature: format!("{:.4}", self.temperature),
            max_output_tokens: self.max_output_tokens,
            seed: self.seed,
        };
        let bytes = serde_json::to_vec(&keyed).expect("request serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Text of the last user message, which is where stages put the
    /// per-item part of a prompt.
    pub fn last_user(&self) -> &str {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
            .unwrap_or("")
    }
}

/// Something that can answer a chat request: an HTTP endpoint, or a stub.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError>;
}

impl<F> ChatBackend for F
where
    F: Fn(&ChatRequest) -> Result<String, LlmError> + Send + Sync,
{
    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError> {
        self(req)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TranscriptMode {
    Record,
    #[default]
    Replay,
    Live,
}

impl fmt::Display for TranscriptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TranscriptMode::Record => "record",
            TranscriptMode::Replay => "replay",
            TranscriptMode::Live => "live",
        })
    }
}

impl FromStr for TranscriptMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "record" => Ok(TranscriptMode::Record),
            "replay" => Ok(TranscriptMode::Replay),
            "live" => Ok(TranscriptMode::Live),
            other => Err(format!("unknown transcript mode {other:?}")),
        }
    }
}

/// A backend plus transcript policy; cheap to clone and share.
#[derive(Clone)]
pub struct LlmEndpoint {
    mode: TranscriptMode,
    backend: Option<Arc<dyn ChatBackend>>,
    transcript: Arc<Transcript>,
    parallelism: usize,
}

impl fmt::Debug for LlmEndpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LlmEndpoint")
            .field("mode", &self.mode)
            .field("has_backend", &self.backend.is_some())
            .field("transcript_entries", &self.transcript.len())
            .field("parallelism", &self.parallelism)
            .finish()
    }
}

impl LlmEndpoint {
    /// Offline endpoint answering only from `transcript`.
    pub fn replay(transcript: Arc<Transcript>) -> Self {
        LlmEndpoint {
            mode: TranscriptMode::Replay,
            backend: None,
            transcript,
            parallelism: 1,
        }
    }

    /// Answers cached keys from `transcript`, forwards the rest to `backend`
    /// and appends the new answers.
    pub fn record(backend: Arc<dyn ChatBackend>, transcript: Arc<Transcript>) -> Self {
        LlmEndpoint {
            mode: TranscriptMode::Record,
            backend: Some(backend),
            transcript,
            parallelism: 1,
        }
    }

    pub fn live(backend: Arc<dyn ChatBackend>) -> Self {
        LlmEndpoint {
            mode: TranscriptMode::Live,
            backend: Some(backend),
            transcript: Arc::new(Transcript::in_memory()),
            parallelism: 1,
        }
    }

    /// Live endpoint around a closure; handy for stubs.
    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(&ChatRequest) -> Result<String, LlmError> + Send + Sync + 'static,
    {
        Self::live(Arc::new(f))
    }

    pub fn with_parallelism(mut self, limit: usize) -> Self {
        self.parallelism = limit.max(1);
        self
    }

    pub fn mode(&self) -> TranscriptMode {
        self.mode
    }

    pub fn parallelism(&self) -> usize {
        self.parallelism
    }

    pub fn transcript(&self) -> &Arc<Transcript> {
        &self.transcript
    }

    pub fn complete(&self, req: &ChatRequest) -> Result<String, LlmError> {
        match self.mode {
            TranscriptMode::Replay => {
                let key = req.key();
                self.transcript.get(&key).ok_or(LlmError::ReplayMiss(key))
            }
            TranscriptMode::Record => {
                let key = req.key();
                if let Some(hit) = self.transcript.get(&key) {
                    return Ok(hit);
                }
                let backend = self.backend.as_ref().ok_or(LlmError::NoBackend(self.mode))?;
                let response = backend.complete(req)?;
                self.transcript.insert(key, response.clone())?;
                Ok(response)
            }
            TranscriptMode::Live => self
                .backend
                .as_ref()
                .ok_or(LlmError::NoBackend(self.mode))?
                .complete(req),
        }
    }

    /// Completes all requests with at most `parallelism` in flight; results
    /// come back in request order.
    pub fn complete_many(&self, reqs: &[ChatRequest]) -> Vec<Result<String, LlmError>> {
        bounded_map(reqs, self.parallelism, |r| self.complete(r))
    }
}

/// Applies `f` to every item using at most `limit` worker threads and
/// returns the results in input order.
pub fn bounded_map<T, R, F>(items: &[T], limit: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = limit.max(1).min(items.len());
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}
