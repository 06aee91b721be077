//! Blocking client for chat-completions style HTTP endpoints.

use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{ChatBackend, ChatRequest, LlmError};

fn default_timeout() -> u64 {
    60
}
fn default_retries() -> u32 {
    3
}
fn default_parallelism() -> usize {
    4
}
fn default_backoff() -> u64 {
    500
}
fn default_key_env() -> String {
    "OPENAI_API_KEY".into()
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    /// Name of the environment variable holding the bearer token.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    /// Local servers often need no key.
    #[serde(default = "default_true")]
    pub require_api_key: bool,
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        EndpointConfig {
            base_url: base_url.into(),
            model: model.into(),
            timeout_secs: default_timeout(),
            retries: default_retries(),
            parallelism: default_parallelism(),
            backoff_ms: default_backoff(),
            api_key_env: default_key_env(),
            require_api_key: true,
        }
    }

    /// Reads a TOML endpoint file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, crate::Error> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
        toml::from_str(&raw)
            .map_err(|e| crate::Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    pub fn completions_url(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

pub struct HttpBackend {
    config: EndpointConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend")
            .field("url", &self.config.completions_url())
            .field("model", &self.config.model)
            .field("has_api_key", &self.api_key.is_some())
            .finish()
    }
}

enum Attempt {
    Retry(String),
    Fatal(LlmError),
}

impl HttpBackend {
    pub fn new(config: EndpointConfig) -> Result<Self, LlmError> {
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        if api_key.is_none() && config.require_api_key {
            return Err(LlmError::MissingCredential(config.api_key_env.clone()));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpBackend {
            config,
            api_key,
            agent,
        })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    fn body(&self, req: &ChatRequest) -> Value {
        let mut body = json!({
            "model": req.model.as_deref().unwrap_or(&self.config.model),
            "messages": req.messages,
            "temperature": req.temperature,
        });
        if let Some(n) = req.max_output_tokens {
            body["max_tokens"] = json!(n);
        }
        if let Some(seed) = req.seed {
            body["seed"] = json!(seed);
        }
        body
    }

    fn attempt(&self, body: &Value) -> Result<String, Attempt> {
        let mut call = self.agent.post(self.config.completions_url());
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = call
            .send_json(body)
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        if status == 429 || status >= 500 {
            return Err(Attempt::Retry(format!("HTTP {status}: {text}")));
        }
        if status >= 400 {
            return Err(Attempt::Fatal(LlmError::Http { status, body: text }));
        }
        extract_content(&text).map_err(Attempt::Fatal)
    }
}

fn extract_content(text: &str) -> Result<String, LlmError> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| LlmError::BadResponse(format!("{e}: {text}")))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| LlmError::BadResponse(format!("no choices[0].message.content in {text}")))
}

impl ChatBackend for HttpBackend {
    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError> {
        let body = self.body(req);
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let attempts = self.config.retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(reason)) => {
                    log::warn!("request {} attempt {} failed: {reason}", req.purpose, attempt + 1);
                    last = reason;
                    if attempt + 1 < attempts {
                        std::thread::sleep(delay);
                        delay *= 2;
                    }
                }
            }
        }
        Err(LlmError::RetriesExhausted { attempts, last })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::Message;

    #[test]
    fn url_joining() {
        let mut c = EndpointConfig::new("http://localhost:8000/v1/", "m");
        assert_eq!(c.completions_url(), "http://localhost:8000/v1/chat/completions");
        c.base_url = "https://x/v1/chat/completions".into();
        assert_eq!(c.completions_url(), "https://x/v1/chat/completions");
    }

    #[test]
    fn missing_credential() {
        let mut c = EndpointConfig::new("http://localhost:1", "m");
        c.api_key_env = "DATABIAS_TEST_SURELY_UNSET_KEY".into();
        assert!(matches!(
            HttpBackend::new(c.clone()),
            Err(LlmError::MissingCredential(v)) if v == "DATABIAS_TEST_SURELY_UNSET_KEY"
        ));
        c.require_api_key = false;
        assert!(HttpBackend::new(c).is_ok());
    }

    #[test]
    fn wire_body_shape() {
        let mut c = EndpointConfig::new("http://localhost:1", "qwen");
        c.require_api_key = false;
        let b = HttpBackend::new(c).unwrap();
        let req = ChatRequest::new("p", vec![Message::system("s"), Message::user("u")])
            .max_output_tokens(20)
            .seed(7);
        let body = b.body(&req);
        assert_eq!(body["model"], "qwen");
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["messages"][1]["content"], "u");
        assert_eq!(body["temperature"], 0.0);
        assert_eq!(body["max_tokens"], 20);
        assert_eq!(body["seed"], 7);
        assert!(body.get("purpose").is_none());
    }

    #[test]
    fn content_extraction() {
        let ok = r#"{"choices":[{"message":{"role":"assistant","content":"VALID"}}]}"#;
        assert_eq!(extract_content(ok).unwrap(), "VALID");
        assert!(extract_content(r#"{"choices":[]}"#).is_err());
    }

    #[test]
    fn unreachable_endpoint_exhausts_retries() {
        let mut c = EndpointConfig::new("http://127.0.0.1:9", "m");
        c.require_api_key = false;
        c.retries = 1;
        c.backoff_ms = 1;
        c.timeout_secs = 2;
        let b = HttpBackend::new(c).unwrap();
        let req = ChatRequest::new("p", vec![Message::user("u")]);
        assert!(matches!(
            b.complete(&req),
            Err(LlmError::RetriesExhausted { attempts: 2, .. })
        ));
    }
}
