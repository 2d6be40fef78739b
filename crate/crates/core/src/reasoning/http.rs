use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Duration;

use log::{info, warn};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::request::ReasonerRequest;
use super::response::ReasonerResponse;
use super::{Reasoner, ReasonerError};
use crate::key_subgraph::FocusRequest;
use crate::scene_graph::ObjectId;

pub const DEFAULT_API_KEY_ENV: &str = "MSGNAV_API_KEY";

/// Instructions sent as the system message of every chat request.
pub const SYSTEM_PROMPT: &str = "You guide a robot searching a building for a goal object. \
You receive a JSON document describing the goal, a scene graph, your earlier decisions and the \
unexplored frontiers. Frame images are referenced by id in an `Images` list, each with the object \
pairs it shows together.\n\
For a `focus` document, answer with a fenced ```json block holding {\"related_ids\": [ids]} naming \
at most k objects most relevant to the goal.\n\
For a `decide` document, answer with a fenced ```json block holding exactly one of \"target_id\" or \
\"frontier_id\", plus \"proposed_vocab\" (object categories the detector should add) and a short \
\"rationale\".";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpConfig {
    /// Chat-completions URL.
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// JSONL file receiving every attempt.
    #[serde(default)]
    pub transcript: Option<PathBuf>,
}

fn default_key_env() -> String {
    DEFAULT_API_KEY_ENV.to_string()
}

fn default_retries() -> u32 {
    3
}

fn default_backoff() -> u64 {
    500
}

fn default_timeout() -> u64 {
    60
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

/// Sends one POST. `Err` means no HTTP status was received.
pub trait Transport {
    fn post(&mut self, url: &str, headers: &[(String, String)], body: &str) -> Result<HttpReply, String>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        Self { agent: ureq::AgentBuilder::new().timeout(timeout).build() }
    }
}

impl Transport for UreqTransport {
    fn post(&mut self, url: &str, headers: &[(String, String)], body: &str) -> Result<HttpReply, String> {
        let mut req = self.agent.post(url);
        for (k, v) in headers {
            req = req.set(k, v);
        }
        match req.send_string(body) {
            Ok(resp) => {
                let status = resp.status();
                let body = resp.into_string().map_err(|e| e.to_string())?;
                Ok(HttpReply { status, body })
            }
            Err(ureq::Error::Status(status, resp)) => Ok(HttpReply { status, body: resp.into_string().unwrap_or_default() }),
            Err(e) => Err(e.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AttemptLog {
    pub kind: &'static str,
    pub step: u32,
    pub attempt: u32,
    pub status: Option<u16>,
    pub error: Option<String>,
}

/// Reasoner backed by a chat-completions style HTTP endpoint.
pub struct HttpReasoner<Tr = UreqTransport> {
    config: HttpConfig,
    transport: Tr,
    api_key: Option<String>,
    sleep: Box<dyn FnMut(Duration) + Send>,
    attempts: Vec<AttemptLog>,
    transcript: Option<BufWriter<File>>,
}

impl HttpReasoner<UreqTransport> {
    pub fn from_config(config: HttpConfig) -> std::io::Result<Self> {
        let transport = UreqTransport::new(Duration::from_secs(config.timeout_secs));
        Self::with_transport(config, transport)
    }
}

impl<Tr: Transport> HttpReasoner<Tr> {
    pub fn with_transport(config: HttpConfig, transport: Tr) -> std::io::Result<Self> {
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        if api_key.is_none() {
            warn!("{} is not set; sending requests without credentials", config.api_key_env);
        }
        let transcript = match &config.transcript {
            Some(path) => Some(BufWriter::new(OpenOptions::new().create(true).append(true).open(path)?)),
            None => None,
        };
        Ok(Self { config, transport, api_key, sleep: Box::new(std::thread::sleep), attempts: Vec::new(), transcript })
    }

    /// Replaces the backoff sleep, e.g. with a no-op in tests.
    pub fn with_sleep(mut self, sleep: impl FnMut(Duration) + Send + 'static) -> Self {
        self.sleep = Box::new(sleep);
        self
    }

    pub fn with_api_key(mut self, key: impl Into<String>) -> Self {
        self.api_key = Some(key.into());
        self
    }

    pub fn attempts(&self) -> &[AttemptLog] {
        &self.attempts
    }

    fn log(&mut self, entry: AttemptLog, request: &str, reply: Option<&str>) {
        if let Some(w) = self.transcript.as_mut() {
            let line = json!({ "attempt": entry, "request": request, "reply": reply });
            if let Err(e) = writeln!(w, "{line}").and_then(|_| w.flush()) {
                warn!("transcript write failed: {e}");
            }
        }
        self.attempts.push(entry);
    }

    fn exchange<T: DeserializeOwned>(&mut self, kind: &'static str, step: u32, prompt: String) -> Result<T, ReasonerError> {
        let body = json!({
            "model": self.config.model,
            "temperature": 0,
            "messages": [
                { "role": "system", "content": SYSTEM_PROMPT },
                { "role": "user", "content": prompt },
            ],
        })
        .to_string();
        let mut headers = vec![("Content-Type".to_string(), "application/json".to_string())];
        if let Some(key) = &self.api_key {
            headers.push(("Authorization".to_string(), format!("Bearer {key}")));
        }

        let mut last_err = None;
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                let delay = self.config.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                (self.sleep)(Duration::from_millis(delay));
            }
            let endpoint = self.config.endpoint.clone();
            let outcome = self.transport.post(&endpoint, &headers, &body);
            let mut entry = AttemptLog { kind, step, attempt: attempt + 1, status: None, error: None };
            let err = match outcome {
                Err(message) => ReasonerError::Transport { message, retryable: true },
                Ok(reply) => {
                    entry.status = Some(reply.status);
                    match reply.status {
                        200..=299 => match parse_chat_reply::<T>(&reply.body) {
                            Ok(value) => {
                                self.log(entry, &body, Some(&reply.body));
                                info!("{kind} step {step}: ok after {} attempt(s)", attempt + 1);
                                return Ok(value);
                            }
                            Err(e) => e,
                        },
                        401 | 403 => {
                            let err = ReasonerError::Auth(format!("status {}", reply.status));
                            entry.error = Some(err.to_string());
                            self.log(entry, &body, Some(&reply.body));
                            return Err(err);
                        }
                        408 | 429 | 500..=599 => ReasonerError::Transport {
                            message: format!("status {}", reply.status),
                            retryable: true,
                        },
                        status => {
                            let err =
                                ReasonerError::Protocol { message: format!("status {status}"), raw: reply.body.clone() };
                            entry.error = Some(err.to_string());
                            self.log(entry, &body, Some(&reply.body));
                            return Err(err);
                        }
                    }
                }
            };
            warn!("{kind} step {step} attempt {}: {err}", attempt + 1);
            entry.error = Some(err.to_string());
            let raw = match &err {
                ReasonerError::Protocol { raw, .. } => Some(raw.clone()),
                _ => None,
            };
            self.log(entry, &body, raw.as_deref());
            last_err = Some(err);
        }
        Err(match last_err {
            Some(ReasonerError::Transport { message, .. }) => ReasonerError::Transport { message, retryable: false },
            Some(e) => e,
            None => ReasonerError::Transport { message: "no attempts made".into(), retryable: false },
        })
    }
}

#[derive(Deserialize)]
struct FocusReply {
    related_ids: Vec<ObjectId>,
}

impl<Tr: Transport> Reasoner for HttpReasoner<Tr> {
    fn focus(&mut self, request: &FocusRequest) -> Result<Vec<ObjectId>, ReasonerError> {
        let prompt = format!("focus\n```json\n{}\n```", serde_json::to_string_pretty(request).expect("serializes"));
        let reply: FocusReply = self.exchange("focus", request.step, prompt)?;
        Ok(reply.related_ids)
    }

    fn decide(&mut self, request: &ReasonerRequest) -> Result<ReasonerResponse, ReasonerError> {
        self.exchange("decide", request.step, render_prompt(request))
    }
}

/// User-message text for a decision: the request document followed by one line per image.
pub fn render_prompt(request: &ReasonerRequest) -> String {
    let mut out = format!("decide\n```json\n{}\n```\nImages:\n", serde_json::to_string_pretty(request).expect("serializes"));
    for image in &request.key_subgraph.images {
        let pairs: Vec<String> = image.pairs.iter().map(ToString::to_string).collect();
        out.push_str(&format!("- {} (frame {}): {}\n", image.image, image.frame_id, pairs.join(", ")));
    }
    out
}

/// The body of the first fenced block (preferring one tagged `json`), or the whole text.
pub fn extract_fenced_json(content: &str) -> &str {
    let block = |tag: &str| {
        let start = content.find(tag)? + tag.len();
        let rest = &content[start..];
        let rest = &rest[rest.find('\n').map_or(0, |i| i + 1)..];
        rest.find("```").map(|end| &rest[..end])
    };
    block("```json").or_else(|| block("```")).unwrap_or(content).trim()
}

fn parse_chat_reply<T: DeserializeOwned>(body: &str) -> Result<T, ReasonerError> {
    let protocol = |message: String| ReasonerError::Protocol { message, raw: body.to_string() };
    let value: serde_json::Value = serde_json::from_str(body).map_err(|e| protocol(format!("reply is not JSON: {e}")))?;
    let content = value
        .pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .ok_or_else(|| protocol("reply has no message content".into()))?;
    serde_json::from_str(extract_fenced_json(content)).map_err(|e| protocol(format!("bad structured block: {e}")))
}
