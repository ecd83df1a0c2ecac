//! Chat-completions teacher.
//!
//! Request: `{"model", "messages": [{"role": "user", "content": prompt}], "temperature"}`.
//! The label is read from `choices[0].message.content` by [`parse_label`].

use std::net::{TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::OracleError;
use crate::dataset::ClassCatalog;

pub const DEFAULT_PROMPT_TEMPLATE: &str = "Classify the following text into exactly one of these categories: {classes}. Respond with only the category name.\n\nText: {text}";

pub const DEFAULT_TOKEN_ENV: &str = "AKD_LLM_TOKEN";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LlmOracleConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint_url: String,
    pub model_name: String,
    pub prompt_template: String,
    pub max_retries: u32,
    pub timeout_secs: f64,
    pub temperature: f64,
    pub max_in_flight: usize,
    /// Environment variable holding the bearer token; unset means no auth header.
    pub token_env: String,
}

impl Default for LlmOracleConfig {
    fn default() -> Self {
        Self {
            endpoint_url: "http://127.0.0.1:8080/v1/chat/completions".into(),
            model_name: "teacher".into(),
            prompt_template: DEFAULT_PROMPT_TEMPLATE.into(),
            max_retries: 2,
            timeout_secs: 60.0,
            temperature: 0.0,
            max_in_flight: 4,
            token_env: DEFAULT_TOKEN_ENV.into(),
        }
    }
}

impl LlmOracleConfig {
    pub fn validate(&self) -> Result<(), OracleError> {
        let bad = |m: &str| Err(OracleError::InvalidConfig(m.into()));
        if !self.prompt_template.contains("{text}") || !self.prompt_template.contains("{classes}") {
            return bad("prompt_template must contain {text} and {classes}");
        }
        if url::Url::parse(&self.endpoint_url).is_err() {
            return bad("endpoint_url is not a valid URL");
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return bad("timeout_secs must be positive");
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be at least 1");
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return bad("temperature must be non-negative");
        }
        Ok(())
    }

    /// Opens (and drops) a TCP connection to the endpoint's host.
    pub fn check_connectivity(&self) -> Result<(), OracleError> {
        let url = url::Url::parse(&self.endpoint_url)
            .map_err(|e| OracleError::Connectivity(e.to_string()))?;
        let host = url
            .host_str()
            .ok_or_else(|| OracleError::Connectivity("endpoint has no host".into()))?;
        let port = url
            .port_or_known_default()
            .ok_or_else(|| OracleError::Connectivity("endpoint has no port".into()))?;
        let timeout = Duration::from_secs_f64(self.timeout_secs.min(10.0));
        let addrs = (host, port)
            .to_socket_addrs()
            .map_err(|e| OracleError::Connectivity(format!("{host}:{port}: {e}")))?;
        let mut last = format!("{host}:{port}: no addresses");
        for addr in addrs {
            match TcpStream::connect_timeout(&addr, timeout) {
                Ok(_) => return Ok(()),
                Err(e) => last = format!("{addr}: {e}"),
            }
        }
        Err(OracleError::Connectivity(last))
    }
}

pub fn class_list(catalog: &ClassCatalog) -> String {
    catalog.names().join(", ")
}

/// Substitutes `{classes}` and `{text}` in one pass, so placeholder-like
/// strings inside the item text are left alone.
pub fn render_prompt(template: &str, text: &str, catalog: &ClassCatalog) -> String {
    let classes = class_list(catalog);
    let mut out = String::with_capacity(template.len() + text.len() + classes.len());
    let mut rest = template;
    loop {
        let next = [("{text}", text), ("{classes}", classes.as_str())]
            .into_iter()
            .filter_map(|(ph, val)| rest.find(ph).map(|at| (at, ph, val)))
            .min_by_key(|(at, _, _)| *at);
        match next {
            Some((at, ph, val)) => {
                out.push_str(&rest[..at]);
                out.push_str(val);
                rest = &rest[at + ph.len()..];
            }
            None => {
                out.push_str(rest);
                return out;
            }
        }
    }
}

/// Maps a free-text answer to a class: the longest catalog name occurring in
/// the message (case-insensitive) wins; equal lengths go to the earliest
/// occurrence, then the lowest class index.
pub fn parse_label(message: &str, catalog: &ClassCatalog) -> Option<usize> {
    let haystack = message.to_lowercase();
    catalog
        .names()
        .iter()
        .enumerate()
        .filter_map(|(k, name)| {
            let needle = name.to_lowercase();
            haystack.find(&needle).map(|pos| (needle.len(), pos, k))
        })
        .min_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)))
        .map(|(_, _, k)| k)
}

/// Extracts `choices[0].message.content` from a response body.
pub fn parse_chat_response(body: &str) -> Result<String, OracleError> {
    let v: Value =
        serde_json::from_str(body).map_err(|e| OracleError::BadResponse(e.to_string()))?;
    v.get("choices")
        .and_then(|c| c.get(0))
        .and_then(|c| c.get("message"))
        .and_then(|m| m.get("content"))
        .and_then(Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| OracleError::BadResponse("missing choices[0].message.content".into()))
}

pub struct LlmClient {
    config: LlmOracleConfig,
    http: reqwest::blocking::Client,
    token: Option<String>,
}

impl std::fmt::Debug for LlmClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LlmClient")
            .field("endpoint_url", &self.config.endpoint_url)
            .field("model_name", &self.config.model_name)
            .finish()
    }
}

/// A labeled answer and the raw assistant message it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct LlmLabel {
    pub label: usize,
    pub raw: String,
}

impl LlmClient {
    pub fn new(config: LlmOracleConfig) -> Result<Self, OracleError> {
        config.validate()?;
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| OracleError::InvalidConfig(e.to_string()))?;
        let token = std::env::var(&config.token_env)
            .ok()
            .filter(|t| !t.is_empty());
        Ok(Self {
            config,
            http,
            token,
        })
    }

    pub fn config(&self) -> &LlmOracleConfig {
        &self.config
    }

    fn complete_once(&self, prompt: &str) -> Result<String, String> {
        let body = json!({
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
        });
        let mut req = self.http.post(&self.config.endpoint_url).json(&body);
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| e.to_string())?;
        let status = resp.status();
        let text = resp.text().map_err(|e| e.to_string())?;
        if !status.is_success() {
            return Err(format!(
                "HTTP {status}: {}",
                text.chars().take(200).collect::<String>()
            ));
        }
        parse_chat_response(&text).map_err(|e| e.to_string())
    }

    /// One completion with up to `max_retries` retries on transport, status
    /// or body errors.
    pub fn complete(&self, id: &str, prompt: &str) -> Result<String, OracleError> {
        let mut last = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(100 << attempt.min(6)));
            }
            match self.complete_once(prompt) {
                Ok(content) => return Ok(content),
                Err(e) => last = e,
            }
        }
        Err(OracleError::Network {
            id: id.to_string(),
            message: last,
        })
    }

    /// Labels one text; a reply naming no class gets one reprompt that lists
    /// the classes again.
    pub fn label_text(
        &self,
        id: &str,
        text: &str,
        catalog: &ClassCatalog,
    ) -> Result<LlmLabel, OracleError> {
        let prompt = render_prompt(&self.config.prompt_template, text, catalog);
        let raw = self.complete(id, &prompt)?;
        if let Some(label) = parse_label(&raw, catalog) {
            return Ok(LlmLabel { label, raw });
        }
        let reprompt = format!(
            "{prompt}\n\nRespond with only one of: {}",
            class_list(catalog)
        );
        let raw = self.complete(id, &reprompt)?;
        match parse_label(&raw, catalog) {
            Some(label) => Ok(LlmLabel { label, raw }),
            None => Err(OracleError::ParseFailure {
                id: id.to_string(),
                response: raw,
            }),
        }
    }

    /// Labels `(id, text)` pairs with at most `max_in_flight` concurrent
    /// requests. Results are in input order.
    pub fn label_many(
        &self,
        items: &[(&str, &str)],
        catalog: &ClassCatalog,
    ) -> Vec<Result<LlmLabel, OracleError>> {
        let slots: Vec<Mutex<Option<Result<LlmLabel, OracleError>>>> =
            items.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.config.max_in_flight.min(items.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(&(id, text)) = items.get(i) else {
                        break;
                    };
                    let result = self.label_text(id, text, catalog);
                    *slots[i].lock().expect("slot lock") = Some(result);
                });
            }
        });
        slots
            .into_iter()
            .map(|s| {
                s.into_inner()
                    .expect("slot lock")
                    .expect("every slot filled")
            })
            .collect()
    }
}
