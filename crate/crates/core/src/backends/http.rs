use std::time::Duration;

use log::{debug, warn};
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

use crate::backends::{Backend, BackendConfig, BackendKind, QueryRequest, RateLimiter, Reply, Usage};
use crate::error::{Error, Result};

const MAX_BACKOFF: Duration = Duration::from_secs(60);

/// Environment variable holding the bearer token for `backend_id`.
pub fn api_key_var(backend_id: &str) -> String {
    let suffix: String = backend_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' })
        .collect();
    format!("HAYSTACK_API_KEY_{suffix}")
}

/// OpenAI-compatible chat-completions or legacy completions client.
pub struct HttpBackend {
    config: BackendConfig,
    endpoint: String,
    client: Client,
    api_key: Option<String>,
    limiter: Option<RateLimiter>,
}

enum Attempt {
    Done(Reply),
    Retry { reason: String, after: Option<Duration> },
}

impl HttpBackend {
    pub fn new(config: &BackendConfig) -> Result<Self> {
        let endpoint = config
            .endpoint_url
            .clone()
            .ok_or_else(|| Error::Config(format!("backend `{}` has no endpoint_url", config.id)))?;
        let client = Client::builder()
            .timeout(Duration::from_secs(config.retry.timeout_secs))
            .build()
            .map_err(|e| Error::Transport(format!("building HTTP client: {e}")))?;
        let api_key = std::env::var(api_key_var(&config.id)).ok();
        if api_key.is_none() {
            debug!("no {} set; sending unauthenticated requests", api_key_var(&config.id));
        }
        Ok(Self {
            config: config.clone(),
            endpoint,
            client,
            api_key,
            limiter: config.rate_limit.map(RateLimiter::per_minute),
        })
    }

    /// JSON body for `text`; greedy decoding parameters are sent verbatim.
    pub fn request_body(&self, text: &str) -> Value {
        let decoding = &self.config.decoding;
        let mut body = match self.config.kind {
            BackendKind::CompletionHttp => json!({
                "model": self.config.model,
                "prompt": text,
            }),
            _ => json!({
                "model": self.config.model,
                "messages": [{ "role": "user", "content": text }],
            }),
        };
        body["temperature"] = json!(decoding.temperature);
        body["max_tokens"] = json!(decoding.max_output_tokens);
        if let Some(effort) = &decoding.reasoning_effort {
            body["reasoning_effort"] = json!(effort);
        }
        body
    }

    fn parse_response(&self, body: &Value) -> Option<(String, Option<Usage>)> {
        let choice = body.get("choices")?.get(0)?;
        let text = match self.config.kind {
            BackendKind::CompletionHttp => choice.get("text")?.as_str()?,
            _ => choice.get("message")?.get("content")?.as_str()?,
        };
        let usage = body.get("usage").map(|u| Usage {
            prompt_tokens: u.get("prompt_tokens").and_then(Value::as_u64),
            completion_tokens: u.get("completion_tokens").and_then(Value::as_u64),
        });
        Some((text.to_string(), usage))
    }

    fn attempt(&self, body: &Value, attempts: u32) -> Result<Attempt> {
        let mut request = self.client.post(&self.endpoint).json(body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = match request.send() {
            Ok(response) => response,
            Err(e) => {
                return Ok(Attempt::Retry {
                    reason: format!("request failed: {e}"),
                    after: None,
                })
            }
        };
        let status = response.status();
        if status == StatusCode::UNAUTHORIZED || status == StatusCode::FORBIDDEN {
            return Err(Error::Auth {
                backend: self.config.id.clone(),
                message: format!(
                    "HTTP {status} from {}; check {}",
                    self.endpoint,
                    api_key_var(&self.config.id)
                ),
            });
        }
        if status == StatusCode::TOO_MANY_REQUESTS
            || status == StatusCode::REQUEST_TIMEOUT
            || status.is_server_error()
        {
            let after = response
                .headers()
                .get(reqwest::header::RETRY_AFTER)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<u64>().ok())
                .map(Duration::from_secs);
            return Ok(Attempt::Retry {
                reason: format!("HTTP {status}"),
                after,
            });
        }
        if !status.is_success() {
            let detail = response.text().unwrap_or_default();
            return Ok(Attempt::Done(Reply {
                attempts,
                error: Some(format!("HTTP {status}: {}", truncate(&detail, 200))),
                ..Reply::default()
            }));
        }
        let parsed = response
            .json::<Value>()
            .ok()
            .and_then(|v| self.parse_response(&v));
        Ok(match parsed {
            Some((text, usage)) => Attempt::Done(Reply {
                text: Some(text),
                usage,
                attempts,
                error: None,
            }),
            None => Attempt::Retry {
                reason: "malformed response body".into(),
                after: None,
            },
        })
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let base = self.config.retry.base_backoff_ms as f64 * 2f64.powi(attempt as i32 - 1);
        let jitter = 0.5 + rand::random::<f64>();
        Duration::from_secs_f64(base * jitter / 1000.0).min(MAX_BACKOFF)
    }
}

fn truncate(text: &str, max_chars: usize) -> &str {
    match text.char_indices().nth(max_chars) {
        Some((i, _)) => &text[..i],
        None => text,
    }
}

impl Backend for HttpBackend {
    fn id(&self) -> &str {
        &self.config.id
    }

    fn send(&self, request: &QueryRequest<'_>) -> Result<Reply> {
        let body = self.request_body(request.text);
        let max = self.config.retry.max_attempts;
        let mut last = String::new();
        for attempt in 1..=max {
            if let Some(limiter) = &self.limiter {
                limiter.acquire();
            }
            match self.attempt(&body, attempt)? {
                Attempt::Done(reply) => return Ok(reply),
                Attempt::Retry { reason, after } => {
                    warn!("{}: attempt {attempt}/{max} failed: {reason}", self.config.id);
                    last = reason;
                    if attempt < max {
                        let wait = after.unwrap_or_default().max(self.backoff(attempt));
                        std::thread::sleep(wait.min(MAX_BACKOFF));
                    }
                }
            }
        }
        Ok(Reply {
            attempts: max,
            error: Some(format!("retries exhausted: {last}")),
            ..Reply::default()
        })
    }
}

#[cfg(test)]
mod tests {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::{Arc, Mutex};

    use super::*;
    use crate::backends::{Decoding, Origin, RetryPolicy};
    use crate::corpus::HaystackConfig;
    use crate::lang::LanguageCode;

    /// Serves the canned `(status, body)` responses in order, one per
    /// connection, and records request bodies.
    fn serve(responses: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<String>>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&seen);
        std::thread::spawn(move || {
            for (status, body) in responses {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut length = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        length = v.trim().parse().unwrap();
                    }
                }
                let mut request = vec![0u8; length];
                reader.read_exact(&mut request).unwrap();
                log.lock().unwrap().push(String::from_utf8(request).unwrap());
                let mut stream = stream;
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\n\
                     Content-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
        });
        (format!("http://{addr}/v1/chat/completions"), seen)
    }

    fn backend(kind: BackendKind, endpoint: &str) -> HttpBackend {
        HttpBackend::new(&BackendConfig {
            id: "local-test".into(),
            kind,
            endpoint_url: Some(endpoint.into()),
            model: "m".into(),
            decoding: Decoding {
                reasoning_effort: Some("minimal".into()),
                ..Decoding::default()
            },
            rate_limit: None,
            retry: RetryPolicy {
                max_attempts: 3,
                base_backoff_ms: 1,
                timeout_secs: 5,
            },
            origin: Origin::West,
            mock: None,
        })
        .unwrap()
    }

    fn request_parts() -> (HaystackConfig, LanguageCode) {
        let eng = LanguageCode::new("eng").unwrap();
        let config = HaystackConfig {
            category: 1,
            l1: eng.clone(),
            l2: eng.clone(),
            x1: "Delcroft".into(),
            x2: "Delcroft".into(),
            y: "Cinderfax".into(),
            size_budget: 1000,
            seed: 1,
        };
        (config, eng)
    }

    const OK_CHAT: &str = r#"{"choices":[{"message":{"role":"assistant","content":"John Delcroft"}}],"usage":{"prompt_tokens":12,"completion_tokens":3}}"#;

    #[test]
    fn retries_after_429() {
        let (url, seen) = serve(vec![(429, "{}".into()), (200, OK_CHAT.into())]);
        let backend = backend(BackendKind::ChatHttp, &url);
        let (config, eng) = request_parts();
        let reply = backend
            .send(&QueryRequest {
                text: "haystack\n\nWho?",
                config: &config,
                first_name: "John",
                prompt_lang: &eng,
            })
            .unwrap();
        assert_eq!(reply.text.as_deref(), Some("John Delcroft"));
        assert_eq!(reply.attempts, 2);
        assert_eq!(reply.usage.unwrap().completion_tokens, Some(3));
        let bodies = seen.lock().unwrap();
        assert_eq!(bodies.len(), 2);
        let body: Value = serde_json::from_str(&bodies[1]).unwrap();
        assert_eq!(body["temperature"], json!(0.0));
        assert_eq!(body["max_tokens"], json!(256));
        assert_eq!(body["reasoning_effort"], json!("minimal"));
        assert_eq!(body["messages"][0]["role"], json!("user"));
        assert_eq!(body["messages"][0]["content"], json!("haystack\n\nWho?"));
    }

    #[test]
    fn exhausted_retries_are_recorded_not_fatal() {
        let (url, _) = serve(vec![(503, "{}".into()), (500, "{}".into()), (502, "{}".into())]);
        let backend = backend(BackendKind::ChatHttp, &url);
        let (config, eng) = request_parts();
        let reply = backend
            .send(&QueryRequest { text: "t", config: &config, first_name: "John", prompt_lang: &eng })
            .unwrap();
        assert_eq!(reply.attempts, 3);
        assert!(reply.text.is_none());
        assert!(reply.error.unwrap().contains("502"));
    }

    #[test]
    fn auth_failure_aborts() {
        let (url, _) = serve(vec![(401, "{}".into())]);
        let backend = backend(BackendKind::ChatHttp, &url);
        let (config, eng) = request_parts();
        let err = backend
            .send(&QueryRequest { text: "t", config: &config, first_name: "John", prompt_lang: &eng })
            .unwrap_err();
        assert!(matches!(err, Error::Auth { .. }));
        assert!(err.to_string().contains("HAYSTACK_API_KEY_LOCAL_TEST"));
    }

    #[test]
    fn completion_wire_shape() {
        let body = r#"{"choices":[{"text":" George Pikehart"}]}"#;
        let (url, seen) = serve(vec![(200, body.into())]);
        let backend = backend(BackendKind::CompletionHttp, &url);
        let (config, eng) = request_parts();
        let reply = backend
            .send(&QueryRequest { text: "p", config: &config, first_name: "John", prompt_lang: &eng })
            .unwrap();
        assert_eq!(reply.text.as_deref(), Some(" George Pikehart"));
        let sent: Value = serde_json::from_str(&seen.lock().unwrap()[0]).unwrap();
        assert_eq!(sent["prompt"], json!("p"));
        assert!(sent.get("messages").is_none());
    }

    #[test]
    fn key_variable_name() {
        assert_eq!(api_key_var("gpt-4o.mini"), "HAYSTACK_API_KEY_GPT_4O_MINI");
    }
}
