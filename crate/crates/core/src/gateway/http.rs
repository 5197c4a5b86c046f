use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{ChatBackend, GatewayError};
use crate::prompt::Message;

pub const ENDPOINT_VAR: &str = "SCENETALK_ENDPOINT";
pub const MODEL_VAR: &str = "SCENETALK_MODEL";
pub const KEY_VAR_VAR: &str = "SCENETALK_API_KEY_VAR";
pub const TEMPERATURE_VAR: &str = "SCENETALK_TEMPERATURE";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key. The key itself
    /// is never stored.
    pub api_key_var: String,
    pub temperature: f64,
    pub timeout_secs: u64,
    pub max_retries: u32,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            api_key_var: "OPENAI_API_KEY".into(),
            temperature: 0.2,
            timeout_secs: 60,
            max_retries: 3,
        }
    }
}

impl ProviderConfig {
    pub fn from_env() -> Self {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    /// Overrides defaults from `SCENETALK_*` variables. An unparsable or
    /// negative temperature keeps the default.
    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Self {
        let mut c = Self::default();
        if let Some(v) = lookup(ENDPOINT_VAR) {
            c.endpoint = v;
        }
        if let Some(v) = lookup(MODEL_VAR) {
            c.model = v;
        }
        if let Some(v) = lookup(KEY_VAR_VAR) {
            c.api_key_var = v;
        }
        if let Some(t) = lookup(TEMPERATURE_VAR).and_then(|v| v.trim().parse::<f64>().ok())
            && t >= 0.0
        {
            c.temperature = t;
        }
        c
    }
}

pub type Sleeper = Arc<dyn Fn(Duration) + Send + Sync>;
type KeyLookup = Arc<dyn Fn(&str) -> Option<String> + Send + Sync>;

/// Blocking client for chat-completions style endpoints.
pub struct HttpBackend {
    config: ProviderConfig,
    agent: ureq::Agent,
    sleeper: Sleeper,
    key_lookup: KeyLookup,
}

impl fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpBackend").field("config", &self.config).finish_non_exhaustive()
    }
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

impl HttpBackend {
    pub const BACKOFF_BASE: Duration = Duration::from_secs(1);

    pub fn new(config: ProviderConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            config,
            agent,
            sleeper: Arc::new(std::thread::sleep),
            key_lookup: Arc::new(|k| std::env::var(k).ok()),
        }
    }

    pub fn with_sleeper(mut self, sleeper: Sleeper) -> Self {
        self.sleeper = sleeper;
        self
    }

    pub fn with_key_lookup(mut self, lookup: impl Fn(&str) -> Option<String> + Send + Sync + 'static) -> Self {
        self.key_lookup = Arc::new(lookup);
        self
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    /// Delay before retry `attempt` (0-based): base times two to the attempt.
    pub fn backoff(attempt: u32) -> Duration {
        Self::BACKOFF_BASE * 2u32.saturating_pow(attempt)
    }

    fn attempt(&self, key: &str, messages: &[Message]) -> Result<String, GatewayError> {
        let body = json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": messages,
        });
        let mut resp = self
            .agent
            .post(&self.config.endpoint)
            .header("Authorization", &format!("Bearer {key}"))
            .send_json(&body)
            .map_err(|e| self.transport_error(e))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| self.transport_error(e))?;
        match status {
            200..=299 => {}
            401 | 403 => return Err(GatewayError::Auth(format!("status {status}"))),
            408 => return Err(GatewayError::Timeout(self.timeout())),
            429 => return Err(GatewayError::RateLimit),
            500..=599 => return Err(GatewayError::Transport(format!("server error {status}"))),
            _ => {
                return Err(GatewayError::Rejected {
                    status,
                    body: text.chars().take(500).collect(),
                });
            }
        }
        let parsed: CompletionResponse =
            serde_json::from_str(&text).map_err(|e| GatewayError::InvalidResponse(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| GatewayError::InvalidResponse("no message content".into()))
    }

    fn timeout(&self) -> Duration {
        Duration::from_secs(self.config.timeout_secs)
    }

    fn transport_error(&self, e: ureq::Error) -> GatewayError {
        match e {
            ureq::Error::Timeout(_) => GatewayError::Timeout(self.timeout()),
            ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => GatewayError::Timeout(self.timeout()),
            other => GatewayError::Transport(other.to_string()),
        }
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, messages: &[Message]) -> Result<String, GatewayError> {
        if messages.is_empty() {
            return Err(GatewayError::NoMessages);
        }
        let key = (self.key_lookup)(&self.config.api_key_var)
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| GatewayError::Auth(format!("environment variable {} is not set", self.config.api_key_var)))?;
        let mut attempt = 0;
        loop {
            match self.attempt(&key, messages) {
                Err(e) if e.is_transient() && attempt < self.config.max_retries => {
                    (self.sleeper)(Self::backoff(attempt));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    fn name(&self) -> &str {
        "http"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::Role;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::Mutex;

    /// Serves the given canned (status, body) responses in order, one per
    /// connection, and returns the captured (headers, body) requests.
    fn fake_server(responses: Vec<(u16, String)>) -> (String, std::thread::JoinHandle<Vec<(String, String)>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let handle = std::thread::spawn(move || {
            let mut requests = Vec::new();
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = None;
                let mut headers = String::new();
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = Some(v.trim().parse().unwrap());
                    }
                    headers.push_str(&line);
                }
                let mut buf = Vec::new();
                match len {
                    Some(n) => {
                        buf.resize(n, 0);
                        reader.read_exact(&mut buf).unwrap();
                    }
                    None => loop {
                        let mut size = String::new();
                        reader.read_line(&mut size).unwrap();
                        let n = usize::from_str_radix(size.trim(), 16).unwrap();
                        let mut chunk = vec![0; n + 2];
                        reader.read_exact(&mut chunk).unwrap();
                        if n == 0 {
                            break;
                        }
                        buf.extend_from_slice(&chunk[..n]);
                    },
                }
                requests.push((headers, String::from_utf8(buf).unwrap()));
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
            requests
        });
        (url, handle)
    }

    fn ok_body(text: &str) -> String {
        json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string()
    }

    fn backend(url: &str, sleeps: Arc<Mutex<Vec<Duration>>>) -> HttpBackend {
        let config = ProviderConfig {
            endpoint: url.into(),
            api_key_var: "TEST_KEY".into(),
            max_retries: 3,
            timeout_secs: 5,
            ..ProviderConfig::default()
        };
        HttpBackend::new(config)
            .with_key_lookup(|k| (k == "TEST_KEY").then(|| "sk-secret".to_string()))
            .with_sleeper(Arc::new(move |d| sleeps.lock().unwrap().push(d)))
    }

    fn msgs() -> Vec<Message> {
        vec![Message::new(Role::System, "rules"), Message::new(Role::User, "hi")]
    }

    #[test]
    fn missing_key_fails_before_network() {
        let config = ProviderConfig {
            endpoint: "http://127.0.0.1:9/unreachable".into(),
            api_key_var: "SCENETALK_TEST_UNSET_KEY".into(),
            ..ProviderConfig::default()
        };
        let b = HttpBackend::new(config).with_key_lookup(|_| None);
        assert!(matches!(b.complete(&msgs()), Err(GatewayError::Auth(_))));
    }

    #[test]
    fn sends_chat_completion_request() {
        let (url, server) = fake_server(vec![(200, ok_body("Hello."))]);
        let sleeps = Arc::new(Mutex::new(Vec::new()));
        let out = backend(&url, sleeps.clone()).complete(&msgs()).unwrap();
        assert_eq!(out, "Hello.");
        let (headers, body) = &server.join().unwrap()[0];
        assert!(headers.to_ascii_lowercase().contains("authorization: bearer sk-secret"));
        let body: serde_json::Value = serde_json::from_str(body).unwrap();
        assert_eq!(body["temperature"], 0.2);
        assert_eq!(body["model"], "gpt-4o");
        assert_eq!(body["messages"][1]["role"], "user");
        assert!(sleeps.lock().unwrap().is_empty());
    }

    #[test]
    fn retries_transient_failures_with_backoff() {
        let (url, server) = fake_server(vec![
            (503, "{}".into()),
            (429, "{}".into()),
            (200, ok_body("third time")),
        ]);
        let sleeps = Arc::new(Mutex::new(Vec::new()));
        let out = backend(&url, sleeps.clone()).complete(&msgs()).unwrap();
        assert_eq!(out, "third time");
        assert_eq!(server.join().unwrap().len(), 3);
        assert_eq!(*sleeps.lock().unwrap(), [Duration::from_secs(1), Duration::from_secs(2)]);
    }

    #[test]
    fn distinct_errors() {
        let (url, _s) = fake_server(vec![(401, "{}".into())]);
        let sleeps = Arc::new(Mutex::new(Vec::new()));
        assert!(matches!(backend(&url, sleeps.clone()).complete(&msgs()), Err(GatewayError::Auth(_))));

        let (url, _s) = fake_server(vec![(429, "{}".into()); 4]);
        assert!(matches!(backend(&url, sleeps.clone()).complete(&msgs()), Err(GatewayError::RateLimit)));
        assert_eq!(sleeps.lock().unwrap().len(), 3);

        let (url, _s) = fake_server(vec![(400, "bad".into())]);
        assert!(matches!(
            backend(&url, sleeps.clone()).complete(&msgs()),
            Err(GatewayError::Rejected { status: 400, .. })
        ));

        let (url, _s) = fake_server(vec![(200, "{\"choices\": []}".into())]);
        assert!(matches!(
            backend(&url, sleeps.clone()).complete(&msgs()),
            Err(GatewayError::InvalidResponse(_))
        ));

        let dead = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/", dead.local_addr().unwrap());
        drop(dead);
        assert!(matches!(backend(&url, sleeps).complete(&msgs()), Err(GatewayError::Transport(_))));
    }

    #[test]
    fn backoff_doubles() {
        assert_eq!(HttpBackend::backoff(0), Duration::from_secs(1));
        assert_eq!(HttpBackend::backoff(3), Duration::from_secs(8));
    }

    #[test]
    fn config_from_env_lookup() {
        let c = ProviderConfig::from_lookup(|k| match k {
            MODEL_VAR => Some("local-model".into()),
            TEMPERATURE_VAR => Some("0.7".into()),
            KEY_VAR_VAR => Some("MY_KEY".into()),
            _ => None,
        });
        assert_eq!(c.model, "local-model");
        assert_eq!(c.temperature, 0.7);
        assert_eq!(c.api_key_var, "MY_KEY");
        let d = ProviderConfig::from_lookup(|k| (k == TEMPERATURE_VAR).then(|| "-1".into()));
        assert_eq!(d.temperature, 0.2);
    }

    #[test]
    fn debug_output_has_no_key() {
        let b = backend("http://x", Arc::new(Mutex::new(Vec::new())));
        assert!(!format!("{b:?}").contains("sk-secret"));
    }
}
