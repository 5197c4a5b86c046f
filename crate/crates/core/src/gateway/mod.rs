//! Chat-completion backends: a live HTTP client, a rule-based scripted
//! backend, and record/replay cassettes.

mod cassette;
mod http;
mod scripted;

use std::time::Duration;

use thiserror::Error;

use crate::prompt::Message;

pub use cassette::{CassetteEntry, RecordingBackend, ReplayBackend, cassette_path};
pub use http::{HttpBackend, ProviderConfig, Sleeper};
pub use scripted::{ScriptRule, ScriptedBackend, normalize};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("the model did not answer within {0:?}")]
    Timeout(Duration),
    #[error("the model provider is rate limiting requests")]
    RateLimit,
    #[error("could not reach the model provider: {0}")]
    Transport(String),
    #[error("the model provider rejected the request with status {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("unexpected response from the model provider: {0}")]
    InvalidResponse(String),
    #[error("replay cassette has no response for request {index}")]
    ReplayExhausted { index: usize },
    #[error("request {index} differs from the recorded request")]
    ReplayMismatch { index: usize },
    #[error("cassette error: {0}")]
    Cassette(String),
    #[error("empty message list")]
    NoMessages,
}

impl GatewayError {
    /// Errors worth retrying with backoff.
    pub fn is_transient(&self) -> bool {
        matches!(
            self,
            GatewayError::Timeout(_) | GatewayError::RateLimit | GatewayError::Transport(_)
        )
    }

    /// Short sentence suitable for speaking to the user.
    pub fn spoken(&self) -> String {
        match self {
            GatewayError::Auth(_) => "I can't reach the language model because its API key is missing or invalid.".into(),
            GatewayError::Timeout(_) => "The language model took too long to answer. Please try again.".into(),
            GatewayError::RateLimit => "The language model is busy right now. Please try again in a moment.".into(),
            GatewayError::Transport(_) => "I can't connect to the language model. Please check the network.".into(),
            _ => "Something went wrong while contacting the language model.".into(),
        }
    }
}

/// A source of assistant replies for an ordered message list.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, messages: &[Message]) -> Result<String, GatewayError>;

    fn name(&self) -> &str;
}

impl<B: ChatBackend + ?Sized> ChatBackend for Box<B> {
    fn complete(&self, messages: &[Message]) -> Result<String, GatewayError> {
        (**self).complete(messages)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for std::sync::Arc<B> {
    fn complete(&self, messages: &[Message]) -> Result<String, GatewayError> {
        (**self).complete(messages)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}
