//! JSON messages exchanged over the WebSocket stream.

use scenetalk_core::prompt::Mode;
use scenetalk_core::scene::Scene;
use scenetalk_core::session::{NavCommand, NavKind, TurnOutcome, UtteranceEvent};
use scenetalk_core::sml::SceneDelta;
use serde::{Deserialize, Serialize};

/// One frame on the stream. `seq` strictly increases per connection and
/// direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    pub seq: u64,
    #[serde(flatten)]
    pub body: Body,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum Body {
    /// Full scene state; the first message on every connection.
    Snapshot { scene: Scene },
    /// Client to server, driver only.
    UserInput { text: String },
    /// Client to server, driver only.
    Nav {
        kind: NavKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        magnitude: Option<f64>,
    },
    Reply(ReplyPayload),
    Utterance(UtteranceEvent),
    SceneDelta(SceneDelta),
    Error { message: String },
    /// Sent by a client with an empty payload to request the scene graph;
    /// answered with the graph to that connection only.
    SsgDump {
        #[serde(default)]
        ssg: String,
    },
}

impl Body {
    pub fn kind(&self) -> &'static str {
        match self {
            Body::Snapshot { .. } => "snapshot",
            Body::UserInput { .. } => "user_input",
            Body::Nav { .. } => "nav",
            Body::Reply(_) => "reply",
            Body::Utterance(_) => "utterance",
            Body::SceneDelta(_) => "scene_delta",
            Body::Error { .. } => "error",
            Body::SsgDump { .. } => "ssg_dump",
        }
    }

    pub fn error(message: impl Into<String>) -> Self {
        Body::Error {
            message: message.into(),
        }
    }
}

/// The outcome of one user turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplyPayload {
    /// Transcript entry index.
    pub turn: usize,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    pub outcome: TurnOutcome,
}

/// A request a client may send.
#[derive(Debug, Clone, PartialEq)]
pub enum Inbound {
    UserInput(String),
    Nav(NavCommand),
    SsgDump,
}

/// Tracks one connection's inbound sequence and permissions.
#[derive(Debug, Clone)]
pub struct InboundParser {
    driver: bool,
    last_seq: Option<u64>,
}

impl InboundParser {
    pub fn new(driver: bool) -> Self {
        Self { driver, last_seq: None }
    }

    /// Parses a text frame. Any error is a protocol violation.
    pub fn parse(&mut self, text: &str) -> Result<Inbound, String> {
        let msg: WireMessage = serde_json::from_str(text).map_err(|e| format!("malformed message: {e}"))?;
        if self.last_seq.is_some_and(|last| msg.seq <= last) {
            return Err(format!("sequence number {} does not increase", msg.seq));
        }
        self.last_seq = Some(msg.seq);
        let needs_driver = |kind: &str| {
            if self.driver {
                Ok(())
            } else {
                Err(format!("{kind} is only accepted from the driver connection"))
            }
        };
        match msg.body {
            Body::UserInput { text } => {
                needs_driver("user_input")?;
                Ok(Inbound::UserInput(text))
            }
            Body::Nav { kind, magnitude } => {
                needs_driver("nav")?;
                let cmd = match magnitude {
                    None => NavCommand::new(kind),
                    Some(m) => NavCommand::with_magnitude(kind, m)
                        .ok_or_else(|| format!("nav magnitude must be positive and finite, got {m}"))?,
                };
                Ok(Inbound::Nav(cmd))
            }
            Body::SsgDump { .. } => Ok(Inbound::SsgDump),
            other => Err(format!("{} messages are sent by the server only", other.kind())),
        }
    }
}
