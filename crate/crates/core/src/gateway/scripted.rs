use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{ChatBackend, GatewayError};
use crate::prompt::{Message, Role};

const REQUEST_MARKER: &str = "User request:";

/// Lowercases, drops punctuation and collapses whitespace.
pub fn normalize(text: &str) -> String {
    text.to_lowercase()
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// One canned response. With several replies, each match serves the next
/// one and the last repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptRule {
    #[serde(rename = "match")]
    pub pattern: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reply: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub replies: Vec<String>,
}

impl ScriptRule {
    pub fn new(pattern: impl Into<String>, reply: impl Into<String>) -> Self {
        Self {
            pattern: pattern.into(),
            reply: Some(reply.into()),
            replies: Vec::new(),
        }
    }

    fn all_replies(&self) -> Vec<String> {
        self.reply.iter().cloned().chain(self.replies.iter().cloned()).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScriptFile {
    rules: Vec<ScriptRule>,
    fallback: String,
}

/// Deterministic backend: the first rule whose normalized pattern occurs in
/// the normalized latest user request wins.
#[derive(Debug)]
pub struct ScriptedBackend {
    rules: Vec<(String, Vec<String>)>,
    fallback: String,
    served: Mutex<Vec<usize>>,
}

impl ScriptedBackend {
    pub fn new(rules: Vec<ScriptRule>, fallback: impl Into<String>) -> Self {
        let rules: Vec<(String, Vec<String>)> = rules
            .iter()
            .map(|r| (normalize(&r.pattern), r.all_replies()))
            .filter(|(_, replies)| !replies.is_empty())
            .collect();
        let served = Mutex::new(vec![0; rules.len()]);
        Self {
            rules,
            fallback: fallback.into(),
            served,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let file: ScriptFile = serde_json::from_str(text)?;
        Ok(Self::new(file.rules, file.fallback))
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::Cassette(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| GatewayError::Cassette(format!("{}: {e}", path.display())))
    }

    /// The part of the latest user message that the rules see: the text
    /// after the request marker, or the whole message when absent.
    pub fn request_text(messages: &[Message]) -> Option<&str> {
        let last = messages.iter().rev().find(|m| m.role == Role::User)?;
        Some(
            last.content
                .rsplit_once(REQUEST_MARKER)
                .map_or(last.content.as_str(), |(_, r)| r),
        )
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, messages: &[Message]) -> Result<String, GatewayError> {
        if messages.is_empty() {
            return Err(GatewayError::NoMessages);
        }
        let request = normalize(Self::request_text(messages).unwrap_or(""));
        let Some(i) = self.rules.iter().position(|(p, _)| request.contains(p.as_str())) else {
            return Ok(self.fallback.clone());
        };
        let mut served = self.served.lock().expect("served counter");
        let replies = &self.rules[i].1;
        let reply = replies[served[i].min(replies.len() - 1)].clone();
        served[i] += 1;
        Ok(reply)
    }

    fn name(&self) -> &str {
        "scripted"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::user_message;

    fn ask(b: &ScriptedBackend, text: &str) -> String {
        b.complete(&[
            Message::new(Role::System, "rules"),
            Message::new(Role::User, user_message("{\"nodes\": [\"Bench\"]}", text)),
        ])
        .unwrap()
    }

    #[test]
    fn first_match_wins_and_fallback() {
        let b = ScriptedBackend::new(
            vec![
                ScriptRule::new("bench yellow", "one"),
                ScriptRule::new("bench", "two"),
            ],
            "fallback",
        );
        assert_eq!(ask(&b, "Make the BENCH   yellow!"), "one");
        assert_eq!(ask(&b, "Where is the bench?"), "two");
        assert_eq!(ask(&b, "What is the sky like?"), "fallback");
    }

    #[test]
    fn matches_only_the_request_not_the_scene() {
        let b = ScriptedBackend::new(vec![ScriptRule::new("bench", "hit")], "miss");
        assert_eq!(ask(&b, "anything else"), "miss");
    }

    #[test]
    fn reply_sequences_advance_then_repeat() {
        let b = ScriptedBackend::from_json(
            r#"{"rules": [{"match": "hello", "replies": ["a", "b"]}], "fallback": "f"}"#,
        )
        .unwrap();
        assert_eq!(ask(&b, "hello"), "a");
        assert_eq!(ask(&b, "hello"), "b");
        assert_eq!(ask(&b, "hello"), "b");
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize("  What's   the COLOR, of the cube? "), "whats the color of the cube");
    }

    #[test]
    fn deterministic_across_instances() {
        let mk = || ScriptedBackend::new(vec![ScriptRule::new("x", "y")], "z");
        for q in ["x marks", "nothing", "X"] {
            assert_eq!(ask(&mk(), q), ask(&mk(), q));
        }
    }
}
