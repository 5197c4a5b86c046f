use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub text: String,
    /// Milliseconds on the session clock.
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("turn at {got} ms is earlier than the previous turn at {last} ms")]
pub struct OutOfOrder {
    pub last: u64,
    pub got: u64,
}

/// Append-only record of the conversation. Prompts see only the most recent
/// `max_turns` exchanges, where an exchange starts at a user turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversationHistory {
    turns: Vec<Turn>,
    pub max_turns: usize,
}

impl ConversationHistory {
    pub const DEFAULT_MAX_TURNS: usize = 20;

    pub fn new(max_turns: usize) -> Self {
        Self {
            turns: Vec::new(),
            max_turns,
        }
    }

    pub fn push(&mut self, role: Role, text: impl Into<String>, timestamp_ms: u64) -> Result<(), OutOfOrder> {
        if let Some(last) = self.turns.last()
            && timestamp_ms < last.timestamp_ms
        {
            return Err(OutOfOrder {
                last: last.timestamp_ms,
                got: timestamp_ms,
            });
        }
        self.turns.push(Turn {
            role,
            text: text.into(),
            timestamp_ms,
        });
        Ok(())
    }

    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    pub fn exchange_count(&self) -> usize {
        self.turns.iter().filter(|t| t.role == Role::User).count()
    }

    /// Turns belonging to the last `n` exchanges. Turns before the first
    /// user turn count as part of the first exchange.
    pub fn last_exchanges(&self, n: usize) -> &[Turn] {
        if n == 0 {
            return &[];
        }
        let starts: Vec<usize> = self
            .turns
            .iter()
            .enumerate()
            .filter(|(_, t)| t.role == Role::User)
            .map(|(i, _)| i)
            .collect();
        if starts.len() <= n {
            return &self.turns;
        }
        &self.turns[starts[starts.len() - n]..]
    }

    /// The window sent to the model.
    pub fn window(&self) -> &[Turn] {
        self.last_exchanges(self.max_turns)
    }
}

impl Default for ConversationHistory {
    fn default() -> Self {
        Self::new(Self::DEFAULT_MAX_TURNS)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn filled(exchanges: usize, max_turns: usize) -> ConversationHistory {
        let mut h = ConversationHistory::new(max_turns);
        for i in 0..exchanges {
            h.push(Role::User, format!("q{i}"), i as u64 * 10).unwrap();
            h.push(Role::Assistant, format!("a{i}"), i as u64 * 10 + 5).unwrap();
        }
        h
    }

    #[test]
    fn window_keeps_most_recent_exchanges() {
        let h = filled(50, 20);
        let w = h.window();
        assert_eq!(w.len(), 40);
        assert_eq!(w[0].text, "q30");
        assert_eq!(w.last().unwrap().text, "a49");
        assert_eq!(filled(3, 20).window().len(), 6);
        assert!(filled(3, 0).window().is_empty());
    }

    #[test]
    fn rejects_out_of_order_turns() {
        let mut h = filled(1, 5);
        assert_eq!(
            h.push(Role::User, "late", 1),
            Err(OutOfOrder { last: 5, got: 1 })
        );
        h.push(Role::User, "same time", 5).unwrap();
    }
}
