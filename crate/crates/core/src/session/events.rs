use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtteranceKind {
    CharEcho,
    WordEcho,
    #[default]
    Reply,
    ErrorNotice,
}

/// Something the client should speak aloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceEvent {
    pub kind: UtteranceKind,
    pub text: String,
    pub timestamp_ms: u64,
}

/// A key press in the chat input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "key", content = "char", rename_all = "snake_case")]
pub enum Key {
    Char(char),
    Backspace,
    Enter,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct KeyEcho {
    pub events: Vec<UtteranceEvent>,
    /// Set when Enter submitted a non-empty line.
    pub submitted: Option<String>,
}

/// Line editor that echoes characters and completed words.
#[derive(Debug, Clone, Default)]
pub struct EchoBuffer {
    line: String,
    word: String,
}

fn is_boundary(c: char) -> bool {
    c.is_whitespace() || c.is_ascii_punctuation()
}

impl EchoBuffer {
    pub fn line(&self) -> &str {
        &self.line
    }

    /// Returns the (kind, text) pairs to speak, plus a submitted line on
    /// Enter. Enter speaks only the completed word.
    pub fn press(&mut self, key: Key) -> (Vec<(UtteranceKind, String)>, Option<String>) {
        let mut out = Vec::new();
        match key {
            Key::Char(c) => {
                out.push((UtteranceKind::CharEcho, c.to_string()));
                self.line.push(c);
                if is_boundary(c) {
                    if !self.word.is_empty() {
                        out.push((UtteranceKind::WordEcho, std::mem::take(&mut self.word)));
                    }
                } else {
                    self.word.push(c);
                }
                (out, None)
            }
            Key::Backspace => {
                out.push((UtteranceKind::CharEcho, "backspace".to_string()));
                if let Some(c) = self.line.pop() {
                    if is_boundary(c) {
                        // step back into the previous word
                        self.word = self
                            .line
                            .rsplit(is_boundary)
                            .next()
                            .unwrap_or_default()
                            .to_string();
                    } else {
                        self.word.pop();
                    }
                }
                (out, None)
            }
            Key::Enter => {
                if !self.word.is_empty() {
                    out.push((UtteranceKind::WordEcho, std::mem::take(&mut self.word)));
                }
                let line = std::mem::take(&mut self.line);
                self.word.clear();
                let submitted = (!line.trim().is_empty()).then_some(line);
                (out, submitted)
            }
        }
    }
}
