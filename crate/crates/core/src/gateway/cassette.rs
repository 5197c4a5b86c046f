use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{ChatBackend, GatewayError};
use crate::prompt::Message;

/// One line of a cassette file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub request: Vec<Message>,
    pub response: String,
}

pub fn cassette_path(dir: &Path, session_tag: &str) -> PathBuf {
    let tag: String = session_tag
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    dir.join(format!("{tag}.jsonl"))
}

/// Passes requests through to `inner` and appends every successful exchange
/// to a JSON-lines cassette.
pub struct RecordingBackend<B> {
    inner: B,
    file: Mutex<File>,
}

impl<B: ChatBackend> RecordingBackend<B> {
    pub fn create(inner: B, path: &Path) -> Result<Self, GatewayError> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| GatewayError::Cassette(format!("{}: {e}", path.display())))?;
        Ok(Self {
            inner,
            file: Mutex::new(file),
        })
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn complete(&self, messages: &[Message]) -> Result<String, GatewayError> {
        let response = self.inner.complete(messages)?;
        let entry = CassetteEntry {
            request: messages.to_vec(),
            response: response.clone(),
        };
        let line = serde_json::to_string(&entry).map_err(|e| GatewayError::Cassette(e.to_string()))?;
        let mut file = self.file.lock().expect("cassette file");
        writeln!(file, "{line}")
            .and_then(|_| file.flush())
            .map_err(|e| GatewayError::Cassette(e.to_string()))?;
        Ok(response)
    }

    fn name(&self) -> &str {
        "recording"
    }
}

/// Serves recorded responses in order. By default each request must equal
/// the recorded one.
#[derive(Debug)]
pub struct ReplayBackend {
    entries: Vec<CassetteEntry>,
    cursor: Mutex<usize>,
    check_requests: bool,
}

impl ReplayBackend {
    pub fn new(entries: Vec<CassetteEntry>) -> Self {
        Self {
            entries,
            cursor: Mutex::new(0),
            check_requests: true,
        }
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let file = File::open(path).map_err(|e| GatewayError::Cassette(format!("{}: {e}", path.display())))?;
        let mut entries = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| GatewayError::Cassette(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry = serde_json::from_str(&line)
                .map_err(|e| GatewayError::Cassette(format!("{}:{}: {e}", path.display(), i + 1)))?;
            entries.push(entry);
        }
        Ok(Self::new(entries))
    }

    /// Serves responses in order without comparing requests.
    pub fn lenient(mut self) -> Self {
        self.check_requests = false;
        self
    }

    pub fn remaining(&self) -> usize {
        self.entries.len() - *self.cursor.lock().expect("cursor")
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&self, messages: &[Message]) -> Result<String, GatewayError> {
        let mut cursor = self.cursor.lock().expect("cursor");
        let index = *cursor;
        let entry = self
            .entries
            .get(index)
            .ok_or(GatewayError::ReplayExhausted { index })?;
        if self.check_requests && entry.request != messages {
            return Err(GatewayError::ReplayMismatch { index });
        }
        *cursor += 1;
        Ok(entry.response.clone())
    }

    fn name(&self) -> &str {
        "replay"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{ScriptRule, ScriptedBackend};
    use crate::prompt::Role;

    fn req(text: &str) -> Vec<Message> {
        vec![Message::new(Role::System, "s"), Message::new(Role::User, text)]
    }

    #[test]
    fn record_then_replay_across_reload() {
        let dir = tempfile::tempdir().unwrap();
        let path = cassette_path(dir.path(), "demo run/1");
        assert!(path.ends_with("demo_run_1.jsonl"));
        let live = ScriptedBackend::new(
            vec![ScriptRule::new("a", "reply a"), ScriptRule::new("b", "reply b")],
            "other",
        );
        let rec = RecordingBackend::create(live, &path).unwrap();
        let inputs = ["a", "b", "c"];
        let recorded: Vec<String> = inputs.iter().map(|i| rec.complete(&req(i)).unwrap()).collect();
        drop(rec);

        let replay = ReplayBackend::load(&path).unwrap();
        assert_eq!(replay.remaining(), 3);
        let replayed: Vec<String> = inputs.iter().map(|i| replay.complete(&req(i)).unwrap()).collect();
        assert_eq!(recorded, replayed);
        assert!(matches!(
            replay.complete(&req("d")),
            Err(GatewayError::ReplayExhausted { index: 3 })
        ));
    }

    #[test]
    fn mismatched_request_is_reported() {
        let replay = ReplayBackend::new(vec![CassetteEntry {
            request: req("a"),
            response: "x".into(),
        }]);
        assert!(matches!(replay.complete(&req("z")), Err(GatewayError::ReplayMismatch { index: 0 })));
        let lenient = ReplayBackend::new(vec![CassetteEntry {
            request: req("a"),
            response: "x".into(),
        }])
        .lenient();
        assert_eq!(lenient.complete(&req("z")).unwrap(), "x");
    }

    #[test]
    fn cassette_never_contains_key() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let rec = RecordingBackend::create(ScriptedBackend::new(vec![], "ok"), &path).unwrap();
        rec.complete(&req("hello")).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(!text.to_lowercase().contains("bearer"));
    }
}
