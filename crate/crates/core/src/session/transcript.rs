use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use super::events::UtteranceEvent;
use crate::prompt::ResponseEnvelope;
use crate::scope::OutOfScopeTask;
use crate::sml::{SceneDelta, ValidationReport};

/// How a turn ended, from the user's point of view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TurnOutcome {
    Applied,
    Answered,
    Clarified,
    OutOfScope { task: Option<OutOfScopeTask> },
    /// Validation refused the program for a reason other than scope.
    Rejected,
    /// The program passed validation but failed while running.
    ExecutionFailed { message: String },
    /// The model's reply stayed unusable after the repair attempt.
    Recovered,
    GatewayFailed { message: String },
}

/// One user turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub index: usize,
    pub timestamp_ms: u64,
    pub scene_version_before: u64,
    pub user_input: String,
    /// The envelope the turn acted on, after any repair attempt.
    pub envelope: Option<ResponseEnvelope>,
    /// Parse diagnostics from replies that could not be used.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub envelope_errors: Vec<String>,
    pub validation: Option<ValidationReport>,
    pub delta: Option<SceneDelta>,
    pub outcome: TurnOutcome,
    pub reply: String,
    pub utterances: Vec<UtteranceEvent>,
}

/// Append-only, numbered list of turns.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends `entry`, numbering it.
    pub fn push(&mut self, mut entry: TranscriptEntry) -> &TranscriptEntry {
        entry.index = self.entries.len();
        self.entries.push(entry);
        self.entries.last().expect("just pushed")
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> io::Result<()> {
        for e in &self.entries {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn read_jsonl(r: impl BufRead) -> io::Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: TranscriptEntry = serde_json::from_str(&line)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1)))?;
            entries.push(entry);
        }
        Ok(Self { entries })
    }
}
