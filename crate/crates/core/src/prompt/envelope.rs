use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scope::OutOfScopeTask;
use crate::sml::{SmlError, SmlProgram, format, parse_str};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Modify,
    Answer,
    Clarify,
    OutOfScope,
    ErrorRecovery,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::Modify,
        Mode::Answer,
        Mode::Clarify,
        Mode::OutOfScope,
        Mode::ErrorRecovery,
    ];

    /// Spelling used in the `#mode:` header.
    pub fn header(&self) -> &'static str {
        match self {
            Mode::Modify => "modify",
            Mode::Answer => "answer",
            Mode::Clarify => "clarify",
            Mode::OutOfScope => "out-of-scope",
            Mode::ErrorRecovery => "error-recovery",
        }
    }

    pub fn from_header(s: &str) -> Option<Mode> {
        let s = s.trim().to_ascii_lowercase().replace('_', "-");
        Mode::ALL.into_iter().find(|m| m.header() == s)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.header())
    }
}

/// Structured reading of one model reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseEnvelope {
    pub mode: Mode,
    pub reply_text: String,
    pub program: Option<SmlProgram>,
    /// Declined capability named by a `#task:` header.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<OutOfScopeTask>,
    pub raw: String,
}

impl ResponseEnvelope {
    pub fn new(mode: Mode, reply_text: impl Into<String>, program: Option<SmlProgram>) -> Self {
        let mut env = Self {
            mode,
            reply_text: reply_text.into(),
            program,
            task: None,
            raw: String::new(),
        };
        env.raw = render_envelope(&env);
        env
    }

    pub fn with_task(mut self, task: OutOfScopeTask) -> Self {
        self.task = Some(task);
        self.raw = render_envelope(&self);
        self
    }

    pub fn program_len(&self) -> usize {
        self.program.as_ref().map_or(0, SmlProgram::len)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvelopeError {
    #[error("reply contains {0} sml blocks; expected at most one")]
    MultipleBlocks(usize),
    #[error("sml block is not closed")]
    Unterminated,
    #[error("sml block must start with a '#mode:' header")]
    MissingMode,
    #[error("unknown mode '{0}'")]
    UnknownMode(String),
    #[error("invalid program in sml block: {0}")]
    Program(#[from] SmlError),
    #[error("mode {mode} {problem}")]
    ModeMismatch { mode: Mode, problem: &'static str },
}

const OPEN: &str = "```sml";
const CLOSE: &str = "```";

/// Splits a reply into prose and its optional ```sml block, then reads the
/// mode header and program. A reply without a block is an answer.
pub fn parse_envelope(text: &str) -> Result<ResponseEnvelope, EnvelopeError> {
    let lines: Vec<&str> = text.lines().collect();
    let opens: Vec<usize> = lines
        .iter()
        .enumerate()
        .filter(|(_, l)| l.trim().eq_ignore_ascii_case(OPEN))
        .map(|(i, _)| i)
        .collect();
    let Some(&open) = opens.first() else {
        return Ok(ResponseEnvelope {
            mode: Mode::Answer,
            reply_text: text.trim().to_string(),
            program: None,
            task: None,
            raw: text.to_string(),
        });
    };
    if opens.len() > 1 {
        return Err(EnvelopeError::MultipleBlocks(opens.len()));
    }
    let close = lines[open + 1..]
        .iter()
        .position(|l| l.trim() == CLOSE)
        .map(|p| open + 1 + p)
        .ok_or(EnvelopeError::Unterminated)?;

    let before = lines[..open].join("\n");
    let after = lines[close + 1..].join("\n");
    let reply_text = [before.trim(), after.trim()]
        .into_iter()
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join("\n");

    let mut body = lines[open + 1..close].iter().skip_while(|l| l.trim().is_empty());
    let header = body.next().ok_or(EnvelopeError::MissingMode)?;
    let mode_text = header
        .trim()
        .strip_prefix("#mode:")
        .ok_or(EnvelopeError::MissingMode)?;
    let mode = Mode::from_header(mode_text)
        .ok_or_else(|| EnvelopeError::UnknownMode(mode_text.trim().to_string()))?;

    let mut task = None;
    let mut program_lines = Vec::new();
    for line in body {
        match line.trim().strip_prefix("#task:") {
            Some(t) if program_lines.iter().all(|l: &&str| l.trim().is_empty()) => {
                task = Some(OutOfScopeTask::from_descriptor(t));
            }
            _ => program_lines.push(*line),
        }
    }
    let program = parse_str(&program_lines.join("\n"))?;
    match (mode, program.is_empty()) {
        (Mode::Modify, true) => {
            return Err(EnvelopeError::ModeMismatch {
                mode,
                problem: "requires a non-empty program",
            });
        }
        (Mode::Modify, false) | (_, true) => {}
        (_, false) => {
            return Err(EnvelopeError::ModeMismatch {
                mode,
                problem: "must not carry a program",
            });
        }
    }
    Ok(ResponseEnvelope {
        mode,
        reply_text,
        program: (mode == Mode::Modify).then_some(program),
        task,
        raw: text.to_string(),
    })
}

/// Inverse of `parse_envelope`: prose first, then the block.
pub fn render_envelope(env: &ResponseEnvelope) -> String {
    let mut out = String::new();
    if !env.reply_text.is_empty() {
        out.push_str(&env.reply_text);
        out.push_str("\n\n");
    }
    out.push_str(OPEN);
    out.push_str("\n#mode: ");
    out.push_str(env.mode.header());
    out.push('\n');
    if let Some(task) = &env.task {
        out.push_str("#task: ");
        out.push_str(task.descriptor());
        out.push('\n');
    }
    if let Some(p) = env.program.as_ref().filter(|p| !p.is_empty()) {
        out.push_str(&format(p));
        out.push('\n');
    }
    out.push_str(CLOSE);
    out
}
