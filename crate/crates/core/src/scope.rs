//! Request classes the runtime refuses outright.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutOfScopeTask {
    ZoomMagnifier,
    EdgeEnhancement,
    TexturedColorChange,
    ObjectDeletion,
    /// A deployment-specific addition loaded from the instruction files.
    Other(String),
}

impl OutOfScopeTask {
    pub const BUILTIN: [OutOfScopeTask; 4] = [
        OutOfScopeTask::ZoomMagnifier,
        OutOfScopeTask::EdgeEnhancement,
        OutOfScopeTask::TexturedColorChange,
        OutOfScopeTask::ObjectDeletion,
    ];

    pub fn descriptor(&self) -> &str {
        match self {
            OutOfScopeTask::ZoomMagnifier => "zoom/magnifier",
            OutOfScopeTask::EdgeEnhancement => "edge enhancement",
            OutOfScopeTask::TexturedColorChange => "color change on textured materials",
            OutOfScopeTask::ObjectDeletion => "object deletion",
            OutOfScopeTask::Other(d) => d,
        }
    }

    /// Maps a descriptor line back to a task; unknown descriptors become
    /// `Other`.
    pub fn from_descriptor(s: &str) -> Self {
        let s = s.trim();
        Self::BUILTIN
            .into_iter()
            .find(|t| t.descriptor().eq_ignore_ascii_case(s))
            .unwrap_or_else(|| OutOfScopeTask::Other(s.to_string()))
    }

    /// Phrases in a user request that signal this class. Matched on
    /// lowercase, whitespace-normalized text.
    pub fn request_phrases(&self) -> &'static [&'static str] {
        match self {
            OutOfScopeTask::ZoomMagnifier => &["zoom", "magnif", "magnify"],
            OutOfScopeTask::EdgeEnhancement => &["edge enhanc", "enhance the edges", "enhance edges", "outline the edges", "sharpen the edges"],
            OutOfScopeTask::TexturedColorChange => &[],
            OutOfScopeTask::ObjectDeletion => &[
                "delete", "remove the", "remove all", "disappear", "get rid of", "destroy", "erase",
            ],
            OutOfScopeTask::Other(_) => &[],
        }
    }

    /// Command words a model might emit for this class. None of these exist
    /// in the modification language.
    pub fn command_words(&self) -> &'static [&'static str] {
        match self {
            OutOfScopeTask::ZoomMagnifier => &["zoom", "set-zoom", "magnify", "magnifier", "add-magnifier"],
            OutOfScopeTask::EdgeEnhancement => &["edge-enhance", "enhance-edges", "outline", "set-outline"],
            OutOfScopeTask::TexturedColorChange => &[],
            OutOfScopeTask::ObjectDeletion => &["delete", "remove", "destroy", "despawn", "hide", "disappear"],
            OutOfScopeTask::Other(_) => &[],
        }
    }

    pub fn for_command_word(word: &str) -> Option<Self> {
        let word = word.to_ascii_lowercase();
        Self::BUILTIN
            .into_iter()
            .find(|t| t.command_words().contains(&word.as_str()))
    }

    /// First out-of-scope class whose phrases appear in `request`.
    pub fn detect(request: &str) -> Option<Self> {
        let text = request
            .to_lowercase()
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ");
        Self::BUILTIN
            .into_iter()
            .find(|t| t.request_phrases().iter().any(|p| text.contains(p)))
    }
}

impl fmt::Display for OutOfScopeTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.descriptor())
    }
}
