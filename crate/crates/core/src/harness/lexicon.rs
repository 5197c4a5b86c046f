use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::codes::{CategoryCode, GoalCode};

const BUNDLED: &str = include_str!("../../resources/coding/lexicon.txt");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LexiconError {
    #[error("line {line}: unknown section '{name}'")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: phrase outside any section")]
    Orphan { line: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Label {
    Category(CategoryCode),
    Goal(GoalCode),
}

/// Lowercase words; apostrophes vanish, other punctuation splits words.
fn words(text: &str) -> Vec<String> {
    text.to_lowercase()
        .chars()
        .filter(|c| *c != '\'' && *c != '\u{2019}')
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

/// A phrase: whole words, the last of which may be a prefix.
#[derive(Debug, Clone, PartialEq)]
struct Phrase {
    words: Vec<String>,
    prefix: bool,
}

impl Phrase {
    fn parse(text: &str) -> Option<Self> {
        let prefix = text.ends_with('*');
        let words = words(text.trim_end_matches('*'));
        (!words.is_empty()).then_some(Self { words, prefix })
    }

    fn matches(&self, tokens: &[String]) -> bool {
        let n = self.words.len();
        if tokens.len() < n {
            return false;
        }
        tokens.windows(n).any(|w| {
            w.iter().zip(&self.words).enumerate().all(|(i, (t, p))| {
                if self.prefix && i == n - 1 {
                    t.starts_with(p.as_str())
                } else {
                    t == p
                }
            })
        })
    }
}

/// Keyword tables for categories and goals.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    entries: BTreeMap<Label, Vec<Phrase>>,
}

impl Lexicon {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled lexicon is valid")
    }

    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut entries: BTreeMap<Label, Vec<Phrase>> = BTreeMap::new();
        let mut current: Option<Label> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let label = match name.strip_prefix("goal:") {
                    Some(g) => GoalCode::ALL
                        .into_iter()
                        .find(|c| c.key() == g)
                        .map(Label::Goal),
                    None => name.parse::<CategoryCode>().ok().map(Label::Category),
                };
                let label = label.ok_or_else(|| LexiconError::UnknownSection {
                    line: i + 1,
                    name: name.to_string(),
                })?;
                entries.entry(label.clone()).or_default();
                current = Some(label);
                continue;
            }
            let label = current.clone().ok_or(LexiconError::Orphan { line: i + 1 })?;
            if let Some(p) = Phrase::parse(line) {
                entries.entry(label).or_default().push(p);
            }
        }
        Ok(Self { entries })
    }

    fn hits(&self, label: &Label, text: &str) -> bool {
        let tokens = words(text);
        self.entries
            .get(label)
            .is_some_and(|ps| ps.iter().any(|p| p.matches(&tokens)))
    }

    /// Categories whose phrases occur in `text`, excluding Other.
    pub fn categories(&self, text: &str) -> BTreeSet<CategoryCode> {
        CategoryCode::ALL
            .into_iter()
            .filter(|c| self.hits(&Label::Category(*c), text))
            .collect()
    }

    pub fn goal_hit(&self, goal: GoalCode, text: &str) -> bool {
        self.hits(&Label::Goal(goal), text)
    }
}
