use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scope::OutOfScopeTask;

const ACCESSIBILITY_FILE: &str = "accessibility.txt";
const ERROR_PREVENTION_FILE: &str = "error_prevention.txt";
const OUT_OF_SCOPE_FILE: &str = "out_of_scope.txt";

const BUNDLED_ACCESSIBILITY: &str = include_str!("../../resources/instructions/accessibility.txt");
const BUNDLED_ERROR_PREVENTION: &str = include_str!("../../resources/instructions/error_prevention.txt");
const BUNDLED_OUT_OF_SCOPE: &str = include_str!("../../resources/instructions/out_of_scope.txt");

#[derive(Debug, Error)]
pub enum InstructionError {
    #[error("{file}:{line}: rule text before any '## ' section header")]
    RuleOutsideSection { file: String, line: usize },
    #[error("{file}: section '{title}' has no rules")]
    EmptySection { file: String, title: String },
    #[error("out-of-scope list is missing the built-in task '{0}'")]
    MissingBuiltin(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A titled group of rules, in file order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub title: String,
    pub rules: Vec<String>,
}

/// The two instruction sets sent with every request, plus the list of tasks
/// the model must decline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionSet {
    pub accessibility: Vec<Section>,
    pub error_prevention: Vec<Section>,
    pub out_of_scope_tasks: Vec<OutOfScopeTask>,
}

impl InstructionSet {
    /// The instruction files compiled into the crate.
    pub fn bundled() -> Self {
        Self::from_texts(
            BUNDLED_ACCESSIBILITY,
            BUNDLED_ERROR_PREVENTION,
            BUNDLED_OUT_OF_SCOPE,
        )
        .expect("bundled instruction files are well formed")
    }

    /// Loads `accessibility.txt`, `error_prevention.txt` and
    /// `out_of_scope.txt` from `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, InstructionError> {
        let read = |name: &str| {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(|source| InstructionError::Io { path, source })
        };
        Self::from_texts(
            &read(ACCESSIBILITY_FILE)?,
            &read(ERROR_PREVENTION_FILE)?,
            &read(OUT_OF_SCOPE_FILE)?,
        )
    }

    pub fn from_texts(
        accessibility: &str,
        error_prevention: &str,
        out_of_scope: &str,
    ) -> Result<Self, InstructionError> {
        let tasks: Vec<OutOfScopeTask> = out_of_scope
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with(';'))
            .map(OutOfScopeTask::from_descriptor)
            .collect();
        for builtin in OutOfScopeTask::BUILTIN {
            if !tasks.contains(&builtin) {
                return Err(InstructionError::MissingBuiltin(builtin.descriptor().to_string()));
            }
        }
        let mut set = Self {
            accessibility: parse_sections(ACCESSIBILITY_FILE, accessibility)?,
            error_prevention: parse_sections(ERROR_PREVENTION_FILE, error_prevention)?,
            out_of_scope_tasks: Vec::new(),
        };
        for t in tasks {
            set.add_out_of_scope(t);
        }
        Ok(set)
    }

    pub fn add_out_of_scope(&mut self, task: OutOfScopeTask) {
        if !self.out_of_scope_tasks.contains(&task) {
            self.out_of_scope_tasks.push(task);
        }
    }

    pub fn accessibility_rules(&self) -> impl Iterator<Item = &str> {
        self.accessibility.iter().flat_map(|s| s.rules.iter().map(String::as_str))
    }

    pub fn error_prevention_rules(&self) -> impl Iterator<Item = &str> {
        self.error_prevention.iter().flat_map(|s| s.rules.iter().map(String::as_str))
    }

    /// The task declined for a request, by phrase match over the built-in
    /// classes and literal match over configured additions.
    pub fn out_of_scope_for(&self, request: &str) -> Option<OutOfScopeTask> {
        if let Some(t) = OutOfScopeTask::detect(request) {
            return Some(t);
        }
        let text = request.to_lowercase();
        self.out_of_scope_tasks
            .iter()
            .find(|t| matches!(t, OutOfScopeTask::Other(d) if text.contains(&d.to_lowercase())))
            .cloned()
    }
}

/// `## title` starts a section; blank lines separate rules; lines inside a
/// paragraph are joined with single spaces.
fn parse_sections(file: &str, text: &str) -> Result<Vec<Section>, InstructionError> {
    let mut sections: Vec<Section> = Vec::new();
    let mut paragraph: Vec<&str> = Vec::new();
    let flush = |sections: &mut Vec<Section>, paragraph: &mut Vec<&str>| {
        if !paragraph.is_empty() {
            let rule = paragraph.join(" ");
            sections.last_mut().expect("checked on first line").rules.push(rule);
            paragraph.clear();
        }
    };
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(title) = line.strip_prefix("## ") {
            flush(&mut sections, &mut paragraph);
            sections.push(Section {
                title: title.trim().to_string(),
                rules: Vec::new(),
            });
        } else if line.is_empty() {
            flush(&mut sections, &mut paragraph);
        } else if sections.is_empty() {
            return Err(InstructionError::RuleOutsideSection {
                file: file.to_string(),
                line: i + 1,
            });
        } else {
            paragraph.push(line);
        }
    }
    flush(&mut sections, &mut paragraph);
    if let Some(s) = sections.iter().find(|s| s.rules.is_empty()) {
        return Err(InstructionError::EmptySection {
            file: file.to_string(),
            title: s.title.clone(),
        });
    }
    Ok(sections)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_sections_follow_the_source_order() {
        let set = InstructionSet::bundled();
        let titles: Vec<&str> = set.accessibility.iter().map(|s| s.title.as_str()).collect();
        assert_eq!(
            titles,
            [
                "colors",
                "object and text size",
                "spatial relationship",
                "scene brightness",
                "audio sources",
                "description brevity"
            ]
        );
        assert_eq!(set.accessibility_rules().count(), 20);
        assert_eq!(set.error_prevention_rules().count(), 3);
        assert_eq!(set.out_of_scope_tasks, OutOfScopeTask::BUILTIN.to_vec());
    }

    #[test]
    fn rules_are_verbatim() {
        let set = InstructionSet::bundled();
        let rules: Vec<&str> = set.accessibility_rules().collect();
        assert!(rules.contains(
            &"When asked about size of an item, each unit is a meter. Answer how big an object is based on the size in meters."
        ));
        assert!(rules.contains(&"To change the color of an object, first simplify the texture and then change the color."));
        assert!(set.error_prevention_rules().any(|r| r.ends_with(
            "The types of requests that cannot be achieved include: make zoom/magnifier, edge enhancement, color change on textured materials, object deletion."
        )));
    }

    #[test]
    fn load_dir_matches_bundled_and_accepts_additions() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(ACCESSIBILITY_FILE), BUNDLED_ACCESSIBILITY).unwrap();
        fs::write(dir.path().join(ERROR_PREVENTION_FILE), BUNDLED_ERROR_PREVENTION).unwrap();
        fs::write(
            dir.path().join(OUT_OF_SCOPE_FILE),
            format!("{BUNDLED_OUT_OF_SCOPE}\nweather change\n"),
        )
        .unwrap();
        let set = InstructionSet::load_dir(dir.path()).unwrap();
        assert_eq!(set.accessibility, InstructionSet::bundled().accessibility);
        assert_eq!(set.out_of_scope_tasks.len(), 5);
        assert_eq!(
            set.out_of_scope_for("Can you do a weather change to rain?"),
            Some(OutOfScopeTask::Other("weather change".into()))
        );
        assert_eq!(
            set.out_of_scope_for("please zoom in on the table"),
            Some(OutOfScopeTask::ZoomMagnifier)
        );
        assert_eq!(set.out_of_scope_for("make the bench yellow"), None);
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(matches!(
            InstructionSet::from_texts("orphan rule", BUNDLED_ERROR_PREVENTION, BUNDLED_OUT_OF_SCOPE),
            Err(InstructionError::RuleOutsideSection { line: 1, .. })
        ));
        assert!(matches!(
            InstructionSet::from_texts("## empty\n", BUNDLED_ERROR_PREVENTION, BUNDLED_OUT_OF_SCOPE),
            Err(InstructionError::EmptySection { .. })
        ));
        assert!(matches!(
            InstructionSet::from_texts(BUNDLED_ACCESSIBILITY, BUNDLED_ERROR_PREVENTION, "zoom/magnifier\n"),
            Err(InstructionError::MissingBuiltin(_))
        ));
    }
}
