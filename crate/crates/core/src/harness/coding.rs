use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::codes::{CategoryCode, CorrectnessCode, GoalCode};
use super::lexicon::Lexicon;
use crate::prompt::Mode;
use crate::scope::OutOfScopeTask;
use crate::session::{TranscriptEntry, TurnOutcome};
use crate::sml::Command;

/// Codes assigned to one transcript entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodedPrompt {
    pub index: usize,
    pub user_input: String,
    pub categories: BTreeSet<CategoryCode>,
    pub goal: GoalCode,
    pub correctness: CorrectnessCode,
    /// Set when the entry could not be coded normally.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

/// Coding context beyond the entry itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct Judgement {
    /// Outcome of the ground-truth check for this prompt, when there is one.
    pub verified: Option<bool>,
    /// The prompt was issued to complete an assigned task.
    pub task_driven: bool,
}

fn inconsistency(entry: &TranscriptEntry) -> Option<String> {
    let mode = entry.envelope.as_ref().map(|e| e.mode);
    if entry.delta.is_some() {
        if mode != Some(Mode::Modify) {
            return Some("delta recorded without a modify envelope".into());
        }
        if entry.outcome != TurnOutcome::Applied {
            return Some("delta recorded for a turn that was not applied".into());
        }
    }
    if entry.outcome == TurnOutcome::Applied && mode != Some(Mode::Modify) {
        return Some("applied turn without a modify envelope".into());
    }
    None
}

/// Categories: from the program's commands, else from the declined task,
/// else from the keyword lexicon, else Other.
fn categories(entry: &TranscriptEntry, lexicon: &Lexicon) -> BTreeSet<CategoryCode> {
    let mut out: BTreeSet<CategoryCode> = entry
        .envelope
        .iter()
        .filter_map(|e| e.program.as_ref())
        .flat_map(|p| p.commands())
        .map(CategoryCode::for_command)
        .collect();
    if out.is_empty() {
        let task = match &entry.outcome {
            TurnOutcome::OutOfScope { task } => task.clone(),
            _ => entry.envelope.as_ref().and_then(|e| e.task.clone()),
        };
        out.extend(task.as_ref().and_then(CategoryCode::for_task));
    }
    if out.is_empty() {
        out = lexicon.categories(&entry.user_input);
    }
    if out.is_empty() {
        out.insert(CategoryCode::Other);
    }
    out
}

fn goal(entry: &TranscriptEntry, lexicon: &Lexicon, task_driven: bool) -> GoalCode {
    let text = &entry.user_input;
    let mode = entry.envelope.as_ref().map(|e| e.mode);
    let modifying = mode == Some(Mode::Modify) || matches!(entry.outcome, TurnOutcome::OutOfScope { .. });
    if modifying {
        let creates = entry
            .envelope
            .iter()
            .filter_map(|e| e.program.as_ref())
            .any(|p| p.commands().any(|c| c == Command::CreatePrimitive));
        if creates || lexicon.goal_hit(GoalCode::CM, text) {
            return GoalCode::CM;
        }
        return if task_driven { GoalCode::EM } else { GoalCode::PM };
    }
    [GoalCode::V, GoalCode::US, GoalCode::EK, GoalCode::SS]
        .into_iter()
        .find(|g| lexicon.goal_hit(*g, text))
        .unwrap_or(GoalCode::QI)
}

fn correctness(entry: &TranscriptEntry, verified: Option<bool>) -> CorrectnessCode {
    let failed_check = verified == Some(false);
    match &entry.outcome {
        TurnOutcome::Applied | TurnOutcome::Answered if failed_check => CorrectnessCode::IntentError,
        TurnOutcome::Applied | TurnOutcome::Answered => CorrectnessCode::Success,
        TurnOutcome::OutOfScope { task } => {
            let listed = task.is_some() || OutOfScopeTask::detect(&entry.user_input).is_some();
            if listed && !failed_check {
                CorrectnessCode::OutOfScopeAck
            } else {
                CorrectnessCode::IntentError
            }
        }
        TurnOutcome::Clarified => CorrectnessCode::IntentError,
        TurnOutcome::Rejected
        | TurnOutcome::ExecutionFailed { .. }
        | TurnOutcome::Recovered
        | TurnOutcome::GatewayFailed { .. } => CorrectnessCode::TechnicalError,
    }
}

/// Codes one entry by a fixed rule table. Inconsistent entries are coded
/// Other and technical error with a diagnostic.
pub fn code_prompt(entry: &TranscriptEntry, lexicon: &Lexicon, judgement: Judgement) -> CodedPrompt {
    if let Some(diagnostic) = inconsistency(entry) {
        return CodedPrompt {
            index: entry.index,
            user_input: entry.user_input.clone(),
            categories: BTreeSet::from([CategoryCode::Other]),
            goal: GoalCode::QI,
            correctness: CorrectnessCode::TechnicalError,
            diagnostic: Some(diagnostic),
        };
    }
    CodedPrompt {
        index: entry.index,
        user_input: entry.user_input.clone(),
        categories: categories(entry, lexicon),
        goal: goal(entry, lexicon, judgement.task_driven),
        correctness: correctness(entry, judgement.verified),
        diagnostic: None,
    }
}
