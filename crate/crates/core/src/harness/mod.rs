//! Evaluation: scripted task runs with ground-truth checks, prompt coding
//! and outcome tallies.

mod codes;
mod coding;
mod lexicon;
mod script;
mod tally;

pub use codes::{CategoryCode, CorrectnessCode, GoalCode, GoalGroup};
pub use coding::{CodedPrompt, Judgement, code_prompt};
pub use lexicon::{Lexicon, LexiconError};
pub use script::{
    Predicate, PredicateFailure, Quantity, ScriptBundle, ScriptError, ScriptReport, Step, TaskResult, TaskScript,
    run_task, run_task_scripts,
};
pub use tally::{CSV_HEADER, Counts, TallyReport, percent, percent_tenths, synthetic_log, tally};
