//! Batch subcommands: task scripts and tallies.

use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::Path;

use scenetalk_core::harness::{
    CodedPrompt, Judgement, Lexicon, ScriptBundle, ScriptReport, TallyReport, code_prompt, run_task_scripts, tally,
};
use scenetalk_core::session::Transcript;

use crate::cli::{self, BackendKind};

/// Runs a bundle and optionally writes `task-<id>.jsonl` transcripts and
/// `report.json` to `out`.
pub fn run_tasks(
    bundle: &ScriptBundle,
    kind: BackendKind,
    cassette: Option<&Path>,
    out: Option<&Path>,
) -> Result<ScriptReport, String> {
    let backend = match kind {
        BackendKind::Scripted => std::sync::Arc::new(bundle.backend()),
        other => cli::backend(other, cassette, None, &bundle.scene)?,
    };
    let report = run_task_scripts(&bundle.tasks, backend);
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        for task in &report.tasks {
            let path = dir.join(format!("task-{}.jsonl", task.id));
            let file = File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            task.transcript
                .write_jsonl(file)
                .map_err(|e| format!("{}: {e}", path.display()))?;
        }
        let path = dir.join("report.json");
        let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
        fs::write(&path, json).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(report)
}

/// Codes every entry of every transcript file, in order.
pub fn code_transcripts(paths: &[impl AsRef<Path>]) -> Result<Vec<CodedPrompt>, String> {
    let lexicon = Lexicon::bundled();
    let mut coded = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let transcript = Transcript::read_jsonl(BufReader::new(file)).map_err(|e| format!("{}: {e}", path.display()))?;
        coded.extend(
            transcript
                .entries()
                .iter()
                .map(|e| code_prompt(e, &lexicon, Judgement::default())),
        );
    }
    Ok(coded)
}

pub fn run_tally(paths: &[impl AsRef<Path>], csv: Option<&Path>, mut out: impl Write) -> Result<TallyReport, String> {
    let coded = code_transcripts(paths)?;
    if coded.is_empty() {
        return Err("no transcript entries to code".into());
    }
    let report = tally(&coded);
    let io = |e: std::io::Error| e.to_string();
    match csv {
        Some(path) => fs::write(path, report.to_csv()).map_err(|e| format!("{}: {e}", path.display()))?,
        None => write!(out, "{}", report.to_csv()).map_err(io)?,
    }
    write!(out, "{}", report.summary()).map_err(io)?;
    for c in coded.iter().filter(|c| c.diagnostic.is_some()) {
        writeln!(out, "entry {}: {}", c.index, c.diagnostic.as_deref().unwrap_or_default()).map_err(io)?;
    }
    Ok(report)
}
