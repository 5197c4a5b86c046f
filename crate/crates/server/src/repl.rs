//! Terminal chat loop.

use std::fs::File;
use std::io::{self, BufRead, Write};
use std::path::Path;

use scenetalk_core::scenefile::save_scene;
use scenetalk_core::session::{NavCommand, NavKind, Session, UtteranceKind, describe_delta};

const HELP: &str = "\
Type a request, or one of:
  :nav <f|b|l|r|pl|pr|pu|pd> [amount]  move or turn
  :verify                              describe the last change
  :undo                                revert the last change
  :wait <seconds>                      advance the scene clock
  :ssg                                 print the scene graph
  :save <path>                         export the scene file
  :transcript <path>                   write the transcript
  :quit                                leave";

/// Reads lines from `input` until EOF or `:quit`, printing every utterance.
pub fn run_repl(session: &mut Session, input: impl BufRead, mut out: impl Write) -> io::Result<()> {
    let utterances = session.subscribe();
    writeln!(out, "{} ({} objects). Type :help for commands.", session.scene().name, session.scene().objects().len())?;
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let result = match line.strip_prefix(':') {
            Some(meta) => match meta_command(session, meta) {
                Ok(Some(text)) => {
                    if !text.is_empty() {
                        writeln!(out, "{text}")?;
                    }
                    Ok(())
                }
                Ok(None) => break,
                Err(e) => Err(e),
            },
            None => session.handle_user_input(line).map(|_| ()).map_err(|e| e.to_string()),
        };
        for event in utterances.try_iter() {
            match event.kind {
                UtteranceKind::ErrorNotice => writeln!(out, "error: {}", event.text)?,
                _ => writeln!(out, "{}", event.text)?,
            }
        }
        if let Err(e) = result {
            writeln!(out, "error: {e}")?;
        }
        out.flush()?;
    }
    Ok(())
}

/// Returns the text to print, or None to quit. Verification is printed
/// through the utterance stream.
fn meta_command(session: &mut Session, meta: &str) -> Result<Option<String>, String> {
    let mut parts = meta.split_whitespace();
    let name = parts.next().unwrap_or_default();
    let arg = parts.next();
    let text = match name {
        "quit" | "q" => return Ok(None),
        "help" => HELP.to_string(),
        "ssg" => session.ssg_text(),
        "verify" => {
            session.verify_last().map_err(|e| e.to_string())?;
            String::new()
        }
        "undo" => describe_delta(&session.undo().map_err(|e| e.to_string())?),
        "nav" => {
            let kind: NavKind = arg.ok_or("usage: :nav <direction> [amount]")?.parse()?;
            let cmd = match parts.next() {
                None => NavCommand::new(kind),
                Some(m) => {
                    let m: f64 = m.parse().map_err(|_| format!("not a number: {m}"))?;
                    NavCommand::with_magnitude(kind, m).ok_or("amount must be positive")?
                }
            };
            let delta = session.navigate(cmd);
            if delta.is_empty() {
                "The view does not tilt.".to_string()
            } else {
                describe_delta(&delta)
            }
        }
        "wait" => {
            let secs: f64 = arg
                .ok_or("usage: :wait <seconds>")?
                .parse()
                .map_err(|_| "not a number".to_string())?;
            match session.tick(secs) {
                Some(delta) if !delta.removed.is_empty() => describe_delta(&delta),
                Some(_) => format!("Clock is at {} seconds.", session.scene().clock()),
                None => return Err("seconds must be positive".into()),
            }
        }
        "save" => {
            let path = arg.ok_or("usage: :save <path>")?;
            save_scene(session.scene(), Path::new(path)).map_err(|e| e.to_string())?;
            format!("Saved to {path}.")
        }
        "transcript" => {
            let path = arg.ok_or("usage: :transcript <path>")?;
            let file = File::create(path).map_err(|e| e.to_string())?;
            session.transcript().write_jsonl(file).map_err(|e| e.to_string())?;
            format!("Wrote {} entries to {path}.", session.transcript().len())
        }
        other => return Err(format!("unknown command :{other}; try :help")),
    };
    Ok(Some(text))
}
