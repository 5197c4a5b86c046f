//! Command-line arguments and the objects they select.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scenetalk_core::gateway::{ChatBackend, HttpBackend, ProviderConfig, RecordingBackend, ReplayBackend, ScriptedBackend};
use scenetalk_core::harness::ScriptBundle;
use scenetalk_core::prompt::{CLARIFICATION_TEMPLATE, Mode, ResponseEnvelope, render_envelope};
use scenetalk_core::scene::Scene;
use scenetalk_core::scenefile::{BundledScene, load_scene};
use scenetalk_core::session::Session;

#[derive(Debug, Parser)]
#[command(name = "scenetalk", version, about = "Talk to a 3D scene: ask about it and change it")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Line-based chat with a scene on the terminal.
    Repl(SessionArgs),
    /// Serve the session over HTTP and WebSocket.
    Serve {
        #[command(flatten)]
        session: SessionArgs,
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
    },
    /// Run a task script bundle and check its postconditions.
    Tasks {
        /// Bundled script (cat-park, demo-room) or a bundle file.
        #[arg(long, default_value = "cat-park")]
        bundle: String,
        /// Backend; scripted uses the bundle's own replies.
        #[arg(long, value_enum, default_value_t = BackendKind::Scripted)]
        backend: BackendKind,
        #[arg(long)]
        cassette: Option<PathBuf>,
        /// Directory for per-task transcripts and the JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Code transcript files and print outcome tallies.
    Tally {
        /// Transcript JSON-lines files.
        #[arg(required = true)]
        transcripts: Vec<PathBuf>,
        /// Write the per-category CSV here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print the scene graph the model would see.
    Ssg {
        #[arg(long, default_value = "demo-room")]
        scene: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    /// Live chat-completions API configured from the environment.
    Http,
    /// Canned replies matched on the user request.
    Scripted,
    /// Recorded replies from a cassette.
    Replay,
}

#[derive(Debug, Clone, Args)]
pub struct SessionArgs {
    /// Bundled scene (demo-room, cat-park, spaceship-room) or a scene file.
    #[arg(long, default_value = "demo-room")]
    pub scene: String,
    #[arg(long, value_enum, default_value_t = BackendKind::Http)]
    pub backend: BackendKind,
    /// Cassette to record to (http) or replay from (replay).
    #[arg(long)]
    pub cassette: Option<PathBuf>,
    /// Script bundle or rule file for the scripted backend.
    #[arg(long)]
    pub script: Option<PathBuf>,
    /// Conversation turns kept in the prompt.
    #[arg(long)]
    pub max_turns: Option<usize>,
}

pub fn resolve_scene(arg: &str) -> Result<Scene, String> {
    match arg.parse::<BundledScene>() {
        Ok(bundled) => Ok(bundled.load()),
        Err(_) => load_scene(Path::new(arg)).map_err(|e| e.to_string()),
    }
}

fn clarify_fallback() -> String {
    render_envelope(&ResponseEnvelope::new(Mode::Clarify, CLARIFICATION_TEMPLATE, None))
}

/// Rules for the scripted backend: a bundle or rule file, else the bundle
/// that matches the scene, else clarify everything.
fn scripted(script: Option<&Path>, scene: &str) -> Result<ScriptedBackend, String> {
    if let Some(path) = script {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        if let Ok(bundle) = ScriptBundle::from_json(&text) {
            return Ok(bundle.backend());
        }
        return ScriptedBackend::from_json(&text).map_err(|e| format!("{}: {e}", path.display()));
    }
    Ok(match scene.parse::<BundledScene>() {
        Ok(BundledScene::CatPark) => ScriptBundle::cat_park_tasks().backend(),
        Ok(BundledScene::DemoRoom) => ScriptBundle::demo_room_walkthrough().backend(),
        _ => ScriptedBackend::new(Vec::new(), clarify_fallback()),
    })
}

pub fn backend(
    kind: BackendKind,
    cassette: Option<&Path>,
    script: Option<&Path>,
    scene: &str,
) -> Result<Arc<dyn ChatBackend>, String> {
    Ok(match kind {
        BackendKind::Http => {
            let http = HttpBackend::new(ProviderConfig::from_env());
            match cassette {
                Some(path) => Arc::new(RecordingBackend::create(http, path).map_err(|e| e.to_string())?),
                None => Arc::new(http),
            }
        }
        BackendKind::Scripted => Arc::new(scripted(script, scene)?),
        BackendKind::Replay => {
            let path = cassette.ok_or("--backend replay needs --cassette")?;
            Arc::new(ReplayBackend::load(path).map_err(|e| e.to_string())?)
        }
    })
}

pub fn session(args: &SessionArgs) -> Result<Session, String> {
    let scene = resolve_scene(&args.scene)?;
    let backend = backend(args.backend, args.cassette.as_deref(), args.script.as_deref(), &args.scene)?;
    let mut session = Session::new(scene, backend);
    if let Some(n) = args.max_turns {
        session = session.with_max_turns(n);
    }
    Ok(session)
}

pub fn bundle(arg: &str) -> Result<ScriptBundle, String> {
    match arg {
        "cat-park" => Ok(ScriptBundle::cat_park_tasks()),
        "demo-room" => Ok(ScriptBundle::demo_room_walkthrough()),
        path => {
            let text = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
            ScriptBundle::from_json(&text).map_err(|e| format!("{path}: {e}"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "scenetalk",
            "serve",
            "--scene",
            "cat-park",
            "--backend",
            "scripted",
            "--listen",
            "0.0.0.0:9000",
            "--max-turns",
            "4",
        ])
        .unwrap();
        let CliCommand::Serve { session, listen } = cli.command else {
            panic!("expected serve");
        };
        assert_eq!(session.backend, BackendKind::Scripted);
        assert_eq!(session.max_turns, Some(4));
        assert_eq!(listen.port(), 9000);
        assert!(Cli::try_parse_from(["scenetalk", "repl", "--backend", "carrier-pigeon"]).is_err());
    }

    #[test]
    fn replay_needs_cassette() {
        assert!(backend(BackendKind::Replay, None, None, "demo-room").is_err());
        assert!(backend(BackendKind::Scripted, None, None, "spaceship-room").is_ok());
    }

    #[test]
    fn scenes_resolve() {
        assert!(resolve_scene("cat-park").is_ok());
        assert!(resolve_scene("/no/such/scene.json").is_err());
    }
}
