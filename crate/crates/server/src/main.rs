use std::io;
use std::process::ExitCode;

use clap::Parser;
use scenetalk_core::harness::tally;
use scenetalk_server::cli::{self, Cli, CliCommand};
use scenetalk_server::{Hub, commands, run_repl, serve};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("scenetalk: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        CliCommand::Repl(args) => {
            let mut session = cli::session(&args)?;
            run_repl(&mut session, io::stdin().lock(), io::stdout().lock()).map_err(|e| e.to_string())?;
        }
        CliCommand::Serve { session, listen } => {
            let session = cli::session(&session)?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(listen)
                    .await
                    .map_err(|e| format!("cannot listen on {listen}: {e}"))?;
                let (hub, _session) = Hub::spawn(session);
                eprintln!("scenetalk: listening on http://{listen}");
                serve(listener, hub).await.map_err(|e| e.to_string())
            })?;
        }
        CliCommand::Tasks {
            bundle,
            backend,
            cassette,
            out,
        } => {
            let bundle = cli::bundle(&bundle)?;
            let report = commands::run_tasks(&bundle, backend, cassette.as_deref(), out.as_deref())?;
            print!("{}", report.summary());
            print!("{}", tally(&report.coded()).summary());
            if !report.all_passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
        CliCommand::Tally { transcripts, csv } => {
            commands::run_tally(&transcripts, csv.as_deref(), io::stdout().lock())?;
        }
        CliCommand::Ssg { scene } => {
            let scene = cli::resolve_scene(&scene)?;
            println!(
                "{}",
                scenetalk_core::ssg::serialize_ssg(&scenetalk_core::ssg::build_ssg(&scene))
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}
