use std::sync::Arc;

use scenetalk_core::harness::ScriptBundle;
use scenetalk_core::scenefile::{BundledScene, load_scene};
use scenetalk_core::session::{Session, Transcript};
use scenetalk_server::run_repl;

fn repl(script: &str) -> (String, Session) {
    let bundle = ScriptBundle::demo_room_walkthrough();
    let mut session = Session::new(BundledScene::DemoRoom.load(), Arc::new(bundle.backend()));
    let mut out = Vec::new();
    run_repl(&mut session, script.as_bytes(), &mut out).unwrap();
    (String::from_utf8(out).unwrap(), session)
}

#[test]
fn plain_lines_run_the_pipeline() {
    let (out, session) = repl("What is the color of the cube?\n");
    assert!(out.contains("The cube is red."), "{out}");
    assert_eq!(session.transcript().len(), 1);
}

#[test]
fn ssg_prints_the_graph() {
    let (out, session) = repl(":ssg\n");
    assert!(out.contains(&session.ssg_text()));
}

#[test]
fn undo_reverts_and_confirms() {
    let initial = BundledScene::DemoRoom.load();
    let (out, session) = repl("Make the color of the cube the same as the sphere.\n:undo\n");
    assert!(out.contains("The last modification was undone."), "{out}");
    assert!(out.contains("Red Cube color changed from green to red."), "{out}");
    let cube = session.scene().by_name("Red Cube").unwrap();
    assert_eq!(cube.color, initial.by_name("Red Cube").unwrap().color);
}

#[test]
fn verify_nav_wait_and_errors() {
    let (out, _) = repl(
        ":verify\nMake the pitch of speaker one higher.\n:verify\n:nav f\n:nav pl 90\n:nav pu\n\
         Highlight the torch so I can find it.\n:wait 5\n:frobnicate\n:nav sideways\n",
    );
    assert!(out.contains("error: "), "{out}");
    assert!(out.contains("Speaker 1 pitch changed from 1 to 1.5."), "{out}");
    assert!(out.contains("You moved from (0, 0, 0) to (0, 0, 0.5)."), "{out}");
    assert!(out.contains("You turned from 0 to 270 degrees."), "{out}");
    assert!(out.contains("The view does not tilt."), "{out}");
    assert!(out.contains("was removed."), "{out}");
    assert!(out.contains("unknown command :frobnicate"), "{out}");
    assert!(out.contains("unknown navigation 'sideways'"), "{out}");
}

#[test]
fn quit_stops_reading() {
    let (_, session) = repl(":quit\nWhat is the color of the cube?\n");
    assert_eq!(session.transcript().len(), 0);
}

#[test]
fn save_and_transcript_export() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene.json");
    let log = dir.path().join("log.jsonl");
    let (out, session) = repl(&format!(
        "Mute all speakers\n:save {}\n:transcript {}\n",
        scene.display(),
        log.display()
    ));
    assert!(out.contains("Wrote 1 entries"), "{out}");
    let saved = load_scene(&scene).unwrap();
    assert_eq!(saved.objects(), session.scene().objects());
    let back = Transcript::read_jsonl(std::fs::File::open(&log).map(std::io::BufReader::new).unwrap()).unwrap();
    assert_eq!(&back, session.transcript());
}
