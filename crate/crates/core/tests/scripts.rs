use std::sync::Arc;

use scenetalk_core::harness::{CorrectnessCode, ScriptBundle, run_task_scripts};

fn run(bundle: &ScriptBundle) -> scenetalk_core::harness::ScriptReport {
    run_task_scripts(&bundle.tasks, Arc::new(bundle.backend()))
}

#[test]
fn cat_park_tasks_pass() {
    let bundle = ScriptBundle::cat_park_tasks();
    assert_eq!(bundle.tasks.len(), 6);
    let report = run(&bundle);
    assert!(report.all_passed(), "{}", report.summary());
}

#[test]
fn demo_walkthrough_passes() {
    let bundle = ScriptBundle::demo_room_walkthrough();
    let report = run(&bundle);
    assert!(report.all_passed(), "{}", report.summary());
    let coded = report.coded();
    assert!(coded.iter().all(|c| c.correctness == CorrectnessCode::Success), "{coded:#?}");
}

#[test]
fn runs_are_deterministic() {
    let bundle = ScriptBundle::demo_room_walkthrough();
    let a = serde_json::to_string(&run(&bundle)).unwrap();
    let b = serde_json::to_string(&run(&bundle)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn bad_steps_are_rejected() {
    let text = r#"{"name":"x","scene":"demo-room","rules":[],"fallback":"",
        "tasks":[{"id":"1","title":"t","steps":[{"say":"hi","at":1.0}]}]}"#;
    assert!(ScriptBundle::from_json(text).is_err());
    let text = r#"{"name":"x","scene":"moon","rules":[],"fallback":"","tasks":[{"id":"1","title":"t","steps":[]}]}"#;
    assert!(ScriptBundle::from_json(text).is_err());
}

#[test]
fn wrong_reply_fails_its_check() {
    let mut bundle = ScriptBundle::cat_park_tasks();
    for r in &mut bundle.rules {
        let json = serde_json::to_string(&*r).unwrap().replace("#FFFF00", "#32CD32");
        *r = serde_json::from_str(&json).unwrap();
    }
    let report = run(&bundle);
    let bench = report.tasks.iter().find(|t| t.id == "2").unwrap();
    assert!(!bench.passed);
    assert!(report.summary().contains("task 2 FAIL"));
}
