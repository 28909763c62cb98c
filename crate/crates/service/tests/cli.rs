mod common;

use common::{dialogforge, fixture, golden_dir, stderr_code, tree};

fn s(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn parse_output_matches_pinned_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let out = dialogforge(&["parse", s(&fixture()), "--out", s(&run)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["bot"], "template_bot");
    let produced = tree(&run);
    for (rel, want) in tree(&golden_dir()) {
        assert_eq!(produced.get(&rel), Some(&want), "{rel}");
    }
}

#[test]
fn refusals_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    assert!(dialogforge(&["parse", s(&fixture()), "--out", s(&run)]).status.success());

    let again = dialogforge(&["parse", s(&fixture()), "--out", s(&run)]);
    assert_eq!(again.status.code(), Some(3));
    assert_eq!(stderr_code(&again), "output_exists");

    let gen = dialogforge(&["generate", "--out", s(&run)]);
    assert_eq!(gen.status.code(), Some(3));
    assert_eq!(stderr_code(&gen), "unrevised_map");
    assert!(!run.join("goals.jsonl").exists());

    let sim = dialogforge(&["simulate", "--out", s(&run)]);
    assert_eq!(sim.status.code(), Some(3));

    let forced = dialogforge(&["parse", s(&fixture()), "--out", s(&run), "--force"]);
    assert!(forced.status.success());
}

#[test]
fn invalid_input_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, br#"{"schema_version": 1, "name": "x", "dialogs": [], "intents": [], "entities": [], "success_dialogs": ["Nowhere"]}"#).unwrap();
    let out = dialogforge(&["parse", s(&bad), "--out", s(&tmp.path().join("run"))]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_code(&out), "validation_failed");

    std::fs::write(&bad, b"{ not json").unwrap();
    let out = dialogforge(&["parse", s(&bad), "--out", s(&tmp.path().join("run2"))]);
    assert_eq!(out.status.code(), Some(2));

    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, br#"{"parallelism": 0}"#).unwrap();
    let out = dialogforge(&["--config", s(&cfg), "parse", s(&fixture()), "--out", s(&tmp.path().join("run3"))]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_code(&out), "invalid_config");
}

#[test]
fn missing_earlier_stage_is_a_refusal() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dialogforge(&["remediate", "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_code(&out), "missing_artifact");
}

#[test]
fn full_run_writes_every_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, br#"{"bootstrap_iterations": 200, "per_intent_cap": 20}"#).unwrap();
    for args in [
        vec!["parse", s(&fixture()), "--out", s(&run)],
        vec!["revise", "--out", s(&run)],
        vec!["generate", "--out", s(&run)],
        vec!["simulate", "--out", s(&run)],
        vec!["remediate", "--out", s(&run)],
    ] {
        let mut full = vec!["--config", s(&cfg)];
        full.extend(args.iter().copied());
        let out = dialogforge(&full);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let episodes = std::fs::read_to_string(run.join("episodes.jsonl")).unwrap();
    assert_eq!(episodes.lines().count(), 120);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(run.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["summary"]["totals"]["episodes"], 120);
}
