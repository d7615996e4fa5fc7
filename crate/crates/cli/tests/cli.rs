use std::path::Path;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("ctxldp").chain(args.iter().copied());
    let code = ctxldp_cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn config() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs/smoke.json")
        .to_string_lossy()
        .into_owned()
}

#[test]
fn audit_reports_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ch = dir.path().join("q.json");
    let mat = dir.path().join("e.json");
    let (code, q, _) = run(&[
        "channel",
        "--kind",
        "warner",
        "--eps",
        "1",
        "--matrix-out",
        mat.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    std::fs::write(&ch, q).unwrap();
    let (code, body, _) = run(&[
        "audit",
        "--channel",
        ch.to_str().unwrap(),
        "--eps-matrix",
        mat.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["report"]["ok"], true);

    // A tighter budget than the channel attains fails the audit.
    std::fs::write(&mat, r#"{"k": 2, "eps": [[0, 0.5], [0.5, 0]]}"#).unwrap();
    let (code, _, _) = run(&[
        "audit",
        "--channel",
        ch.to_str().unwrap(),
        "--eps-matrix",
        mat.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);

    std::fs::write(&mat, "not json").unwrap();
    let (code, _, err) = run(&[
        "audit",
        "--channel",
        ch.to_str().unwrap(),
        "--eps-matrix",
        mat.to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["bogus"]).0, 2);
    assert_eq!(run(&["geo", "--m1", "0"]).0, 2);
    assert_eq!(run(&["geo", "--m1", "5,25", "--m2", "7"]).0, 2);
    assert_eq!(run(&["channel", "--kind", "hl", "--eps", "1"]).0, 2);
    assert_eq!(run(&["synth", "--config", "/no/such/file.json"]).0, 2);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn synth_echoes_config_and_honors_seed() {
    let (code, csv, _) = run(&["synth", "--config", &config()]);
    assert_eq!(code, 0);
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# config: "));
    assert!(lines
        .next()
        .unwrap()
        .starts_with("model,k,s_or_m,eps,n,rep,tv,l2sq,seed"));
    assert_eq!(lines.count(), 3 * 2);
    let (_, other, _) = run(&["synth", "--config", &config(), "--seed", "99"]);
    assert_ne!(csv, other);

    let (code, json, _) = run(&["synth", "--config", &config(), "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 6);
    assert_eq!(v["summary"].as_array().unwrap().len(), 6);
}

#[test]
fn synth_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rows.csv");
    let (code, _, _) = run(&["synth", "--config", &config(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("# config: "));
    assert!(dir.path().join("rows.csv.summary.json").exists());
}

#[test]
fn lowerbound_flags_infeasible_packing() {
    let (code, body, _) = run(&[
        "lowerbound",
        "--model",
        "hl",
        "--k",
        "12",
        "--s",
        "2",
        "--alpha",
        "0.1",
        "--eps",
        "1",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["ok"], true);
    let (code, _, err) = run(&[
        "lowerbound",
        "--model",
        "hl",
        "--k",
        "12",
        "--s",
        "2",
        "--alpha",
        "5",
        "--eps",
        "1",
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("infeasible"), "{err}");
}

#[test]
fn geo_baseline_first() {
    let (code, body, _) = run(&["geo", "--reps", "1", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&body).unwrap();
    let summary = v["summary"].as_array().unwrap();
    assert_eq!(summary[0]["setting"], "ldp");
    assert_eq!(summary[0]["blocks"], 1);
    assert_eq!(v["config"]["grid"]["k"], 43_750);
}
