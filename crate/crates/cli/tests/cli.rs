use std::process::Command;

fn resbridge(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_resbridge")).args(args).output().unwrap()
}

#[test]
fn list_models_prints_the_catalog() {
    let out = resbridge(&["list-models"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["lv", "ge", "bd", "bd-lamperti"]);
}

#[test]
fn bad_input_is_a_json_error_with_nonzero_exit() {
    let out = resbridge(&["study", "--model", "sir"]);
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "config");
    let out = resbridge(&["study", "--model", "bd", "--T", "0.25", "--dt", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = resbridge(&["study", "--proposal", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(resbridge(&["--help"]).status.success());
}

#[test]
fn endpoints_and_paths_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = resbridge(&["endpoints", "--model", "bd", "--T", "0.2", "--M", "200", "--out", out_dir]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let labels: Vec<&str> = v["horizons"][0]["observations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["label"].as_str().unwrap())
        .collect();
    assert_eq!(labels, ["q05", "q50", "q95"]);
    let csv = std::fs::read_to_string(dir.path().join("endpoints.csv")).unwrap();
    assert_eq!(csv.lines().count(), 201);

    let out = resbridge(&["paths", "--model", "lv", "--T", "2", "--paths", "5", "--M", "200", "--out", out_dir]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("paths.csv")).unwrap();
    assert!(csv.starts_with("path_id,t,x1,x2,weight,alpha"));
    assert_eq!(csv.lines().count(), 1 + 5 * 21);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"model": "bd", "T": [0.2], "N": 500, "M": 200, "reps": 1, "proposal": ["mdb"]}"#).unwrap();
    let out = resbridge(&[
        "study",
        "--config",
        cfg.to_str().unwrap(),
        "--proposal",
        "rbbar-ode",
        "--obs",
        "q50",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("study.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("bd,rbbar-ode,0.2,0.01,q50,"));
    assert!(dir.path().join("study.metadata.json").exists());
}
