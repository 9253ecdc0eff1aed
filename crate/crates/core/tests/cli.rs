use std::path::Path;
use std::process::{Command, Output};

fn resetlab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resetlab")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn list_shows_eight_presets() {
    let dir = tempfile::tempdir().unwrap();
    let o = resetlab(&["list"], dir.path());
    assert!(o.status.success());
    let lines: Vec<String> = stdout(&o).lines().map(str::to_owned).collect();
    assert_eq!(lines.len(), 8);
    assert!(lines[0].starts_with("fig2"));
}

#[test]
fn validate_accepts_printed_preset() {
    let dir = tempfile::tempdir().unwrap();
    let o = resetlab(&["preset", "fig7", "--print"], dir.path());
    assert!(o.status.success());
    let path = dir.path().join("fig7.json");
    std::fs::write(&path, stdout(&o)).unwrap();
    let v = resetlab(&["validate", path.to_str().unwrap()], dir.path());
    assert!(v.status.success(), "{}", stderr(&v));
}

#[test]
fn validate_rejects_bad_configs_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let negative = r#"{
  "model": {"kind": "aah", "jzz": 0.3, "jz": 0.1},
  "layout": {"n_s": -3, "n_b": 4},
  "t": 100.0
}"#;
    let path = dir.path().join("neg.json");
    std::fs::write(&path, negative).unwrap();
    let o = resetlab(&["validate", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("n_s"), "{err}");
    assert!(err.contains("line 3"), "{err}");

    let unknown = r#"{"model": {"kind": "aah", "jzz": 0.3, "jz": 0.1, "spin": 2},
 "layout": {"n_s": 3, "n_b": 4}, "t": 100.0}"#;
    std::fs::write(&path, unknown).unwrap();
    let o = resetlab(&["validate", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("spin"));

    let o = resetlab(&["validate", "missing.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = resetlab(&["preset", "fig1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn plots_on_empty_directory_fail() {
    let dir = tempfile::tempdir().unwrap();
    let o = resetlab(&["plots", dir.path().to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn preset_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let o = resetlab(&["preset", "fig3", "--out", run], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(dir.path().join(run));
    }
    for name in ["spectrum.csv", "histogram.csv", "spectral_stats.json"] {
        let a = std::fs::read(outputs[0].join(name)).unwrap();
        let b = std::fs::read(outputs[1].join(name)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{name} differs");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(outputs[0].join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);

    let o = resetlab(&["plots", outputs[0].to_str().unwrap()], dir.path());
    assert!(o.status.success());
    assert!(outputs[0].join("spectrum.gp").exists());
    assert!(outputs[0].join("histogram.gp").exists());
}

#[test]
fn overrides_change_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = resetlab(&["preset", "fig3", "--override", "layout.n_s=2", "--override", "model.jz=0.5", "--print"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["layout"]["n_s"], 2);
    assert_eq!(v["model"]["jz"], 0.5);
    let bad = resetlab(&["preset", "fig3", "--override", "layout.n_s=-1", "--print"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
}
