use std::process::{Command, Output};

fn modal(args: &[&str], dir: &std::path::Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modal")).args(args).current_dir(dir).output().unwrap()
}

fn setup() -> tempfile::TempDir {
    let d = tempfile::tempdir().unwrap();
    let vals: String = (0..60).map(|i| format!("{}\n", ((i * 37) % 60) as f64 / 10.0 + if i % 3 == 0 { 8.0 } else { 0.0 })).collect();
    std::fs::write(d.path().join("data.csv"), format!("x\n{vals}")).unwrap();
    std::fs::write(d.path().join("bad.csv"), "1.0\n2.0\nfoo\n").unwrap();
    d
}

#[test]
fn hsm_prints_json() {
    let d = setup();
    let out = modal(&["mode", "--method", "hsm", "--input", "data.csv"], d.path());
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["method"], "robertson_cryer");
    assert!(v["location"].is_f64());
}

#[test]
fn unknown_flag_is_usage_error() {
    let d = setup();
    let out = modal(&["mode", "--input", "data.csv", "--frobnicate"], d.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(modal(&["mode", "--method", "nope", "--input", "data.csv"], d.path()).status.code(), Some(1));
    assert_eq!(modal(&["mode", "--method", "dv", "--input", "data.csv"], d.path()).status.code(), Some(1));
    assert_eq!(modal(&["mode", "--input", "data.csv", "--format", "svg"], d.path()).status.code(), Some(1));
}

#[test]
fn bad_data_is_data_error() {
    let d = setup();
    let out = modal(&["mode", "--method", "hsm", "--input", "bad.csv"], d.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 3") && err.contains("column 0"), "{err}");
    assert_eq!(modal(&["mode", "--method", "hsm", "--input", "missing.csv"], d.path()).status.code(), Some(2));
}

#[test]
fn out_directory_gets_all_artifacts() {
    let d = setup();
    let out = modal(&["cluster", "--input", "data.csv", "--out", "res"], d.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["cluster.json", "cluster.svg", "cluster.csv"] {
        assert!(d.path().join("res").join(f).is_file(), "{f}");
    }
    let csv = std::fs::read_to_string(d.path().join("res/cluster.csv")).unwrap();
    assert!(csv.starts_with("x1,label\n"));
    assert_eq!(csv.lines().count(), 61);
    // rerun into the same directory leaves the same bytes
    let first = std::fs::read(d.path().join("res/cluster.json")).unwrap();
    modal(&["cluster", "--input", "data.csv", "--out", "res"], d.path());
    assert_eq!(first, std::fs::read(d.path().join("res/cluster.json")).unwrap());

    let out = modal(&["sizer", "--input", "data.csv", "--format", "svg"], d.path());
    assert!(out.stdout.starts_with(b"<svg"));
    let out = modal(&["persist", "--input", "data.csv", "--out", "p", "--format", "json"], d.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(d.path().join("p/persist.json").is_file() && !d.path().join("p/persist.svg").exists());
}
