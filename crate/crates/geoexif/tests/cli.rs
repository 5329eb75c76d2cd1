use std::path::Path;
use std::process::{Command, Output};

fn geoexif(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geoexif")).args(args).env_remove("GEOEXIF_WORKSPACE").output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_scan_report() {
    let out = tempfile::tempdir().unwrap();
    let ws = tempfile::tempdir().unwrap();
    let g = geoexif(&["gen-fixtures", "--out", s(out.path()), "--spec", "case-study"]);
    assert!(g.status.success(), "{}", String::from_utf8_lossy(&g.stderr));
    assert!(out.path().join("manifest.json").exists());

    let corpus = out.path().join("corpus");
    let r = geoexif(&["scan", "--root", s(&corpus), "--workspace", s(ws.path()), "--offline"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = String::from_utf8(r.stdout).unwrap();
    assert!(text.starts_with("run "), "{text}");
    assert!(text.contains("geotagged=5") && text.contains("network_calls=0"), "{text}");

    let report = ws.path().join("r.json");
    let r = geoexif(&["report", "--workspace", s(ws.path()), "--filter", "device=AppleiPhone 5", "--format", "json", "--out", s(&report)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(doc["entries"].as_array().unwrap().len(), 3);
}

#[test]
fn errors_exit_nonzero() {
    let ws = tempfile::tempdir().unwrap();
    let r = geoexif(&["scan", "--root", "/definitely/not/here", "--workspace", s(ws.path())]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("error"));

    let root = tempfile::tempdir().unwrap();
    let inside = root.path().join("ws");
    let r = geoexif(&["scan", "--root", s(root.path()), "--workspace", s(&inside)]);
    assert!(!r.status.success());
    assert!(!inside.exists());

    let r = geoexif(&["scan", "--root", s(root.path()), "--workspace", s(ws.path()), "--offline", "--provider-url", "http://127.0.0.1:9"]);
    assert!(!r.status.success());

    let r = geoexif(&["report", "--workspace", s(ws.path())]);
    assert!(!r.status.success());
    let r = geoexif(&["gen-fixtures", "--out", s(ws.path()), "--spec", "no-such-preset"]);
    assert!(!r.status.success());
}

#[test]
fn workspace_from_environment() {
    let out = tempfile::tempdir().unwrap();
    let ws = tempfile::tempdir().unwrap();
    assert!(geoexif(&["gen-fixtures", "--out", s(out.path()), "--spec", "fig6"]).status.success());
    let r = Command::new(env!("CARGO_BIN_EXE_geoexif"))
        .args(["scan", "--root", s(&out.path().join("corpus"))])
        .env("GEOEXIF_WORKSPACE", ws.path())
        .output()
        .unwrap();
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(ws.path().join(geoexif::store::STORE_FILE).exists());
}
