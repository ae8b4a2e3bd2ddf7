use std::path::PathBuf;
use std::process::{Command, Output};

use supnil::report::Report;

fn supnil(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_supnil")).args(args).output().unwrap()
}

fn scenario(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("supnil-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const SMALL: &str = r#"{
  "bundle": {"generators": [
    {"name": "t", "twist": 4}, {"name": "e1", "twist": -2}, {"name": "e2", "twist": -2}, {"name": "e3", "twist": -2}
  ]},
  "deformation": "z^-2*e1*e2*e3*d(t)"
}"#;

#[test]
fn analyze_writes_markdown_and_json() {
    let path = scenario("small.json", SMALL);
    let p = path.to_str().unwrap();
    let md = supnil(&["analyze", p]);
    assert_eq!(md.status.code(), Some(0), "{}", String::from_utf8_lossy(&md.stderr));
    let md_report = Report::from_markdown(&String::from_utf8(md.stdout).unwrap()).unwrap();

    let out = path.with_extension("out.json");
    let js = supnil(&["analyze", p, "--format", "json", "--report", out.to_str().unwrap()]);
    assert_eq!(js.status.code(), Some(0));
    assert!(js.stdout.is_empty());
    let js_report = Report::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(md_report, js_report);
    assert!(js_report.kernel.is_some() && js_report.splitness.is_some());

    // identical input, identical bytes
    let again = supnil(&["analyze", p, "--format", "json"]);
    assert_eq!(
        String::from_utf8(again.stdout).unwrap(),
        std::fs::read_to_string(&out).unwrap()
    );
}

#[test]
fn tables_and_kernel_commands() {
    let path = scenario("tables.json", SMALL);
    let p = path.to_str().unwrap();
    let t = supnil(&["tables", p, "--degree", "2"]);
    assert_eq!(t.status.code(), Some(0));
    let r = Report::from_markdown(&String::from_utf8(t.stdout).unwrap()).unwrap();
    assert_eq!(r.global_fields.len(), 1);
    assert_eq!(r.global_fields[0].degree, 2);
    assert!(r.kernel.is_none());

    let k = supnil(&["kernel", p, "--space", "q=1", "--parity", "all", "--format", "json"]);
    assert_eq!(k.status.code(), Some(0));
    let r = Report::from_json(&String::from_utf8(k.stdout).unwrap()).unwrap();
    let kernel = r.kernel.unwrap();
    assert_eq!(kernel.space, "q=1");
    assert!(r.lift.is_none());
}

#[test]
fn errors_exit_with_one() {
    let bad = scenario(
        "bad.json",
        r#"{"bundle": {"generators": [{"name": "a", "twist": 1}]}, "deformation": "b*d(a)"}"#,
    );
    let out = supnil(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown generator `b`"));

    let missing = supnil(&["analyze", "/nonexistent/scenario.json"]);
    assert_eq!(missing.status.code(), Some(1));

    let path = scenario("space.json", SMALL);
    let space = supnil(&["kernel", path.to_str().unwrap(), "--space", "q=x"]);
    assert_eq!(space.status.code(), Some(1));

    let degree = supnil(&["tables", path.to_str().unwrap(), "--degree", "9"]);
    assert_eq!(degree.status.code(), Some(1));
}
