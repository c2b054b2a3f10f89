use std::path::Path;
use std::process::{Command, Output};

use coevo::helloworld::fixtures;
use coevo::{json, History, Repository, Value};

fn coevo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coevo"))
        .args(args)
        .env_remove("COEVO_FIXTURES")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn list_ops_prints_seven_operations() {
    let out = coevo(&["list-ops"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.lines().any(|l| l.starts_with("ClassToAssociation(")));
}

#[test]
fn validate_exit_codes() {
    let out = coevo(&["validate", "--metamodel", "graph1", "--model", "g_a"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(out.stdout.is_empty() && out.stderr.is_empty());

    let out = coevo(&["validate", "--metamodel", "graph2", "--model", "g_a"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).lines().any(|l| l.starts_with("UNKNOWN_FEATURE")));

    let out = coevo(&["validate", "--metamodel", "/nonexistent/mm.json"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn fixture_directory_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_coevo"))
        .args(["validate", "--metamodel", "graph1"])
        .env("COEVO_FIXTURES", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
}

#[test]
fn apply_records_and_releases() {
    let dir = tempfile::tempdir().unwrap();
    let history = dir.path().join("h.json");
    assert_eq!(code(&coevo(&["create-history", "--metamodel", "graph1", "--out", p(&history)])), 0);
    assert_eq!(code(&coevo(&["apply", "--history", p(&history), "--release"])), 0);

    let out = coevo(&[
        "apply", "--history", p(&history), "--op", "ExtractSuperClass",
        "--arg", "subClasses=Node,Edge", "--arg", "superName=GraphComponent",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let before = std::fs::read_to_string(&history).unwrap();
    let h: History = json::from_str(&before).unwrap();
    assert_eq!(h.releases[1].changes.len(), 1);

    let out = coevo(&["apply", "--history", p(&history), "--op", "Rename", "--arg", "element=Node", "--arg", "newName=Edge"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("name-free"));
    assert_eq!(std::fs::read_to_string(&history).unwrap(), before);

    let out = coevo(&["apply", "--history", p(&history), "--op", "Rename", "--arg", "element=Node.name", "--arg", "newName=label", "--release"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let h: History = json::from_str(&std::fs::read_to_string(&history).unwrap()).unwrap();
    assert_eq!(h.releases.len(), 3);
    assert!(h.releases[1].released && !h.releases[2].released);
}

#[test]
fn migrate_writes_conforming_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("out.json");
    let out = coevo(&["migrate", "--history", "hist_simple", "--model", "g_a", "--from", "0", "--to", "1", "--out", p(&out_path)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let repo: Repository = json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(repo.check_conformance(&fixtures::graph_evolved()), vec![]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["finalRelease"], 1);
    assert_eq!(report["steps"].as_array().unwrap().len(), 5);

    let out = coevo(&["migrate", "--history", "hist_simple", "--model", "g_a", "--from", "1", "--to", "0", "--out", p(&out_path)]);
    assert_eq!(code(&out), 3);
}

#[test]
fn rolled_back_migration_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("out.json");
    let out = coevo(&[
        "migrate", "--history", "hist_simple", "--model", "g_a", "--from", "0", "--to", "1",
        "--out", p(&out_path), "--arg", "fromResource=nowhere",
    ]);
    assert_eq!(code(&out), 4);
    assert!(!out_path.exists());
    assert!(stderr(&out).contains("ROLLED_BACK"));
}

#[test]
fn nonconforming_model_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("out.json");
    let out = coevo(&["migrate", "--history", "hist_topology", "--model", "g_a", "--from", "1", "--to", "1", "--out", p(&out_path)]);
    assert_eq!(code(&out), 1);
    assert!(!out_path.exists());
}

#[test]
fn tasks_write_their_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("count.json");
    let out = coevo(&["task", "--task", "count-nodes", "--model", "g_a", "--out", p(&out_path)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let results: Repository = json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let root = &results.resource("result").unwrap().roots[0];
    assert_eq!(results.slot(root, "value"), Some(&Value::Int(4)));

    let text_path = dir.path().join("hello.txt");
    let out = coevo(&["task", "--task", "hello-text", "--out", p(&text_path)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(std::fs::read(&text_path).unwrap(), b"Hello World!\n");

    let out = coevo(&["task", "--task", "nope", "--out", p(&text_path)]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("insert-transitive-edges"));

    let out = coevo(&["task", "--task", "hello-text", "--out", "/nonexistent/dir/hello.txt"]);
    assert_eq!(code(&out), 3);
}
