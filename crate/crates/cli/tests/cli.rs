//! End-to-end tests of the command-line interface: the manifest pipeline,
//! exit codes, byte-stable re-runs and the query subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_specminer")
}

fn fixture_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/jaas-analog")
}

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("specminer-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn run_pipeline(ws: &Path) -> Output {
    let manifest = fixture_root().join("manifest.toml");
    run(&[
        "pipeline",
        manifest.to_str().unwrap(),
        "--workspace",
        ws.to_str().unwrap(),
    ])
}

#[test]
fn pipeline_produces_the_whole_workspace() {
    let ws = temp_dir("pipeline");
    let out = run_pipeline(&ws);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for file in [
        "fw.json",
        "ifd.json",
        "unsound.json",
        "fspec.json",
        "curve.csv",
    ] {
        assert!(ws.join(file).exists(), "missing {file}");
    }
    // one usage per program, one rejected
    assert_eq!(fs::read_dir(ws.join("usages")).unwrap().count(), 3);
    assert_eq!(fs::read_dir(ws.join("sound")).unwrap().count(), 2);
    assert_eq!(fs::read_dir(ws.join("graams")).unwrap().count(), 2);
    let unsound = fs::read_to_string(ws.join("unsound.json")).unwrap();
    assert!(unsound.contains("listing2-swapped"));
    assert!(unsound.contains("\"field\": \"subject\""));
    let curve = fs::read_to_string(ws.join("curve.csv")).unwrap();
    assert!(curve.starts_with("k,cum_graam_nodes,fspec_nodes,fspec_edges\n"));
    let _ = fs::remove_dir_all(&ws);
}

#[test]
fn pipeline_reruns_are_byte_identical() {
    let ws1 = temp_dir("rerun1");
    let ws2 = temp_dir("rerun2");
    assert!(run_pipeline(&ws1).status.success());
    assert!(run_pipeline(&ws2).status.success());
    for file in [
        "fw.json",
        "ifd.json",
        "fspec.json",
        "curve.csv",
        "unsound.json",
    ] {
        let a = fs::read(ws1.join(file)).unwrap();
        let b = fs::read(ws2.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs across reruns");
    }
    let _ = fs::remove_dir_all(&ws1);
    let _ = fs::remove_dir_all(&ws2);
}

#[test]
fn unknown_subcommand_exits_with_usage() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("Usage") || stderr.contains("usage"));
}

#[test]
fn missing_framework_dir_is_an_input_error() {
    let ws = temp_dir("badmanifest");
    let manifest = ws.join("manifest.toml");
    fs::write(
        &manifest,
        r#"
workspace = "out"

[framework]
name = "jaas"
dir = "no-such-dir"

[[program]]
name = "p"
dir = "also-missing"
"#,
    )
    .unwrap();
    let out = run(&["pipeline", manifest.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("no-such-dir"),
        "message names the path: {stderr}"
    );
    let _ = fs::remove_dir_all(&ws);
}

#[test]
fn parse_rejects_bad_sources_with_input_error() {
    let ws = temp_dir("badsrc");
    let prog = ws.join("prog");
    fs::create_dir_all(&prog).unwrap();
    fs::write(prog.join("bad.mini"), "class A {").unwrap();
    let out = run(&[
        "parse",
        prog.to_str().unwrap(),
        "--framework",
        fixture_root().join("framework").to_str().unwrap(),
        "--framework-name",
        "jaas",
        "-o",
        ws.join("facts.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let _ = fs::remove_dir_all(&ws);
}

#[test]
fn stepwise_commands_compose_like_the_pipeline() {
    let ws = temp_dir("stepwise");
    let fw_dir = fixture_root().join("framework");
    // parse
    let out = run(&[
        "parse",
        fixture_root().join("programs/listing1").to_str().unwrap(),
        "--framework",
        fw_dir.to_str().unwrap(),
        "--framework-name",
        "jaas",
        "--name",
        "listing1",
        "-o",
        ws.join("facts.json").to_str().unwrap(),
        "--framework-out",
        ws.join("fw.json").to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    // extract
    let out = run(&[
        "extract",
        ws.join("facts.json").to_str().unwrap(),
        "--framework",
        ws.join("fw.json").to_str().unwrap(),
        "-o",
        ws.join("usages").to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    // validate
    let out = run(&[
        "validate",
        ws.join("usages").to_str().unwrap(),
        "--framework",
        ws.join("fw.json").to_str().unwrap(),
        "-o",
        ws.join("sound").to_str().unwrap(),
        "--rejected",
        ws.join("unsound.json").to_str().unwrap(),
        "--ifd-out",
        ws.join("ifd.json").to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    // graam
    let out = run(&[
        "graam",
        ws.join("sound").to_str().unwrap(),
        "--ifd",
        ws.join("ifd.json").to_str().unwrap(),
        "-o",
        ws.join("graams").to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    // train
    let out = run(&[
        "train",
        ws.join("graams").to_str().unwrap(),
        "-o",
        ws.join("fspec.json").to_str().unwrap(),
        "--curve",
        ws.join("curve.csv").to_str().unwrap(),
        "--name",
        "jaas",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(ws.join("fspec.json").exists());
    let _ = fs::remove_dir_all(&ws);
}

#[test]
fn contradictory_dependency_model_is_an_analysis_error() {
    let ws = temp_dir("cycle");
    assert!(run_pipeline(&ws).status.success());
    // Forge a dependency model that demands both orders at once; building
    // the usage model then hits an order-constraint cycle.
    fs::write(
        ws.join("forged-ifd.json"),
        r#"{
  "framework": "jaas",
  "edges": [
    { "writer": "LoginContext.login", "reader": "LoginContext.getSubject",
      "field_owner": "LoginContext", "field": "subject" },
    { "writer": "LoginContext.getSubject", "reader": "LoginContext.login",
      "field_owner": "LoginContext", "field": "loginSucceeded" }
  ]
}
"#,
    )
    .unwrap();
    let out = run(&[
        "graam",
        ws.join("sound").to_str().unwrap(),
        "--ifd",
        ws.join("forged-ifd.json").to_str().unwrap(),
        "-o",
        ws.join("graams2").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("cycle"), "got: {stderr}");
    let _ = fs::remove_dir_all(&ws);
}

#[test]
fn recommend_suggests_login_for_the_partial_program() {
    let ws = temp_dir("recommend");
    assert!(run_pipeline(&ws).status.success());
    let out = run(&[
        "recommend",
        "--fspec",
        ws.join("fspec.json").to_str().unwrap(),
        "--program",
        fixture_root()
            .join("partial/partial.mini")
            .to_str()
            .unwrap(),
        "--framework",
        ws.join("fw.json").to_str().unwrap(),
        "--task",
        "next",
        "-k",
        "5",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    let rank1 = stdout.lines().nth(1).unwrap_or_default();
    assert!(rank1.contains("LoginContext.login()"), "got: {stdout}");

    // json format round-trips through a parser
    let out = run(&[
        "recommend",
        "--fspec",
        ws.join("fspec.json").to_str().unwrap(),
        "--program",
        fixture_root()
            .join("partial/partial.mini")
            .to_str()
            .unwrap(),
        "--framework",
        ws.join("fw.json").to_str().unwrap(),
        "--task",
        "next",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(parsed[0]["rank"], 1);
    let _ = fs::remove_dir_all(&ws);
}

#[test]
fn misuse_task_reports_the_swapped_fixture() {
    let ws = temp_dir("misuse");
    assert!(run_pipeline(&ws).status.success());
    let out = run(&[
        "recommend",
        "--fspec",
        ws.join("fspec.json").to_str().unwrap(),
        "--program",
        fixture_root()
            .join("programs/listing2-swapped")
            .to_str()
            .unwrap(),
        "--framework",
        ws.join("fw.json").to_str().unwrap(),
        "--task",
        "misuse",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("misuse:"), "got: {stdout}");
    assert!(stdout.contains("reorder"), "got: {stdout}");
    let _ = fs::remove_dir_all(&ws);
}

#[test]
fn eval_writes_a_report() {
    let ws = temp_dir("eval");
    assert!(run_pipeline(&ws).status.success());
    let out = run(&[
        "eval",
        "--corpus",
        ws.join("graams").to_str().unwrap(),
        "--framework",
        ws.join("fw.json").to_str().unwrap(),
        "--task",
        "next",
        "--seed",
        "1",
        "--split",
        "0.5",
        "-o",
        ws.join("report.csv").to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = fs::read_to_string(ws.join("report.csv")).unwrap();
    assert!(report.starts_with("task,k,accuracy,n_cases,seed\n"));
    assert!(report.lines().count() > 5);
    let _ = fs::remove_dir_all(&ws);
}
