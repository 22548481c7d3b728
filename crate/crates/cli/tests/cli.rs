use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn run(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_nl2stl"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    if let Some(s) = stdin {
        child.stdin.take().unwrap().write_all(s.as_bytes()).unwrap();
    } else {
        drop(child.stdin.take());
    }
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data/fixtures")
        .join(name)
        .display()
        .to_string()
}

#[test]
fn synth_is_seeded() {
    let a = run(&["synth", "--n", "20", "--seed", "9", "--max-aps", "7"], None);
    let b = run(&["synth", "--n", "20", "--seed", "9", "--max-aps", "7"], None);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(stdout(&a).lines().count(), 20);
    let lit = run(&["synth", "--n", "1", "--list-literal"], None);
    assert!(stdout(&lit).starts_with('['));
}

#[test]
fn convert_text_and_json_lines() {
    let o = run(
        &["convert", "--from", "preorder-symbol", "--to", "inorder-word"],
        Some("['U[400,infinite]', '->', 'prop_3', 'prop_1', 'negation', 'prop_2']\n{\"stl\": \"F prop_1\", \"id\": 3}\n"),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines[0], "((prop_3 imply prop_1) until[400,infinite] negation prop_2)");
    let v: Value = serde_json::from_str(&lines[1]).unwrap();
    assert_eq!(v["stl"], "finally prop_1");
    assert_eq!(v["id"], 3);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["frobnicate"], None).status.code(), Some(1));
    assert_eq!(run(&["convert", "--from", "nope", "--to", "inorder-word", "x"], None).status.code(), Some(1));
    assert_eq!(run(&["stats", "--dataset", "/nonexistent/file.jsonl"], None).status.code(), Some(2));
    let bad = run(&["--json-errors", "convert", "--from", "inorder-word", "--to", "preorder-symbol", "(prop_1 and"], None);
    assert_eq!(bad.status.code(), Some(3));
    let err: Value = serde_json::from_str(String::from_utf8_lossy(&bad.stderr).lines().last().unwrap()).unwrap();
    assert_eq!(err["error"]["kind"], "parse");
    assert_eq!(err["error"]["code"], 3);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.jsonl");
    let live = Command::new(env!("CARGO_BIN_EXE_nl2stl"))
        .args(["gen", "--framework", "1", "--n", "1", "--backend", "live", "--out"])
        .arg(&out)
        .env_remove("OPENAI_API_KEY")
        .output()
        .unwrap();
    assert_eq!(live.status.code(), Some(4));
}

#[test]
fn lift_then_ground_restores_rows() {
    let table = std::fs::read_to_string(fixture("domain_pairs.jsonl")).unwrap();
    let gltl: String = table
        .lines()
        .filter(|l| l.contains("\"gltl\""))
        .map(|l| format!("{l}\n"))
        .collect();
    let lifted = run(&["lift", "--domain", "gltl"], Some(&gltl));
    assert!(lifted.status.success(), "{}", String::from_utf8_lossy(&lifted.stderr));
    for line in stdout(&lifted).lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert!(v["nl"].as_str().unwrap().contains("(prop_1)"));
        assert!(v["stl"].as_str().unwrap().contains("prop_1"));
    }
    let grounded = run(&["ground"], Some(&stdout(&lifted)));
    assert!(grounded.status.success(), "{}", String::from_utf8_lossy(&grounded.stderr));
    for (orig, back) in gltl.lines().zip(stdout(&grounded).lines()) {
        let o: Value = serde_json::from_str(orig).unwrap();
        let b: Value = serde_json::from_str(back).unwrap();
        assert_eq!(o["nl"], b["nl"]);
    }
}

#[test]
fn ingest_quarantines_and_stats_eval_consume() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.jsonl");
    std::fs::write(
        &input,
        "{\"nl\": \"go to the blue room .\", \"stl\": \"finally ( blue_room and finally yellow_room )\"}\n\
         {\"nl\": \"go to the blue room and then the green room .\", \"stl\": \"finally ( blue_room and finally green_room )\"}\n",
    )
    .unwrap();
    let out = dir.path().join("out.jsonl");
    let q = dir.path().join("q.jsonl");
    let o = run(
        &[
            "ingest", "--domain", "cw", "--input", input.to_str().unwrap(), "--out",
            out.to_str().unwrap(), "--quarantine", q.to_str().unwrap(),
        ],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(&q).unwrap().lines().count(), 1);
    let s = run(&["stats", "--dataset", out.to_str().unwrap(), "--output", "json"], None);
    let v: Value = serde_json::from_str(&stdout(&s)).unwrap();
    assert_eq!(v["records"], 1);

    let pred = dir.path().join("pred.txt");
    std::fs::write(&pred, "F & prop_1 F prop_2\n").unwrap();
    let csv = dir.path().join("acc.csv");
    let e = run(
        &[
            "eval", "--pred", pred.to_str().unwrap(), "--gold", out.to_str().unwrap(), "--output",
            "json", "--csv", csv.to_str().unwrap(),
        ],
        None,
    );
    assert!(e.status.success(), "{}", String::from_utf8_lossy(&e.stderr));
    let v: Value = serde_json::from_str(&stdout(&e)).unwrap();
    assert_eq!(v["accuracy"], 1.0);
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("ap_count,total,correct,accuracy"));
}

#[test]
fn eval_pairs_file_scores_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("p.jsonl");
    std::fs::write(
        &pairs,
        "{\"pred\": \"F prop_1\", \"gold\": \"F prop_1\"}\n{\"pred\": \"G prop_1\", \"gold\": \"F prop_1\"}\n{\"pred\": \"& &\", \"gold\": \"F prop_1\"}\n",
    )
    .unwrap();
    let e = run(&["eval", "--pairs", pairs.to_str().unwrap(), "--output", "json"], None);
    assert!(e.status.success());
    let v: Value = serde_json::from_str(&stdout(&e)).unwrap();
    assert_eq!(v["correct"], 1);
    assert_eq!(v["total"], 3);
}
