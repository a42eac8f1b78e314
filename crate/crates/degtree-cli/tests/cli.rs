use std::process::{Command, Output};

use serde_json::Value;

fn degtree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_degtree"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn encode_single_edge() {
    let o = degtree(&["encode", "--degrees", "1,0", "--code", "1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "1;0,1");
}

#[test]
fn encode_rejects_wrong_degrees() {
    let o = degtree(&["encode", "--degrees", "0,1", "--code", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn decode_inverts_encode() {
    let tree = "3;3,4,0,3,4,1,5,1,2";
    let code = stdout(&degtree(&["decode", "--tree", tree]));
    let back = degtree(&["encode", "--code", code.trim()]);
    assert_eq!(stdout(&back).trim(), tree);
}

#[test]
fn enumerate_counts_heights() {
    let o = degtree(&["enumerate", "--degrees", "2,2,0,0,0"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v, serde_json::json!({"2": "6"}));
}

#[test]
fn sampling_needs_a_seed() {
    let o = degtree(&["sample", "--degrees", "2,2,0,0,0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = degtree(&["sample", "--degrees", "2,2,0,0,0", "--entropy"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["seed"].is_u64());
}

#[test]
fn reports_are_reproducible() {
    let args = ["sample", "--offspring", r#"{"0": 0.5, "2": 0.5}"#, "--n", "21", "--samples", "50", "--seed", "9"];
    let a = stdout(&degtree(&args));
    let b = stdout(&degtree(&[&args[..], &["--workers", "2"]].concat()));
    assert_eq!(a, b);
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["schema"], "degtree.sample.v1");
    assert_eq!(v["seed"], 9);
    assert_eq!(v["trees"].as_array().unwrap().len(), 50);

    let csv = stdout(&degtree(&["tails", "--degrees", "2,2,2,0,0,0,0", "--samples", "200", "--seed", "4", "--format", "csv"]));
    assert!(csv.starts_with("# schema=degtree.tails.v1 seed=4 "));
    assert_eq!(csv.lines().nth(1), Some("x,exceed,survival,upper_ci"));
}

#[test]
fn dominance_exit_codes() {
    let o = degtree(&["dominance", "--larger", "2,2,2,0,0,0,0", "--smaller", "3,1,2,0,0,0,0"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["holds"], true);
    assert_eq!(v["strict"], true);
    let o = degtree(&["dominance", "--larger", "3,1,2,0,0,0,0", "--smaller", "2,2,2,0,0,0,0"]);
    assert_eq!(o.status.code(), Some(1));
    let o = degtree(&["dominance", "--larger", "2,2,0,0,0", "--move", "skew", "--i", "1", "--j", "2"]);
    assert!(o.status.success());
}

#[test]
fn attach_exact() {
    let o = degtree(&["attach", "--degrees", "2,2,2,0,0,0,0", "--x", "0", "--y", "2", "--b", "1", "--exact"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["holds"], true);
}

#[test]
fn transforms() {
    let o = degtree(&["transform", "sub-binary", "--degrees", "4,0,0,0,0", "--chain"]);
    assert_eq!(stdout(&o), "4,0,0,0,0\n2,2,0,0,0\n");
    let o = degtree(&["transform", "cover", "--degrees", "2,2,0,0,0", "--move", "skew", "--i", "1", "--j", "2"]);
    assert_eq!(stdout(&o).trim(), "3,1,0,0,0");
    let o = degtree(&["transform", "companion", "--degrees", "3,1,0,0,0"]);
    assert_eq!(stdout(&o).trim(), "2,2,1,0,0,0");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(degtree(&["nonsense"]).status.code(), Some(2));
    assert_eq!(degtree(&["enumerate", "--degrees", "3,0,0"]).status.code(), Some(2));
    assert_eq!(degtree(&["verify", "--only", "19"]).status.code(), Some(2));
}

#[test]
fn quick_verify_passes() {
    let o = degtree(&["verify", "--quick"]);
    let out = stdout(&o);
    assert!(o.status.success(), "{out}");
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count(), 18);
}
