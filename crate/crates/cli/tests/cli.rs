use std::path::PathBuf;
use std::process::{Command, Output};

fn maxcsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxcsp")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("maxcsp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn classify_named_predicates() {
    let out = maxcsp(&["classify", "xor3"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["flags"]["pi_support"], true);
    assert_eq!(v["flags"]["useless_under_ugc"], true);
    assert!(v.get("separator").is_none());

    let v = json(&maxcsp(&["classify", "glst"]));
    assert_eq!(v["flags"]["pi_support"], false);
    assert_eq!(v["separator"]["margin"], 1.0);
}

#[test]
fn classify_text_format_and_resistance() {
    let mu = scratch("glst.mu", "+++- 1/4\n--+- 1/4\n-+-+ 1/4\n+--+ 1/4\n");
    let out = maxcsp(&["classify", "glst+", "--resistance", mu.to_str().unwrap(), "--format", "text"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("resistance.pass: true"));
    assert!(text.lines().all(|l| l.contains(": ")));
}

#[test]
fn census_small_arity() {
    let v = json(&maxcsp(&["census", "2"]));
    assert_eq!(v["total"], 16);
    assert_eq!(v["accepts_all"], 1);
    assert!(v["pi_feasible"].as_u64() <= v["upc_feasible"].as_u64());
}

#[test]
fn exit_codes() {
    assert_eq!(maxcsp(&["census", "7"]).status.code(), Some(2));
    assert_eq!(maxcsp(&["classify", "nonsense"]).status.code(), Some(2));
    assert_eq!(maxcsp(&["solve", "glst", "/nonexistent/file"]).status.code(), Some(2));
    assert_eq!(maxcsp(&["bogus-subcommand"]).status.code(), Some(2));
    let bad = scratch("bad.inst", "maxcsp 2 3 1\n1 1\n");
    assert_eq!(maxcsp(&["bruteforce", "eq2", bad.to_str().unwrap()]).status.code(), Some(2));
    // a pairwise independent predicate has no separator to solve with
    let inst = scratch("xor.inst", "maxcsp 3 4 1\n1 2 3\n");
    assert_eq!(maxcsp(&["solve", "xor3", inst.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn separate_both_settings() {
    let v = json(&maxcsp(&["separate", "neq2", "--no-negations"]));
    assert_eq!(v["separable"], true);
    assert_eq!(v["positive_separator"]["terms"][0]["coefficient"], "-1");
    let v = json(&maxcsp(&["separate", "eq2", "--no-negations"]));
    assert_eq!(v["separable"], false);
    let v = json(&maxcsp(&["separate", "glst", "--method", "min-norm"]));
    assert_eq!(v["separable"], true);
}

#[test]
fn generate_then_solve_and_bruteforce() {
    let out = maxcsp(&["gen", "neq2", "--n", "14", "--m", "50", "--no-negations", "--seed", "4"]);
    assert!(out.status.success());
    let path = scratch("neq.inst", &stdout(&out));
    let bf = json(&maxcsp(&["bruteforce", "neq2", path.to_str().unwrap()]));
    assert_eq!(bf["value"], 1.0);
    let v = json(&maxcsp(&["solve", "neq2", path.to_str().unwrap(), "--no-negations", "--trials", "20"]));
    let value = v["value"].as_f64().unwrap();
    assert!(value <= 1.0 + 1e-12 && value > v["baseline"].as_f64().unwrap());

    let first = stdout(&maxcsp(&["gen", "glst", "--n", "30", "--m", "100", "--eps", "0.1", "--seed", "9"]));
    let again = stdout(&maxcsp(&["gen", "glst", "--n", "30", "--m", "100", "--eps", "0.1", "--seed", "9"]));
    assert_eq!(first, again);
    assert!(first.starts_with("# planted "));
}

#[test]
fn solve_is_reproducible() {
    let inst = stdout(&maxcsp(&["gen", "glst", "--n", "20", "--m", "300", "--eps", "0.05", "--seed", "2"]));
    let path = scratch("glst.inst", &inst);
    let a = stdout(&maxcsp(&["solve", "glst", path.to_str().unwrap(), "--seed", "5"]));
    let b = stdout(&maxcsp(&["solve", "glst", path.to_str().unwrap(), "--seed", "5"]));
    assert_eq!(a, b);
}

#[test]
fn dictatorship_test_runs() {
    let v = json(&maxcsp(&["dict-test", "xor3", "--eps", "0.05", "--samples", "50000"]));
    let est = v["estimate"].as_f64().unwrap();
    assert!(est >= 0.95 - v["ci"].as_f64().unwrap());
    let out = maxcsp(&["dict-test", "glst", "--function", "wobble"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn quadsign_and_gadgets() {
    let v = json(&maxcsp(&["verify-quadsign"]));
    assert_eq!(v["pass"], true);
    let v = json(&maxcsp(&["it-gadgets"]));
    assert_eq!(v[0]["objectives"][0][1], 1.0);
    assert_eq!(v[0]["objectives"][1][1], 0.5);
    assert_eq!(v[1]["objectives"][1][1].as_f64().unwrap(), 2.0 / 3.0);
}
