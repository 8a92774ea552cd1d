//! the `hec` binary end to end.

use hec_cli::{parse_inputs, tensor_from_json, tensor_to_json};
use hec_core::lang::parse_and_run;
use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn hec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hec")).current_dir(root()).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn run_matches_the_interpreter() {
    let o = hec(&["run", "programs/distance-4x4.he", "--inputs", "programs/distance-4x4.json", "--slots", "4", "--epochs", "1"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let src = std::fs::read_to_string(root().join("programs/distance-4x4.he")).unwrap();
    let inputs = parse_inputs(&std::fs::read_to_string(root().join("programs/distance-4x4.json")).unwrap()).unwrap();
    assert_eq!(v["output"], tensor_to_json(&parse_and_run(&src, &inputs).unwrap()));
    assert_eq!(v["trace"]["rotations_cc"], 3);
    assert_eq!(v["trace"]["input_vectors"], 5);
    assert_eq!(v["trace"]["output_vectors"], 1);
}

#[test]
fn multiplied_index_variables_are_rejected() {
    let o = hec(&["compile", "crates/cli/tests/fixtures/bad.he"]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("parse error at 4:"), "{err}");
}

#[test]
fn slots_must_be_a_power_of_two() {
    let o = hec(&["run", "programs/distance-4x4.he", "--inputs", "programs/distance-4x4.json", "--slots", "3"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("not a power of two"));
}

#[test]
fn forced_schedule_and_dumps() {
    let dir = std::env::temp_dir().join(format!("hec-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let sched = dir.join("row.sched");
    let row = "{i1_0:0:4:1} [(1,4,1)]";
    std::fs::write(&sched, format!("0 = {row}\n1 = {row}\n2 = {row}\n3 = {row}\n")).unwrap();
    let o = hec(&["compile", "programs/distance-4x4.he", "--slots", "16", "--schedule", sched.to_str().unwrap(), "--dump", "schedule", "--dump", "vectors"]);
    let text = stdout(&o);
    assert!(text.contains("# schedule\n0 = {i1_0:0:4:1} [(1,4,1)]"), "{text}");
    assert!(text.contains("# vectors\n"), "{text}");
    let o = hec(&["run", "programs/distance-4x4.he", "--inputs", "programs/distance-4x4.json", "--slots", "16", "--schedule", sched.to_str().unwrap()]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["trace"]["rotations_cc"], 8);
    assert_eq!(v["trace"]["output_vectors"], 4);
}

#[test]
fn emit_uses_the_binding() {
    let text = stdout(&hec(&["emit", "programs/distance-4x4.he", "--slots", "4", "--binding", "programs/seal.cfg"]));
    assert!(text.contains("evaluator.rotate_rows(v_x_1, (-1 * i1_1))"), "{text}");
    let dir = std::env::temp_dir().join(format!("hec-emit-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let partial = dir.join("partial.cfg");
    std::fs::write(&partial, "add = f.add\n").unwrap();
    let o = hec(&["emit", "programs/distance-4x4.he", "--slots", "4", "--binding", partial.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unbound api name"));
}

#[test]
fn optimizer_budget_is_accepted() {
    let a = stdout(&hec(&["compile", "programs/conv-simo.he", "--slots", "256", "--opt-budget", "2000,5"]));
    let b = stdout(&hec(&["compile", "programs/conv-simo.he", "--slots", "256", "--opt", "0"]));
    assert_eq!(a.matches("mul(CP").count(), 1, "{a}");
    assert_eq!(b.matches("mul(CP").count(), 2, "{b}");
    assert!(!hec(&["compile", "programs/conv-simo.he", "--opt", "2"]).status.success());
    assert!(!hec(&["compile", "programs/conv-simo.he", "--opt-budget", "x"]).status.success());
}

#[test]
fn json_nests_round_trip() {
    let v: Value = serde_json::from_str("[[1, 2, 3], [4, 5, 6]]").unwrap();
    let t = tensor_from_json(&v).unwrap();
    assert_eq!(t.shape, vec![2, 3]);
    assert_eq!(tensor_to_json(&t), v);
    assert_eq!(tensor_from_json(&serde_json::json!(7)).unwrap().shape, Vec::<usize>::new());
    for bad in ["[[1, 2], [3]]", "[[1, 2], 3]", "[1.5]", "[]", "{\"a\": 1}"] {
        assert!(tensor_from_json(&serde_json::from_str(bad).unwrap()).is_err(), "{bad}");
    }
    assert!(parse_inputs("[1]").is_err());
}
