use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_plurilag"));
    c.env_remove("PLURILAG_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

fn without_runtime(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("runtime_ms");
    v
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, v.to_string()).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn verify_consistency_q1() {
    let o = run(&[
        "verify",
        "consistency",
        "--model",
        "q1d0",
        "--trials",
        "1000",
        "--seed",
        "42",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = stdout_json(&o);
    assert_eq!(r["suite"], "consistency");
    assert_eq!(r["trials"], 1000);
    assert_eq!(r["failures"], json!([]));
    assert!(r["max_residuals"]["unused_residual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn verify_closedness_exp() {
    let o = run(&[
        "verify",
        "closedness",
        "--model",
        "exp",
        "--trials",
        "500",
        "--seed",
        "7",
        "--jobs",
        "4",
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout_json(&o)["max_residuals"]["action"].as_f64().unwrap() < 1e-8);
}

#[test]
fn perturbed_closedness_exits_two() {
    let o = run(&[
        "verify",
        "closedness",
        "--trials",
        "20",
        "--perturb",
        "1e-3",
    ]);
    assert_eq!(code(&o), 2);
    assert!(stdout_json(&o)["failure_count"].as_u64().unwrap() > 0);
}

#[test]
fn model_without_lagrangian_is_a_usage_error() {
    let o = run(&["verify", "consistency", "--model", "h1"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("h1"));
    assert_eq!(code(&run(&["verify", "nonsense"])), 1);
    assert_eq!(code(&run(&["verify", "quad", "--model", "q2"])), 1);
    assert_eq!(code(&run(&["verify", "quad", "--seed", "-3"])), 1);
    assert_eq!(code(&run(&["verify", "quad", "--tol", "nothing=1"])), 1);
}

#[test]
fn reports_are_reproducible_and_seed_falls_back_to_env() {
    let args = ["verify", "octahedron", "--model", "exp", "--trials", "50"];
    let a = run(&[&args[..], &["--seed", "9"]].concat());
    let b = bin().args(args).env("PLURILAG_SEED", "9").output().unwrap();
    let c = run(&[&args[..], &["--seed", "9", "--jobs", "3"]].concat());
    let d = run(&[&args[..], &["--seed", "10"]].concat());
    let [a, b, c, d] = [a, b, c, d].map(|o| without_runtime(stdout_json(&o)));
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_ne!(a, d);
    assert_eq!(a["seed"], 9);
}

#[test]
fn out_file_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let o = run(&[
        "verify",
        "flower",
        "--model",
        "exp",
        "--trials",
        "4",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "trial,resamples,decomposition,toda");
    assert_eq!(lines.len(), 5);
}

#[test]
fn propagate_h1_random_box() {
    let o = run(&[
        "propagate",
        "--model",
        "h1",
        "--box",
        "4,4,4",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = stdout_json(&o);
    assert!(r["max_spread"].as_f64().unwrap() < 1e-10);
    assert_eq!(r["cubes"], 64);
    assert_eq!(r["fields"].as_array().unwrap().len(), 125);
}

#[test]
fn propagate_single_cube_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(
        dir.path(),
        "cube.json",
        &json!({"origin": 0.0, "axes": [[1.0], [1.5], [2.2]]}),
    );
    let o = run(&[
        "propagate",
        "--model",
        "q1d0",
        "--box",
        "1,1,1",
        "--data",
        &data,
    ]);
    assert_eq!(code(&o), 0);
    let r = stdout_json(&o);
    assert_eq!(r["cubes"], 1);
    let fields = r["fields"].as_array().unwrap();
    assert_eq!(fields.len(), 8);
    assert_eq!(fields[0], json!({"at": [0, 0, 0], "x": 0.0}));
}

#[test]
fn malformed_data_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{\"origin\": 0.0,\n \"axes\": [[1.0], oops]}").unwrap();
    let o = run(&["propagate", "--data", p.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2"), "{err}");
}

fn single_square(dir: &Path) -> (String, String) {
    let s = write(
        dir,
        "s.json",
        &json!({"m": 2, "squares": [{"base": [0, 0], "dirs": [1, 2]}]}),
    );
    let f = write(
        dir,
        "f.json",
        &json!({"m": 2, "values": [
            {"at": [0, 0], "x": 0.0}, {"at": [1, 0], "x": 1.0},
            {"at": [1, 1], "x": 3.0}, {"at": [0, 1], "x": 2.0}
        ]}),
    );
    (s, f)
}

#[test]
fn action_of_single_square() {
    let dir = tempfile::tempdir().unwrap();
    let (s, f) = single_square(dir.path());
    let o = run(&["action", "--model", "q1d0", "--surface", &s, "--fields", &f]);
    assert_eq!(code(&o), 0);
    let a = stdout_json(&o)["action"].as_f64().unwrap();
    assert!((a + 2.0 * 2f64.ln()).abs() < 1e-15);
    assert!((a + 1.386294).abs() < 1e-6);
    let o = run(&["action", "--model", "zero", "--surface", &s, "--fields", &f]);
    assert_eq!(stdout_json(&o)["action"], 0.0);
}

#[test]
fn action_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (s, _) = single_square(dir.path());
    let f = write(
        dir.path(),
        "g.json",
        &json!({"m": 2, "values": [{"at": [0, 0], "x": 0.0}]}),
    );
    let o = run(&["action", "--surface", &s, "--fields", &f]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("(1,0)"));
    let bad = write(
        dir.path(),
        "t.json",
        &json!({"m": 2, "squares": [{"base": [0, 0], "dirs": [1, 2]}, {"base": [0, 0], "dirs": [1, 1]}]}),
    );
    let o = run(&["action", "--surface", &bad, "--fields", &f]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("square 1"));
}

#[test]
fn flips_on_a_quad_solution_keep_the_action() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "propagate",
        "--model",
        "q1d0",
        "--box",
        "3,3,3",
        "--seed",
        "4",
    ]);
    assert_eq!(code(&o), 0);
    let sol = stdout_json(&o);
    let fields = write(
        dir.path(),
        "f.json",
        &json!({"m": 3, "values": sol["fields"]}),
    );
    let mut squares = Vec::new();
    for a in 0..3 {
        for b in 0..3 {
            squares.push(json!({"base": [a, b, 0], "dirs": [1, 2]}));
            squares.push(json!({"base": [0, a, b], "dirs": [2, 3]}));
            squares.push(json!({"base": [b, 0, a], "dirs": [3, 1]}));
        }
    }
    let surface = write(dir.path(), "s.json", &json!({"m": 3, "squares": squares}));
    let o = run(&[
        "action",
        "--model",
        "q1d0",
        "--surface",
        &surface,
        "--fields",
        &fields,
        "--flip",
        "10",
        "--seed",
        "3",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = stdout_json(&o);
    let flips = r["flips"].as_array().unwrap();
    assert_eq!(flips.len(), 10);
    for f in flips {
        assert!(f["delta"].as_f64().unwrap().abs() < 1e-8, "{f}");
    }
}
