use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ebingeom"))
        .args(args)
        .env_remove("EBINGEOM_SEED")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

/// `d_E` from a CSV `dist` report.
fn csv_distance(out: &Output) -> f64 {
    assert_eq!(code(out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    stdout(out)
        .lines()
        .find_map(|l| l.strip_prefix("d_E,"))
        .expect("d_E row")
        .parse()
        .expect("number")
}

fn json_distance(a: &Path, b: &Path) -> f64 {
    let out = run(&["dist", p(a), p(b), "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).expect("json report");
    v["d_E"].as_f64().expect("d_E")
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).expect("write temp file");
    path
}

#[test]
fn dist_examples() {
    let (id, four, half) = (data("identity.json"), data("four.json"), data("half_four.json"));
    assert!((csv_distance(&run(&["dist", p(&id), p(&four)])) - 8f64.sqrt()).abs() < 1e-6);
    assert!((json_distance(&id, &four) - 8f64.sqrt()).abs() < 1e-12);
    assert_eq!(csv_distance(&run(&["dist", p(&id), p(&id)])), 0.0);
    assert!((json_distance(&id, &half) - 2.0).abs() < 1e-12);
}

#[test]
fn dist_report_carries_digest_and_contributions() {
    let (id, half) = (data("identity.json"), data("half_four.json"));
    let out = run(&["dist", p(&id), p(&half), "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["inputs_digest"].as_str().unwrap().len(), 64);
    assert_eq!(v["contributions"].as_array().unwrap().len(), 16);
    assert!((v["contribution_sum"].as_f64().unwrap() - 4.0).abs() < 1e-12);
    assert!(String::from_utf8_lossy(&out.stderr).contains("wall time"));
}

#[test]
fn dist_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let id = data("identity.json");
    let small = write(
        &dir,
        "small.json",
        r#"{"n":2,"grid":[2,2],"background":"euclidean","values":[[1,0,1],[1,0,1],"tip",[2,0,2]]}"#,
    );
    assert_eq!(code(&run(&["dist", p(&id), p(&small)])), 3);
    let junk = write(&dir, "junk.json", "{ not json");
    assert_eq!(code(&run(&["dist", p(&id), p(&junk)])), 2);
    assert_eq!(code(&run(&["dist", p(&id), "/nonexistent/field.json"])), 2);
    let wrong_len = write(&dir, "short.json", r#"{"n":2,"grid":[2,2],"background":"euclidean","values":[[1,0,1]]}"#);
    assert_eq!(code(&run(&["dist", p(&wrong_len), p(&wrong_len)])), 2);
}

fn values(text: &str) -> Vec<Value> {
    let v: Value = serde_json::from_str(text).expect("field json");
    v["values"].as_array().expect("values").clone()
}

#[test]
fn geodesic_examples_and_range() {
    let (id, four) = (data("identity.json"), data("four.json"));
    let mid = run(&["geodesic", p(&id), p(&four), "0.5"]);
    assert_eq!(code(&mid), 0);
    for v in values(&stdout(&mid)) {
        let e: Vec<f64> = v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert!((e[0] - 2.25).abs() < 1e-12 && e[1].abs() < 1e-12 && (e[2] - 2.25).abs() < 1e-12);
    }
    let start = run(&["geodesic", p(&id), p(&four), "0"]);
    assert_eq!(values(&stdout(&start)), values(&std::fs::read_to_string(&id).unwrap()));
    let end = run(&["geodesic", p(&id), p(&four), "1"]);
    assert_eq!(values(&stdout(&end)), values(&std::fs::read_to_string(&four).unwrap()));
    assert_eq!(code(&run(&["geodesic", p(&id), p(&four), "1.5"])), 4);
    assert_eq!(code(&run(&["geodesic", p(&id), p(&four), "-0.1"])), 4);
    assert_eq!(code(&run(&["geodesic", p(&id), p(&four), "half"])), 2);
}

#[test]
fn geodesic_round_trip_reproduces_fraction_of_distance() {
    let dir = tempfile::tempdir().unwrap();
    let (id, half) = (data("identity.json"), data("half_four.json"));
    let d = json_distance(&id, &half);
    for t in [0.2, 0.5, 0.9] {
        let out = run(&["geodesic", p(&id), p(&half), &t.to_string()]);
        let path = write(&dir, "mid.json", &stdout(&out));
        assert!((json_distance(&id, &path) - t * d).abs() < 1e-6);
        assert!((json_distance(&path, &half) - (1.0 - t) * d).abs() < 1e-6);
    }
}

#[test]
fn apply_preserves_distance() {
    let dir = tempfile::tempdir().unwrap();
    let (id, half, shear) = (data("identity.json"), data("half_four.json"), data("shear.json"));
    let apply = |f: &Path, name: &str| {
        let out = run(&["apply", p(f), p(&shear)]);
        assert_eq!(code(&out), 0);
        write(&dir, name, &stdout(&out))
    };
    let (id_moved, half_moved) = (apply(&id, "id.json"), apply(&half, "half.json"));
    assert!((json_distance(&id_moved, &half_moved) - json_distance(&id, &half)).abs() < 1e-12);
    // The pullback is not the identity map.
    assert!(json_distance(&half, &half_moved) > 0.1);
    let bad = write(&dir, "bad.json", r#"{"section":[{"A":[[2,0],[0,2]],"invert":false}]}"#);
    assert_eq!(code(&run(&["apply", p(&half), p(&bad)])), 2);
}

#[test]
fn invariant_suites() {
    let spd = run(&["invariants", "--suite", "spd", "--seed", "7"]);
    assert_eq!(code(&spd), 0, "{}", stdout(&spd));
    let all = run(&["invariants", "--suite", "all", "--seed", "7"]);
    assert_eq!(code(&all), 0, "{}", stdout(&all));
    let rows = stdout(&all).lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert!(rows >= 20, "{rows} checks");
    assert_eq!(code(&run(&["invariants", "--suite", "geometry"])), 2);
}

#[test]
fn invariant_reports_are_deterministic() {
    let a = run(&["invariants", "--suite", "fields", "--seed", "42", "--format", "json"]);
    let b = run(&["invariants", "--suite", "fields", "--seed", "42", "--format", "json"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_str(&stdout(&a)).unwrap();
    for c in v["checks"].as_array().unwrap() {
        assert!(c["value"].as_f64().unwrap().is_finite());
        assert!(c["tolerance"].as_f64().is_some());
    }
    let by_env = Command::new(env!("CARGO_BIN_EXE_ebingeom"))
        .args(["invariants", "--suite", "fields", "--format", "json"])
        .env("EBINGEOM_SEED", "42")
        .output()
        .unwrap();
    let strip = |o: &Output| -> Value {
        let mut v: Value = serde_json::from_str(&stdout(o)).unwrap();
        v.as_object_mut().unwrap().remove("command");
        v
    };
    assert_eq!(strip(&by_env), strip(&a));
}

fn csv_rows(out: &Output) -> Vec<Vec<String>> {
    stdout(out)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn converge_tables() {
    let constant = run(&["converge", "constant", "--levels", "3"]);
    assert_eq!(code(&constant), 0);
    let rows = csv_rows(&constant);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][2], "");
    for r in &rows[1..] {
        assert_eq!(r[2].parse::<f64>().unwrap(), 0.0);
    }
    let sin = run(&["converge", "sin", "--levels", "4"]);
    let rows = csv_rows(&sin);
    assert_eq!(rows.last().unwrap()[0], "128");
    let last: Vec<f64> = rows.last().unwrap().iter().skip(1).map(|x| x.parse().unwrap()).collect();
    assert!(last[1] / last[0] <= 1e-3);
    assert!(stdout(&sin).contains("deltas settling: yes"));
    assert_eq!(code(&run(&["converge", "sin", "--levels", "1"])), 4);
    assert_eq!(code(&run(&["converge", "cos"])), 2);
}

#[test]
fn demo_incomplete_matches_closed_form() {
    let out = run(&["demo-incomplete", "--steps", "12"]);
    assert_eq!(code(&out), 0);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 12);
    assert_eq!(rows[0][1], "2.82842712");
    let mut prev = f64::INFINITY;
    for (j, r) in rows.iter().enumerate() {
        let (d, closed): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!((d - closed).abs() <= 1e-8 * closed);
        assert!(d < prev);
        if j > 0 {
            let expected = (j as f64 / (j + 1) as f64).powf(0.5);
            assert!((r[3].parse::<f64>().unwrap() - expected).abs() < 1e-8);
        }
        prev = d;
    }
    let three = run(&["demo-incomplete", "--steps", "3", "--n", "3"]);
    let first: f64 = csv_rows(&three)[0][1].parse().unwrap();
    assert!((first - 4.0 / 3f64.sqrt()).abs() < 1e-8);
    assert_eq!(code(&run(&["demo-incomplete", "--steps", "1"])), 2);
}
