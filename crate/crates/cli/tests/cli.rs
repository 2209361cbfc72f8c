use std::process::{Command, Output};

use serde_json::Value;

fn rgroups(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rgroups")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn manifolds_lists_builtins() {
    let out = rgroups(&["manifolds"]);
    assert!(out.status.success());
    let v = json(&out);
    let names: Vec<&str> = v["manifolds"].as_array().unwrap().iter().map(|m| m["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"sphere") && names.contains(&"halfplane") && names.contains(&"euclidean2"));
}

#[test]
fn flat_verify_passes_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = rgroups(&["verify", "--manifold", "euclidean2", "--samples", "20", "--seed", "7", "--output", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let v: Value = serde_json::from_slice(&ta).unwrap();
    assert_eq!(v["pass"], Value::Bool(true));
    assert!(v.get("wall_time_s").is_none());
    assert_eq!(v["records"].as_array().unwrap().len(), 20 * v["summary"].as_array().unwrap().len());
}

#[test]
fn thread_count_does_not_change_the_report() {
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_rgroups"))
            .args(["verify", "--manifold", "sphere", "--samples", "3", "--seed", "2", "--only", "unit_laws,inverse"])
            .env("RGROUPS_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn failing_identity_exits_one() {
    let out = rgroups(&["verify", "--manifold", "sphere", "--samples", "2", "--only", "canonicity", "--tol", "canonicity=1e-30"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["pass"], Value::Bool(false));
}

#[test]
fn config_errors_exit_two() {
    assert_eq!(rgroups(&["verify", "--manifold", "klein_bottle"]).status.code(), Some(2));
    assert_eq!(rgroups(&["verify", "--manifold", "sphere", "--samples", "0"]).status.code(), Some(2));
    assert_eq!(rgroups(&["verify", "--manifold", "sphere", "--tol", "not_an_identity=1e-3"]).status.code(), Some(2));
    assert_eq!(rgroups(&["verify", "--manifold", "sphere", "--fd-step", "0.5"]).status.code(), Some(2));
}

#[test]
fn missing_metric_entry_exits_three_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.metric");
    std::fs::write(&p, "dim 2; coords a b; g[0][0] = 1; g[1][1] = 1;").unwrap();
    let out = rgroups(&["verify", "--manifold", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("g[1][0]"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("run.toml");
    std::fs::write(&p, "manifold = \"euclidean3\"\nseed = 4\nsamples = 50\nonly = [\"unit_laws\"]\n[tolerances]\nunit_laws = 1e-6\n")
        .unwrap();
    let out = rgroups(&["verify", "--config", p.to_str().unwrap(), "--samples", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["config"]["samples"], 2);
    assert_eq!(v["config"]["seed"], 4);
    assert_eq!(v["summary"][0]["tolerance"].as_f64(), Some(1e-6));
    assert_eq!(v["manifold"]["name"], "euclidean3");
}

#[test]
fn geodesic_distance_on_halfplane() {
    let out = rgroups(&["geodesic", "--manifold", "halfplane", "--from", "0,1", "--to", "1,1"]);
    assert!(out.status.success());
    let d = json(&out)["distance"].as_f64().unwrap();
    assert!((d - 1.5f64.acosh()).abs() < 1e-6, "{d}");
}

#[test]
fn geodesic_from_velocity() {
    let out = rgroups(&["geodesic", "--manifold", "halfplane", "--from", "0,1", "--velocity", "0,1", "--length", "1"]);
    assert!(out.status.success());
    let end = json(&out)["endpoint"][1].as_f64().unwrap();
    assert!((end - std::f64::consts::E).abs() < 1e-8);
}

#[test]
fn solver_failure_exits_four_with_reason() {
    let out = rgroups(&["geodesic", "--manifold", "sphere", "--from", "1,0", "--velocity", "1,0", "--length", "3"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(json(&out)["error"].as_str().is_some());
}

#[test]
fn holonomy_of_a_small_square() {
    let out = rgroups(&["holonomy", "--manifold", "sphere", "--at", "1.5708,0", "--dirs", "e1,e2", "--scale", "0.1"]);
    assert!(out.status.success());
    let a = json(&out)["angle"].as_f64().unwrap();
    assert!((a - 0.01).abs() < 1e-3, "{a}");
}

#[test]
fn flat_transport_is_trivial() {
    let out = rgroups(&["transport", "--manifold", "euclidean2", "--at", "0,0", "--t", "0.5,-0.2", "--vector", "0.3,0.4"]);
    assert!(out.status.success());
    let v = json(&out);
    for key in ["pi", "lambda"] {
        let w: Vec<f64> = v[key].as_array().unwrap().iter().map(|c| c.as_f64().unwrap()).collect();
        assert!((w[0] - 0.3).abs() < 1e-12 && (w[1] - 0.4).abs() < 1e-12, "{key}: {w:?}");
    }
}
