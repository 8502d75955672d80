use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use sha2::{Digest, Sha256};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn mcgraph(args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_mcgraph"))
        .args(args)
        .output()
        .expect("binary runs");
    out.status.code().expect("exit code")
}

fn run(sub: &str, file: &str, out: &Path, extra: &[&str]) -> i32 {
    let sc = scenario(file);
    let mut args = vec![sub, "--scenario", sc.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    mcgraph(&args)
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn analyze_hyperbolic_disc_holds() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("analyze", "hyperbolic_disc.toml", dir.path(), &[]), 0);
    let r = report(dir.path());
    assert_eq!(r["verdict"]["kind"], "strong-serrin-holds");
    let src = std::fs::read(scenario("hyperbolic_disc.toml")).unwrap();
    assert_eq!(r["scenario"]["hash"], hex::encode(Sha256::digest(&src)));
}

#[test]
fn manifest_hashes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("analyze", "disc_violating.toml", dir.path(), &[]), 0);
    let m: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    let listed: Vec<&str> = m["artifacts"].as_array().unwrap().iter().map(|e| e["path"].as_str().unwrap()).collect();
    let mut on_disk: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != "manifest.json")
        .collect();
    on_disk.sort();
    assert_eq!(listed, on_disk);
    for e in m["artifacts"].as_array().unwrap() {
        let bytes = std::fs::read(dir.path().join(e["path"].as_str().unwrap())).unwrap();
        assert_eq!(e["sha256"], hex::encode(Sha256::digest(&bytes)));
    }
    let r = report(dir.path());
    assert_eq!(r["verdict"]["kind"], "violated-at");
    assert!(r["height_bound"]["eps_of_a"].as_f64().unwrap() > 0.0);
}

#[test]
fn annulus_barrier_w_is_a_supersolution() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("verify-barriers", "annulus_minimal.toml", dir.path(), &[]), 0);
    let r = report(dir.path());
    assert!(r["max_Q_w"].as_f64().unwrap() < 0.0);
    assert!(r["max_Q_v"].as_f64().unwrap() < 0.0);
    // the violation sits on the inner circle
    let y0 = &r["barriers"]["y0"];
    assert!((y0[0].as_f64().unwrap().hypot(y0[1].as_f64().unwrap()) - 0.5).abs() < 1e-9);
}

#[test]
fn solve_reproduces_the_cap_and_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(run("solve", "disc_cap.toml", a.path(), &[]), 0);
    assert_eq!(run("solve", "disc_cap.toml", b.path(), &[]), 0);
    for f in ["manifest.json", "solution.csv", "report.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let csv = std::fs::read_to_string(a.path().join("solution.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("vertex,x,y,value"));
    let big_r: f64 = 2.5;
    let mut err: f64 = 0.0;
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let r2 = f[1] * f[1] + f[2] * f[2];
        let exact = (big_r * big_r - 1.0).sqrt() - (big_r * big_r - r2).sqrt();
        err = err.max((f[3] - exact).abs());
    }
    assert!(err < 1e-3, "max error {err}");
}

#[test]
fn expression_scenario_solves() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("solve", "dumbbell_expression.toml", dir.path(), &[]), 0);
    assert_eq!(report(dir.path())["solve"]["converged"], true);
}

#[test]
fn unreachable_tolerance_is_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("solve", "disc_cap.toml", dir.path(), &["--tol", "1e-300"]), 3);
    assert!(dir.path().join("last_iterate.csv").exists());
    assert_eq!(report(dir.path())["status"], "solver-non-convergence");
}

#[test]
fn demo_refuses_when_the_condition_holds() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("demo-nonexistence", "hyperbolic_disc.toml", dir.path(), &[]), 2);
}

#[test]
fn invalid_scenarios_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(
        &bad,
        "[domain]\nkind = \"circle\"\nradius = 1.0\n[h]\nkind = \"expression\"\nexpr = \"0.5 - z\"\nz_range = [-1.0, 1.0]\nsign = \"mixed\"\nmonotone = true\n[experiment]\nkind = \"analyze\"\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let code = mcgraph(&["analyze", "--scenario", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2);
    let missing = dir.path().join("missing.toml");
    assert_eq!(
        mcgraph(&["analyze", "--scenario", missing.to_str().unwrap(), "--out", out.to_str().unwrap()]),
        2
    );
}

#[test]
fn batch_runs_each_scenario_in_its_own_directory() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (scenario("hyperbolic_disc.toml"), scenario("disc_cap.toml"));
    let code = mcgraph(&[
        "batch",
        "--scenario",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(report(&dir.path().join("hyperbolic_disc"))["experiment"], "analyze");
    assert_eq!(report(&dir.path().join("disc_cap"))["experiment"], "solve");
}

#[test]
fn seed_override_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("analyze", "dumbbell_expression.toml", dir.path(), &["--seed", "42"]), 0);
    assert_eq!(report(dir.path())["scenario"]["seed"], 42);
}
