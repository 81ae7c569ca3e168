// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fcp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcp"))
        .args(args)
        .env_remove("FCP_SEED")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn steps(n: usize) -> String {
    (0..n)
        .map(|i| {
            let level = if i < n / 2 { 0.0 } else { 3.0 };
            let wiggle = ((i * 37 % 11) as f64 - 5.0) * 0.1;
            format!("{}\n", level + wiggle)
        })
        .collect()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(text.trim().lines().count(), 1, "stderr: {text}");
    serde_json::from_str(text.trim()).unwrap()
}

#[test]
fn version_flag() {
    let out = fcp(&["--version"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("fcp "));
}

#[test]
fn fit_fixed_lambda() {
    let dir = TempDir::new().unwrap();
    let y = write(&dir, "y.txt", "0\n2\n");
    let out_path = dir.path().join("fit.json");
    let out = fcp(&[
        "fit",
        "--model",
        "fl1d",
        "--lambda",
        "0.5",
        "--input",
        p(&y),
        "--output",
        p(&out_path),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let fit = read_json(&out_path);
    assert_eq!(fit["theta_hat"], serde_json::json!([0.5, 1.5]));
    assert_eq!(fit["changepoints"], serde_json::json!([1]));
    assert_eq!(fit["manifest"]["subcommand"], "fit");
    assert_eq!(
        fit["manifest"]["inputs"][0]["sha256"]
            .as_str()
            .unwrap()
            .len(),
        64
    );
}

#[test]
fn fit_other_models() {
    let dir = TempDir::new().unwrap();
    let y = write(&dir, "y.txt", &steps(30));
    let out_path = dir.path().join("tf.json");
    let out = fcp(&[
        "fit",
        "--model",
        "tf1",
        "--lambda",
        "1",
        "--input",
        p(&y),
        "--output",
        p(&out_path),
    ]);
    assert!(out.status.success());
    assert!(read_json(&out_path)["knots2"].is_array());

    let edges: String = (1..30).map(|i| format!("{i} {}\n", i + 1)).collect();
    let g = write(&dir, "edges.txt", &edges);
    let out_path = dir.path().join("gfl.json");
    let out = fcp(&[
        "fit",
        "--model",
        "gfl",
        "--graph",
        p(&g),
        "--lambda",
        "1",
        "--input",
        p(&y),
        "--output",
        p(&out_path),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(read_json(&out_path)["edge_changepoints"].is_array());
}

#[test]
fn missing_input_is_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = fcp(&[
        "fit",
        "--model",
        "fl1d",
        "--lambda",
        "1",
        "--input",
        "/nonexistent/y.txt",
        "--output",
        p(&dir.path().join("f.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "input");
}

#[test]
fn unknown_flag_is_exit_2() {
    let out = fcp(&["fit", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn iteration_cap_is_exit_3() {
    let dir = TempDir::new().unwrap();
    let y = write(&dir, "y.txt", &steps(40));
    let out = fcp(&[
        "fit",
        "--model",
        "tf1",
        "--lambda",
        "2.5",
        "--tol",
        "1e-15",
        "--max-iter",
        "3",
        "--input",
        p(&y),
        "--output",
        p(&dir.path().join("f.json")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"], "convergence");
}

#[test]
fn cv_fit_then_filter_with_auto_threshold() {
    let dir = TempDir::new().unwrap();
    let y = write(&dir, "y.txt", &steps(80));
    let fit_path = dir.path().join("fit.json");
    let out = fcp(&[
        "fit",
        "--model",
        "fl1d",
        "--cv",
        "k=5,grid=auto",
        "--input",
        p(&y),
        "--output",
        p(&fit_path),
    ]);
    assert!(out.status.success());
    assert_eq!(
        read_json(&fit_path)["cv"]["errors"]
            .as_array()
            .unwrap()
            .len(),
        50
    );

    let filt = dir.path().join("filtered.json");
    let out = fcp(&[
        "filter",
        "--input",
        p(&fit_path),
        "--signal",
        p(&y),
        "--bandwidth",
        "auto",
        "--tau",
        "auto",
        "--B",
        "10",
        "--seed",
        "3",
        "--output",
        p(&filt),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = read_json(&filt);
    let b = v["bandwidth"].as_u64().unwrap();
    let locations: Vec<u64> = serde_json::from_value(v["locations"].clone()).unwrap();
    assert!(locations.contains(&40));
    assert!(
        locations.iter().all(|&l| l.abs_diff(40) <= b),
        "{locations:?}"
    );
    assert_eq!(v["per_permutation_maxima"].as_array().unwrap().len(), 10);
    assert_eq!(v["manifest"]["seed"], 3);

    let fixed = dir.path().join("fixed.json");
    let out = fcp(&[
        "filter",
        "--input",
        p(&fit_path),
        "--bandwidth",
        "4",
        "--tau",
        "1",
        "--variant",
        "full",
        "--output",
        p(&fixed),
    ]);
    assert!(out.status.success());
    assert_eq!(read_json(&fixed)["variant"], "full");
}

#[test]
fn select_tau_seed_from_environment() {
    let dir = TempDir::new().unwrap();
    let y = write(&dir, "y.txt", &steps(60));
    let run = |name: &str, seed: Option<&str>| {
        let path = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_fcp"));
        cmd.args([
            "select-tau",
            "--input",
            p(&y),
            "--B",
            "8",
            "--q",
            "0.9",
            "--output",
            p(&path),
        ]);
        match seed {
            Some(s) => cmd.env("FCP_SEED", s),
            None => cmd.env_remove("FCP_SEED"),
        };
        assert!(cmd.output().unwrap().status.success());
        read_json(&path)
    };
    let a = run("a.json", Some("17"));
    assert_eq!(a["seed"], 17);
    assert_eq!(a["per_permutation_maxima"].as_array().unwrap().len(), 8);
    assert_eq!(run("b.json", None)["seed"], 0);
}

#[test]
fn interpolant_with_report() {
    let dir = TempDir::new().unwrap();
    let x = write(&dir, "x.txt", "3\n2\n1\n1\n2\n-1\n-4\n");
    let s0 = write(&dir, "s0.json", "[5]");
    let out_path = dir.path().join("z.json");
    let out = fcp(&[
        "interpolant",
        "--input",
        p(&x),
        "--changepoints",
        p(&s0),
        "--output",
        p(&out_path),
        "--verify",
    ]);
    assert!(out.status.success());
    let v = read_json(&out_path);
    assert_eq!(
        v["z"],
        serde_json::json!([3.0, 2.0, 1.0, 1.0, 2.0, -1.0, -4.0])
    );
    assert_eq!(v["report"]["z_norm"]["pass"], true);

    let bad = write(&dir, "bad.json", "[9]");
    let out = fcp(&[
        "interpolant",
        "--input",
        p(&x),
        "--changepoints",
        p(&bad),
        "--output",
        p(&out_path),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn metrics_on_index_and_edge_sets() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.json", "[10, 50]");
    let b = write(&dir, "b.json", "[12]");
    let out = fcp(&["metrics", "--dist", "hausdorff", "--a", p(&a), "--b", p(&b)]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["value"], 38);

    let empty = write(&dir, "empty.json", "[]");
    let out = fcp(&[
        "metrics",
        "--dist",
        "screen",
        "--a",
        p(&empty),
        "--b",
        p(&b),
    ]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["value"], "inf");

    let g = write(&dir, "g.txt", "1 2\n2 3\n3 4\n4 5\n");
    let ea = write(&dir, "ea.json", "[[1, 2]]");
    let eb = write(&dir, "eb.json", "[[4, 5]]");
    let out = fcp(&[
        "metrics",
        "--dist",
        "dg",
        "--graph",
        p(&g),
        "--a",
        p(&ea),
        "--b",
        p(&eb),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["value"], 2);
}

#[test]
fn simulate_is_byte_identical_and_replayable() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("r1.csv");
    let second = dir.path().join("r2.csv");
    for (path, jobs) in [(&first, "1"), (&second, "2")] {
        let out = fcp(&[
            "--jobs",
            jobs,
            "simulate",
            "--experiment",
            "haus-vs-n",
            "--trials",
            "2",
            "--seed",
            "1",
            "--grid",
            "100",
            "--permutations",
            "5",
            "--out",
            p(path),
            "--emit-plots-data",
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let bytes = std::fs::read(&first).unwrap();
    assert_eq!(bytes, std::fs::read(&second).unwrap());
    let header = String::from_utf8(bytes.clone()).unwrap();
    assert!(header.starts_with("experiment,axis,value,n,trials,b,"));
    assert_eq!(
        std::fs::read(dir.path().join("r1.trials.csv")).unwrap(),
        std::fs::read(dir.path().join("r2.trials.csv")).unwrap()
    );

    let manifest = dir.path().join("r1.manifest.json");
    assert_eq!(read_json(&manifest)["seed"], 1);
    let replayed = dir.path().join("replayed.csv");
    let out = fcp(&[
        "replay",
        "--manifest",
        p(&manifest),
        "--output",
        p(&replayed),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(std::fs::read(&replayed).unwrap(), bytes);
}

#[test]
fn replay_of_embedded_manifest_and_changed_input() {
    let dir = TempDir::new().unwrap();
    let y = write(&dir, "y.txt", &steps(40));
    let fit_path = dir.path().join("fit.json");
    let out = fcp(&[
        "fit",
        "--model",
        "fl1d",
        "--lambda",
        "2",
        "--input",
        p(&y),
        "--output",
        p(&fit_path),
    ]);
    assert!(out.status.success());
    let again = dir.path().join("again.json");
    let out = fcp(&["replay", "--manifest", p(&fit_path), "--output", p(&again)]);
    assert!(out.status.success());
    let (a, b) = (read_json(&fit_path), read_json(&again));
    assert_eq!(a["theta_hat"], b["theta_hat"]);
    assert_eq!(a["manifest"]["inputs"], b["manifest"]["inputs"]);

    std::fs::write(&y, "1\n2\n3\n").unwrap();
    let out = fcp(&["replay", "--manifest", p(&fit_path), "--output", p(&again)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_json(&out)["message"]
        .as_str()
        .unwrap()
        .contains("digest"));
}
