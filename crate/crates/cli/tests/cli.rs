use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn emfplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emfplan")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = emfplan(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn gen_small(dir: &Path, seed: u64) -> String {
    let s = path(dir, "s.json");
    ok(&["gen", "--preset", "small", "--seed", &seed.to_string(), "-o", &s]);
    s
}

fn metric(dir: &Path, name: &str) -> f64 {
    let text = fs::read_to_string(dir.join("metrics.csv")).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{name},")))
        .unwrap_or_else(|| panic!("no {name} in metrics.csv"))
        .parse()
        .unwrap()
}

#[test]
fn gen_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    gen_small(a.path(), 11);
    gen_small(b.path(), 11);
    for f in ["s.json", "s.baseline.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
    }
    assert!(a.path().join("s.manifest.json").exists());
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let out = emfplan(&["gen", "--pixel-size", "0", "-o", &path(dir.path(), "x.json")]);
    assert_eq!(out.status.code(), Some(64));
    let s = gen_small(dir.path(), 0);
    let out = emfplan(&["sweep", "-s", &s, "--axis", "bogus", "--values", "1", "-o", &path(dir.path(), "sw")]);
    assert_eq!(out.status.code(), Some(64));
    // two-dimensional axis without its second list
    let out = emfplan(&["sweep", "-s", &s, "--axis", "alpha", "--values", "1", "-o", &path(dir.path(), "sw")]);
    assert_eq!(out.status.code(), Some(64));
    let out = emfplan(&["plan", "-s", &s, "--algo", "ea", "-o", &path(dir.path(), "p")]);
    assert_eq!(out.status.code(), Some(64));
    assert_eq!(emfplan(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_input_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = emfplan(&["plan", "-s", &path(dir.path(), "none.json"), "-o", &path(dir.path(), "p")]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn plan_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let s = gen_small(dir.path(), 2);
    let out_dir = path(dir.path(), "plan");
    ok(&["plan", "-s", &s, "--seed", "2", "-o", &out_dir]);
    for f in [
        "result.json",
        "metrics.csv",
        "solution.txt",
        "field_heatmap.csv",
        "throughput_heatmap.csv",
        "throughput_cdf.csv",
        "manifest.json",
    ] {
        assert!(dir.path().join("plan").join(f).exists(), "{f}");
    }
    ok(&["verify", "-s", &s, "--result", &path(dir.path(), "plan/result.json")]);
    let report = path(dir.path(), "report.json");
    ok(&["verify", "-s", &s, "--solution", &path(dir.path(), "plan/solution.txt"), "--report", &report]);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["families"].as_array().unwrap().len(), 15);
}

#[test]
fn corrupted_solution_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let s = gen_small(dir.path(), 2);
    ok(&["plan", "-s", &s, "--seed", "2", "-o", &path(dir.path(), "plan")]);
    let sol = dir.path().join("plan/solution.txt");
    let mut text = fs::read_to_string(&sol).unwrap();
    // serve every pixel of the 280 m square from one micro gNB; the far corner is beyond its reach
    let y = text.lines().find(|l| l.starts_with("y_l") && l.contains("_f0")).unwrap().to_string();
    let site_band = y.split_whitespace().next().unwrap().trim_start_matches("y_");
    for p in 0..196 {
        text.push_str(&format!("x_p{p}_{site_band} 1\n"));
    }
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, text).unwrap();
    let out = emfplan(&["verify", "-s", &s, "--solution", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let violated = stdout.lines().find(|l| l.starts_with("violated:")).unwrap();
    assert!(violated.contains("coverage"), "{stdout}");
}

#[test]
fn exhaustive_never_loses_to_platea() {
    let dir = tempfile::tempdir().unwrap();
    let s = gen_small(dir.path(), 5);
    ok(&["plan", "-s", &s, "--seed", "5", "-o", &path(dir.path(), "p")]);
    ok(&["plan", "-s", &s, "--algo", "exhaustive", "-o", &path(dir.path(), "x")]);
    assert!(metric(&dir.path().join("x"), "objective") <= metric(&dir.path().join("p"), "objective"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("x/result.json")).unwrap()).unwrap();
    assert_eq!(json["search"]["complete"], true);
}

#[test]
fn ea_on_full_scale_costs() {
    let dir = tempfile::tempdir().unwrap();
    let s = path(dir.path(), "tmc.json");
    ok(&["gen", "--seed", "0", "-o", &s]);
    let out =
        emfplan(&["plan", "-s", &s, "--algo", "ea", "--num-f1", "11", "--num-f2", "3", "-o", &path(dir.path(), "ea")]);
    match out.status.code() {
        Some(0) => assert_eq!(metric(&dir.path().join("ea"), "C_TOT"), 391_395.0),
        Some(2) => assert_eq!(metric(&dir.path().join("ea"), "feasible"), 0.0),
        other => panic!("unexpected exit {other:?}: {}", String::from_utf8_lossy(&out.stderr)),
    }
}

#[test]
fn reuse_sweep_lowers_throughput() {
    let dir = tempfile::tempdir().unwrap();
    let s = gen_small(dir.path(), 1);
    let out = path(dir.path(), "sw");
    ok(&["sweep", "-s", &s, "--axis", "reuse", "--values", "1,3,7", "--seeds", "0,1", "-o", &out]);
    let mut rdr = csv::Reader::from_path(dir.path().join("sw/sweep_summary.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (metric_col, mean_col) = (col("metric"), col("mean"));
    let t: Vec<f64> = rdr
        .records()
        .map(|r| r.unwrap())
        .filter(|r| &r[metric_col] == "T_AVG")
        .map(|r| r[mean_col].parse().unwrap())
        .collect();
    assert_eq!(t.len(), 3);
    assert!(t[0] > t[1] && t[1] > t[2], "{t:?}");
}

#[test]
fn config_file_fills_unset_options() {
    let dir = tempfile::tempdir().unwrap();
    let s = gen_small(dir.path(), 3);
    let cfg = path(dir.path(), "cfg.json");
    fs::write(&cfg, r#"{"alpha-f1": 1000, "seed": 9}"#).unwrap();
    ok(&["--config", &cfg, "plan", "-s", &s, "--seed", "4", "-o", &path(dir.path(), "p")]);
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("p/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["invocation"]["seed"], 4);
    assert_eq!(m["invocation"]["alpha_f1"], 1000.0);

    fs::write(&cfg, r#"{"no-such-option": 1}"#).unwrap();
    let out = emfplan(&["--config", &cfg, "plan", "-s", &s, "-o", &path(dir.path(), "q")]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn export_lp_writes_model() {
    let dir = tempfile::tempdir().unwrap();
    let s = gen_small(dir.path(), 0);
    let lp = path(dir.path(), "m.lp");
    ok(&["export-lp", "-s", &s, "-o", &lp]);
    let text = fs::read_to_string(&lp).unwrap();
    assert!(text.starts_with("\\") || text.starts_with("Minimize"));
    assert!(text.trim_end().ends_with("End"));
    assert!(dir.path().join("m.manifest.json").exists());
}
