use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_diffvote"));
    cmd.env_remove("DIFFVOTE_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn write_matrix(dir: &Path, name: &str, regime: &str, m: usize, scale: Option<&str>) -> PathBuf {
    let path = dir.join(name);
    let m = m.to_string();
    let mut args = vec!["generate", "--regime", regime, "--m", &m, "--out"];
    let p = path.to_str().unwrap();
    args.push(p);
    if let Some(s) = scale {
        args.extend(["--scale", s]);
    }
    let out = run(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    path
}

fn optimize_json(args: &[&str]) -> Value {
    let out = run(&[&["optimize"], args].concat());
    assert!(out.status.success(), "{}", stderr(&out));
    serde_json::from_str(&stdout(&out)).unwrap()
}

#[test]
fn generate_cyclic_triangle() {
    let out = run(&["generate", "--regime", "cyclic", "--m", "3"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let eta = &v["eta"];
    for (a, b) in [(0, 1), (1, 2), (2, 0)] {
        assert_eq!(eta[a][b].as_f64(), Some(0.75));
        assert_eq!(eta[b][a].as_f64(), Some(0.25));
    }
}

#[test]
fn generate_oracles_name_the_condorcet_winner() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("t.json");
    let out = run(&[
        "generate",
        "--regime",
        "transitive",
        "--m",
        "5",
        "--oracles",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("condorcet_winner: 0"), "{text}");
    assert!(text.contains("kemeny_optimum: (0, 1, 2, 3, 4)"), "{text}");
}

#[test]
fn generate_reads_config_and_flags_override_it() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("g.json");
    std::fs::write(&cfg, r#"{"regime": "cyclic", "m": 4}"#).unwrap();
    let out = run(&["generate", "--config", cfg.to_str().unwrap(), "--m", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["m"], 3);
}

#[test]
fn generate_without_m_names_the_flag() {
    let out = run(&["generate", "--regime", "cyclic"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--m"), "{}", stderr(&out));
}

#[test]
fn btl_recovers_the_logit_on_two_items() {
    let dir = TempDir::new().unwrap();
    let matrix = write_matrix(dir.path(), "m2.json", "transitive", 2, Some("1"));
    let v = optimize_json(&[
        "--matrix",
        matrix.to_str().unwrap(),
        "--loss",
        "btl",
        "--tau",
        "1",
    ]);
    let r = v["result"]["final"].as_array().unwrap();
    let delta = r[0].as_f64().unwrap() - r[1].as_f64().unwrap();
    assert!((delta - 1.0).abs() < 1e-4, "{delta}");
    assert_eq!(v["ranking"], serde_json::json!([0, 1]));
}

#[test]
fn soft_kemeny_reaches_the_kemeny_ranking() {
    let dir = TempDir::new().unwrap();
    let matrix = write_matrix(dir.path(), "t5.json", "transitive", 5, None);
    let v = optimize_json(&[
        "--matrix",
        matrix.to_str().unwrap(),
        "--loss",
        "soft_kemeny",
        "--tau",
        "0.05",
    ]);
    assert_eq!(v["metrics"]["kendall_to_kemeny"], 0);
    assert_eq!(v["metrics"]["copeland_agreement"], true);
    assert_eq!(v["metrics"]["condorcet_status"], "satisfied");
}

#[test]
fn optimize_is_byte_reproducible() {
    let dir = TempDir::new().unwrap();
    let matrix = write_matrix(dir.path(), "c5.json", "cyclic", 5, None);
    let args = [
        "optimize",
        "--matrix",
        matrix.to_str().unwrap(),
        "--loss",
        "soft_copeland",
        "--tau",
        "1",
        "--beta",
        "4",
        "--lambda",
        "0.01",
        "--init",
        "gaussian",
        "--seed",
        "7",
        "--trajectory",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn seed_falls_back_to_the_environment() {
    let dir = TempDir::new().unwrap();
    let matrix = write_matrix(dir.path(), "c4.json", "cyclic", 4, None);
    let m = matrix.to_str().unwrap();
    let base = [
        "optimize", "--matrix", m, "--loss", "btl", "--tau", "1", "--init", "gaussian", "--steps",
        "1",
    ];
    let flag = run(&[&base[..], &["--seed", "42"]].concat());
    let env = bin()
        .args(base)
        .env("DIFFVOTE_SEED", "42")
        .output()
        .unwrap();
    let other = run(&[&base[..], &["--seed", "43"]].concat());
    assert!(flag.status.success() && env.status.success());
    assert_eq!(flag.stdout, env.stdout);
    assert_ne!(flag.stdout, other.stdout);
}

#[test]
fn unreadable_matrix_is_invalid_input() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"m": 2, "eta": [[0.5, 0.9], [0.9, 0.5]]}"#).unwrap();
    let out = run(&[
        "optimize",
        "--matrix",
        bad.to_str().unwrap(),
        "--loss",
        "btl",
        "--tau",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("bad.json"), "{}", stderr(&out));
}

#[test]
fn divergent_run_is_a_runtime_failure() {
    let dir = TempDir::new().unwrap();
    let matrix = write_matrix(dir.path(), "s5.json", "sharply_transitive", 5, None);
    let out = run(&[
        "optimize",
        "--matrix",
        matrix.to_str().unwrap(),
        "--loss",
        "exponential",
        "--lr",
        "1e300",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("non-finite"), "{}", stderr(&out));
}

#[test]
fn exp1_writes_the_record_header() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("exp1.csv");
    let out = run(&[
        "experiment",
        "exp1",
        "--seeds",
        "1",
        "--steps",
        "20",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "loss,tau,beta,lambda,regime,m,seed,copeland_agreement,kendall_to_kemeny,\
         condorcet_status,expected_disagreement"
    );
    assert!(
        !stdout(&out).is_empty(),
        "summary table goes to stdout with --out"
    );
}

#[test]
fn exp2_btl_violates_condorcet_at_the_split_weight() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("exp2.csv");
    let cfg = dir.path().join("exp2.json");
    std::fs::write(&cfg, r#"{"weights": [0.65]}"#).unwrap();
    let out = run(&[
        "experiment",
        "exp2",
        "--config",
        cfg.to_str().unwrap(),
        "--seeds",
        "2",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let mut reader = csv::Reader::from_path(&csv).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (loss, status, weight) = (col("loss"), col("condorcet_status"), col("weight"));
    let mut btl = 0;
    for row in reader.records() {
        let row = row.unwrap();
        assert_eq!(&row[weight], "0.65");
        if &row[loss] == "btl" {
            assert_eq!(&row[status], "violated");
            btl += 1;
        }
    }
    assert_eq!(btl, 2);
}

#[test]
fn exp3_emits_both_series_for_every_loss() {
    let out = run(&["experiment", "exp3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["loss", "tau", "beta", "series", "delta", "grad_magnitude"]
    );
    let mut seen = std::collections::BTreeSet::new();
    for row in reader.records() {
        let row = row.unwrap();
        seen.insert((row[0].to_string(), row[3].to_string()));
    }
    for family in [
        "btl",
        "soft_copeland",
        "soft_kemeny",
        "exponential",
        "hinge",
    ] {
        for series in ["converged", "profile"] {
            assert!(
                seen.contains(&(family.to_string(), series.to_string())),
                "{family} {series}"
            );
        }
    }
}

#[test]
fn experiment_output_does_not_depend_on_thread_count() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("g.json");
    std::fs::write(
        &cfg,
        r#"{"m_values": [5], "tau_grid": [1.0], "beta_grid": [4.0], "lambda_grid": [0.01]}"#,
    )
    .unwrap();
    let go = |threads: &str| {
        let out = run(&[
            "experiment",
            "exp1",
            "--config",
            cfg.to_str().unwrap(),
            "--seeds",
            "3",
            "--steps",
            "50",
            "--format",
            "json",
            "--threads",
            threads,
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        out.stdout
    };
    assert_eq!(go("1"), go("4"));
}

#[test]
fn check_passes_and_reports_injected_faults() {
    let ok = run(&["check"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(stdout(&ok).lines().all(|l| !l.starts_with("FAIL")));

    let bad = run(&["check", "--inject-fault", "soft_kemeny"]);
    assert_eq!(bad.status.code(), Some(1));
    let text = stdout(&bad);
    let fails: Vec<&str> = text.lines().filter(|l| l.starts_with("FAIL")).collect();
    assert_eq!(fails.len(), 1, "{text}");
    assert!(fails[0].contains("soft_kemeny"));

    let json = run(&["check", "--json"]);
    let v: Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(v["passed"], true);
    assert!(v["properties"].as_array().unwrap().len() > 20);
}
