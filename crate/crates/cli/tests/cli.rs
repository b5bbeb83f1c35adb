use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qot"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn atoms(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    fs::write(&a, "x1,w\n0.0,1.0\n").unwrap();
    fs::write(&b, "x1,w\n1.0,1.0\n").unwrap();
    (a, b)
}

#[test]
fn solve_single_atoms() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = atoms(dir.path());
    let out = dir.path().join("out");
    let o = qot(&[
        "solve",
        "--p",
        s(&a),
        "--q",
        s(&b),
        "--epsilon",
        "1",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["cost"].as_f64().unwrap(), 1.0);
    assert_eq!(summary["fill_ratio"].as_f64().unwrap(), 1.0);
    assert_eq!(summary["format_version"], 1);
    let pot = fs::read_to_string(out.join("potentials.csv")).unwrap();
    assert!(pot.starts_with("# format_version: 1\nside,index,value\n"));
    assert!(out.join("coupling.csv").exists());
}

#[test]
fn warm_start_from_own_output_needs_no_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.csv");
    let q = dir.path().join("q.csv");
    for (path, seed) in [(&p, "3"), (&q, "4")] {
        let o = qot(&[
            "sample",
            "--lower",
            "0,0",
            "--upper",
            "1,1",
            "--n",
            "60",
            "--seed",
            seed,
            "--out",
            s(path),
        ]);
        assert_eq!(code(&o), 0);
    }
    let first = dir.path().join("first");
    let o = qot(&[
        "solve",
        "--p",
        s(&p),
        "--q",
        s(&q),
        "--epsilon",
        "0.1",
        "--tol",
        "1e-9",
        "--out",
        s(&first),
    ]);
    assert_eq!(code(&o), 0);
    assert!(
        json(&first.join("summary.json"))["iterations"]
            .as_u64()
            .unwrap()
            > 0
    );
    let second = dir.path().join("second");
    let warm = first.join("potentials.csv");
    let o = qot(&[
        "solve",
        "--p",
        s(&p),
        "--q",
        s(&q),
        "--epsilon",
        "0.1",
        "--tol",
        "1e-9",
        "--warm-start",
        s(&warm),
        "--out",
        s(&second),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&second.join("summary.json"))["iterations"], 0);
}

#[test]
fn malformed_input_leaves_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (_, b) = atoms(dir.path());
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "x1,w\n0.0,abc\n").unwrap();
    let out = dir.path().join("out");
    let o = qot(&[
        "solve",
        "--p",
        s(&bad),
        "--q",
        s(&b),
        "--epsilon",
        "1",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 1);
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
    assert!(!out.exists());
    let o = qot(&[
        "solve",
        "--p",
        s(&b),
        "--q",
        s(&b),
        "--epsilon",
        "-1",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 1);
    assert!(!out.exists());
}

#[test]
fn budget_exhaustion_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.csv");
    let o = qot(&[
        "sample",
        "--lower",
        "0",
        "--upper",
        "1",
        "--n",
        "80",
        "--seed",
        "1",
        "--out",
        s(&p),
    ]);
    assert_eq!(code(&o), 0);
    let out = dir.path().join("out");
    let o = qot(&[
        "solve",
        "--p",
        s(&p),
        "--q",
        s(&p),
        "--epsilon",
        "0.01",
        "--max-sweeps",
        "1",
        "--tol",
        "1e-14",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 2);
    assert!(!out.exists());
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = atoms(dir.path());
    let cfg = dir.path().join("flags.json");
    fs::write(&cfg, r#"{"epsilon": 2.0}"#).unwrap();
    let out = dir.path().join("o1");
    let o = qot(&[
        "solve",
        "--p",
        s(&a),
        "--q",
        s(&b),
        "--config",
        s(&cfg),
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        json(&out.join("summary.json"))["epsilon"].as_f64().unwrap(),
        2.0
    );
    let out = dir.path().join("o2");
    let o = qot(&[
        "solve",
        "--p",
        s(&a),
        "--q",
        s(&b),
        "--config",
        s(&cfg),
        "--epsilon",
        "1",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        json(&out.join("summary.json"))["epsilon"].as_f64().unwrap(),
        1.0
    );
}

#[test]
fn ci_degenerate_and_monotone_in_level() {
    let dir = tempfile::tempdir().unwrap();
    let (a, _) = atoms(dir.path());
    let out = dir.path().join("deg");
    let o = qot(&[
        "ci",
        "--p",
        s(&a),
        "--q",
        s(&a),
        "--epsilon",
        "0.5",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0);
    let ci = json(&out.join("ci.json"));
    assert_eq!(ci["interval"]["half_width"].as_f64().unwrap(), 0.0);
    assert_eq!(ci["interval"]["lower"], ci["interval"]["upper"]);

    let p = dir.path().join("p.csv");
    let q = dir.path().join("q.csv");
    qot(&[
        "sample",
        "--lower",
        "0",
        "--upper",
        "1",
        "--n",
        "50",
        "--seed",
        "1",
        "--out",
        s(&p),
    ]);
    qot(&[
        "sample",
        "--lower",
        "0",
        "--upper",
        "1",
        "--n",
        "50",
        "--seed",
        "2",
        "--out",
        s(&q),
    ]);
    let widths: Vec<f64> = ["0.95", "0.99"]
        .iter()
        .map(|level| {
            let out = dir.path().join(format!("ci{level}"));
            let o = qot(&[
                "ci",
                "--p",
                s(&p),
                "--q",
                s(&q),
                "--epsilon",
                "0.5",
                "--level",
                level,
                "--out",
                s(&out),
            ]);
            assert_eq!(code(&o), 0);
            json(&out.join("ci.json"))["interval"]["half_width"]
                .as_f64()
                .unwrap()
        })
        .collect();
    assert!(widths[0] > 0.0 && widths[1] > widths[0]);
    let o = qot(&[
        "ci",
        "--p",
        s(&p),
        "--q",
        s(&q),
        "--epsilon",
        "0.5",
        "--level",
        "1.5",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn ci_fixture_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.csv");
    let q = dir.path().join("q.csv");
    for (path, seed) in [(&p, "7"), (&q, "8")] {
        let o = qot(&[
            "sample",
            "--lower",
            "0",
            "--upper",
            "1",
            "--n",
            "100",
            "--seed",
            seed,
            "--out",
            s(path),
        ]);
        assert_eq!(code(&o), 0);
    }
    let runs: Vec<Vec<u8>> = (0..2)
        .map(|k| {
            let out = dir.path().join(format!("run{k}"));
            let threads = if k == 0 { "1" } else { "2" };
            let o = qot(&[
                "--threads",
                threads,
                "ci",
                "--p",
                s(&p),
                "--q",
                s(&q),
                "--epsilon",
                "0.5",
                "--out",
                s(&out),
            ]);
            assert_eq!(code(&o), 0);
            fs::read(out.join("ci.json")).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    let text = String::from_utf8(runs[0].clone()).unwrap();
    assert!(text.ends_with("}\n") && !text.contains('\r'));
    assert_eq!(json(&dir.path().join("run0/ci.json"))["n"], 100);
}

const SMOKE: &str = r#"{
  "population": {"kind": "uniform_box", "lower": [0.0], "upper": [1.0]},
  "grid": 32,
  "epsilon": 0.5,
  "sample_sizes": [50],
  "replications": 2,
  "master_seed": 1,
  "experiments": ["cost_clt", "consistency"]
}"#;

#[test]
fn clt_sim_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("smoke.json");
    fs::write(&cfg, SMOKE).unwrap();
    let out = dir.path().join("sim");
    let o = qot(&["clt-sim", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&out.join("report.json"));
    assert_eq!(report["format_version"], 1);
    assert_eq!(report["cost_clt"][0]["replications"], 2);
    assert!(report.get("runtime_secs").is_none());
    let reps = fs::read_to_string(out.join("replications.csv")).unwrap();
    assert_eq!(reps.lines().count(), 2 + 2);
    for f in ["qq.csv", "rate.csv"] {
        assert!(fs::read_to_string(out.join(f))
            .unwrap()
            .starts_with("# format_version: 1\n"));
    }
}

#[test]
fn clt_sim_assertion_failure_still_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("strict.json");
    let strict = SMOKE.replace(
        r#""master_seed": 1,"#,
        r#""master_seed": 1, "assertions": {"coverage": [1.5, 2.0]},"#,
    );
    fs::write(&cfg, strict).unwrap();
    let out = dir.path().join("sim");
    let o = qot(&["clt-sim", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 3);
    assert_eq!(
        json(&out.join("report.json"))["assertions"][0]["passed"],
        false
    );
}

#[test]
fn clt_sim_rejects_invalid_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"population": 3}"#).unwrap();
    let out = dir.path().join("sim");
    assert_eq!(
        code(&qot(&["clt-sim", "--config", s(&cfg), "--out", s(&out)])),
        1
    );
    fs::write(&cfg, SMOKE.replace("\"grid\"", "\"gird\"")).unwrap();
    assert_eq!(
        code(&qot(&["clt-sim", "--config", s(&cfg), "--out", s(&out)])),
        1
    );
    assert!(!out.exists());
}

fn diagnostics(path: &Path) -> Vec<(String, String, f64)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| {
            let mut it = l.splitn(3, ',');
            let d = it.next().unwrap().to_string();
            let p = it.next().unwrap().to_string();
            (d, p, it.next().unwrap().parse().unwrap())
        })
        .collect()
}

#[test]
fn diagnose_single_atoms_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = atoms(dir.path());
    let out = dir.path().join("d");
    let o = qot(&[
        "diagnose",
        "--p",
        s(&a),
        "--q",
        s(&b),
        "--epsilon",
        "1",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0);
    let rows = diagnostics(&out.join("diagnostics.csv"));
    for (d, _, v) in &rows {
        if d.starts_with("lipschitz") || d.starts_with("gradient") || d == "sigma2" {
            assert_eq!(*v, 0.0, "{d}");
        }
    }
    assert!(rows.iter().any(|r| r.0 == "lipschitz_beta"));
}

#[test]
fn diagnose_grid_refinement_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("pop.json");
    fs::write(
        &cfg,
        SMOKE
            .replace("\"grid\": 32", "\"grid\": 512")
            .replace("0.5,", "0.1,"),
    )
    .unwrap();
    let out = dir.path().join("d");
    let o = qot(&["diagnose", "--experiment", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = diagnostics(&out.join("diagnostics.csv"));
    let stab: Vec<_> = rows
        .iter()
        .filter(|r| r.0.starts_with("stability_"))
        .collect();
    assert!(!stab.is_empty());
    assert!(stab
        .iter()
        .all(|r| r.1.starts_with("m=256 vs m=512") && r.2.is_finite()));
    let cost = rows.iter().find(|r| r.0 == "stability_cost").unwrap().2;
    assert!(cost < 1e-4);
    assert!(rows.iter().any(|r| r.0 == "vc_sup_deviation" && r.2 > 0.0));
}

#[test]
fn missing_flag_prints_usage() {
    let o = qot(&["diagnose", "--out", "x"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(code(&qot(&["solve"])), 1);
    assert_eq!(code(&qot(&["--help"])), 0);
}
