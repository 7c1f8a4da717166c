use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use gic_tin::model::scenario::reference_channel;
use gic_tin::model::{rate_pair_proper, RateProfile};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gic-tin"))
}

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/reference.json")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn ts_region_three_betas() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ts.csv");
    let f = fixture();
    let o = run(&[
        "region", "--channel", f.to_str().unwrap(), "--method", "ts-proper", "--p1", "10", "--p2", "10", "--betas", "3",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("method,beta,r1,r2,R,status\n"));
    let r = rows(&text);
    assert_eq!(r.len(), 3);
    let expect = [(5.40086, 0.0, 1e-3), (2.54495, 2.54495, 5e-3), (0.0, 3.44236, 1e-3)];
    for (row, (a, b, tol)) in r.iter().zip(expect) {
        assert_eq!(row[0], "ts-proper");
        assert_eq!(row[5], "ok");
        assert!((num(&row[2]) - a).abs() <= tol && (num(&row[3]) - b).abs() <= tol, "{row:?}");
        // At least 12 significant digits in the mantissa.
        let mantissa = row[2].split('e').next().unwrap().replace(['.', '-'], "");
        assert!(mantissa.len() >= 12);
    }
}

#[test]
fn pure_proper_single_beta() {
    let f = fixture();
    let o = run(&["region", "--channel", f.to_str().unwrap(), "--method", "pure-proper", "--betas", "1", "--beta", "1.0"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(r.len(), 1);
    assert!((num(&r[0][4]) - 5.40086).abs() < 1e-4);
}

#[test]
fn usage_and_channel_errors() {
    let o = run(&["region", "--method", "ts-proper"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"h11": [1, 0], "h12": [0, 1], "h21": [0, 1], "h22": [1, 0], "noise1": 0, "noise2": 1}"#).unwrap();
    for args in [
        vec!["region", "--channel", bad.to_str().unwrap(), "--method", "pure-proper"],
        vec!["verify", "--channel", bad.to_str().unwrap(), "--suite", "lemma1"],
        vec!["solve", "--channel", bad.to_str().unwrap(), "--beta", "0.5"],
        vec!["solve", "--channel", "/nonexistent/channel.json", "--beta", "0.5"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    let f = fixture();
    assert_eq!(run(&["solve", "--channel", f.to_str().unwrap(), "--beta", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["region", "--channel", f.to_str().unwrap(), "--method", "magic"]).status.code(), Some(2));
}

#[test]
fn non_convergence_is_flagged() {
    let f = fixture();
    let o = run(&["region", "--channel", f.to_str().unwrap(), "--method", "ts-proper", "--betas", "3", "--eps-cp", "1e-14"]);
    assert_eq!(o.status.code(), Some(3));
    let r = rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(r.len(), 3);
    assert!(r.iter().any(|row| row[5] == "not-converged"));
}

#[test]
fn seeded_regions_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture();
    let mut files = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let out = dir.path().join(name);
        let o = run(&[
            "region", "--channel", f.to_str().unwrap(), "--method", "pure-improper-samples", "--betas", "11", "--seed", "5",
            "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        files.push(fs::read_to_string(&out).unwrap());
    }
    assert!(files[0] == files[1]);
}

fn solve(beta: &str) -> Value {
    let f = fixture();
    let o = run(&["solve", "--channel", f.to_str().unwrap(), "--beta", beta]);
    assert_eq!(o.status.code(), Some(0));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn solve_single_user() {
    let doc = solve("1");
    assert!((doc["R"].as_f64().unwrap() - 5.40086).abs() < 1e-3);
    assert_eq!(doc["strategies"].as_array().unwrap().len(), 1);
}

#[test]
fn solve_symmetric_point_round_trips() {
    let doc = solve("0.5");
    for key in ["R", "beta", "mu", "lambda", "cuts", "strategies"] {
        assert!(doc.get(key).is_some(), "{key}");
    }
    let strategies = doc["strategies"].as_array().unwrap();
    assert!(!strategies.is_empty() && strategies.len() <= 4);
    let total: f64 = strategies.iter().map(|s| s["tau"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() <= 1e-9);

    // Recompute R from the reported strategies through the rate expressions.
    let ch = reference_channel();
    let mut avg = [0.0; 2];
    for s in strategies {
        let tau = s["tau"].as_f64().unwrap();
        let r = rate_pair_proper(&ch, [s["p1"].as_f64().unwrap(), s["p2"].as_f64().unwrap()]).unwrap();
        assert_eq!(r.r1, s["r1"].as_f64().unwrap());
        avg[0] += tau * r.r1;
        avg[1] += tau * r.r2;
    }
    let r = RateProfile::new(0.5).unwrap().balanced(avg);
    assert!((r - doc["R"].as_f64().unwrap()).abs() <= 1e-9);
    assert_eq!(doc, solve("0.5"));
}

#[test]
fn verify_suites() {
    let f = fixture();
    let o = run(&["verify", "--channel", f.to_str().unwrap(), "--suite", "lemma1", "--trials", "100000", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("lemma1: pass"));

    let o = run(&["verify", "--channel", f.to_str().unwrap(), "--suite", "theorem1", "--trials", "1000"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("theorem1: pass"));

    let o = run(&["verify", "--channel", f.to_str().unwrap(), "--suite", "all", "--enhance", "--trials", "2000"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout).to_string();
    for suite in ["lemma1", "theorem1", "duality", "nesting"] {
        assert!(text.contains(&format!("{suite}: pass")), "{text}");
    }
    assert!(text.contains("max_proper_channel_difference=0.000e0"));
}
