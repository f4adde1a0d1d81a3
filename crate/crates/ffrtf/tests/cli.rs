use std::path::PathBuf;
use std::process::Command;

use ffrtf::config::{parse, Suite};
use ffrtf::suites;

const SMALL: &str = "version = 1\nq = 3\nf = t^2+1\nsigma_plus = t\nD = t+2^1\nsuites = orbital-vs-N, M-vs-N\n";

fn write_tmp(name: &str, body: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("ffrtf-{}-{name}", std::process::id()));
    std::fs::write(&path, body).unwrap();
    path
}

fn ffrtf(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ffrtf")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn run_passes_and_writes_json() {
    let cfg = write_tmp("pass.conf", SMALL);
    let json = write_tmp("pass.json", "");
    let (code, out, _) = ffrtf(&["run", "--config", cfg.to_str().unwrap(), "--json", json.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    assert!(out.lines().last().unwrap().starts_with("summary: PASS"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(v["schema"], "ffrtf-report/1");
    assert_eq!(v["summary"]["failed"], 0);
}

#[test]
fn refusals_exit_two() {
    let bad = write_tmp("bad.conf", "version = 1\nq = 4\nf = t^2+1\nsigma_plus = t\n");
    let (code, _, err) = ffrtf(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("line 2"), "{err}");

    let meets = write_tmp("meets.conf", "version = 1\nq = 3\nf = t^2+1\nsigma_plus = t\nD = t^1\n");
    let (code, _, err) = ffrtf(&["run", "--config", meets.to_str().unwrap()]);
    assert_eq!(code, 2, "{err}");

    let cfg = write_tmp("unknown-suite.conf", SMALL);
    let (code, _, err) = ffrtf(&["run", "--config", cfg.to_str().unwrap(), "--suite", "nope"]);
    assert_eq!(code, 2);
    assert!(err.contains("unknown suite"));
}

#[test]
fn point_queries() {
    let cfg = write_tmp("query.conf", SMALL);
    let c = cfg.to_str().unwrap();
    let (code, all, _) = ffrtf(&["orbital-all", "--config", c]);
    assert_eq!(code, 0);
    let (u, j) = all.lines().next().unwrap().split_once('\t').unwrap();
    let (code, one, _) = ffrtf(&["orbital", "--config", c, "--u", u]);
    assert_eq!(code, 0);
    assert_eq!(one.trim(), j);

    let (code, bases, _) = ffrtf(&["bases", "--config", c]);
    assert_eq!(code, 0);
    // q^{d+ρ−N+1} = 3^{1+2−1+1}.
    assert_eq!(bases.lines().count(), 27);
}

#[test]
fn mutated_eta_sign_is_caught() {
    let src = SMALL.replace("D = t+2^1", "D = t+1^1,t+2^1");
    let mut cfg = parse(&src).unwrap();
    cfg.suites = vec![Suite::OrbitalVsN];
    assert!(suites::run(&cfg, false).unwrap().passed());
    cfg.eta_flip = Some(0);
    let report = suites::run(&cfg, false).unwrap();
    assert!(!report.passed());
    assert!(report.to_text().contains("FAIL X=N"));
}

#[test]
fn parallel_and_sequential_reports_agree() {
    let cfg = parse(SMALL).unwrap();
    let a = suites::run(&cfg, true).unwrap().to_json();
    let b = suites::run(&cfg, false).unwrap().to_json();
    assert_eq!(a, b);
}

#[test]
fn empty_suite_list_passes() {
    let mut cfg = parse(SMALL).unwrap();
    cfg.suites.clear();
    let report = suites::run(&cfg, true).unwrap();
    assert!(report.passed());
    assert_eq!(report.summary.checks, 0);
}
