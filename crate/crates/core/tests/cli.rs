use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn vvloop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vvloop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn validate_accepts_every_reference_scenario() {
    for entry in fs::read_dir(scenarios()).unwrap() {
        let p = entry.unwrap().path();
        let o = vvloop(&["validate", "--scenario", p.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}: {}", p.display(), String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).starts_with("ok: "));
    }
}

#[test]
fn parse_and_validation_errors_exit_1() {
    let d = tempfile::tempdir().unwrap();
    let cases = [
        ("syntax.ini", "[scenario\nbase = nominal\n"),
        ("pairing.ini", "[scenario]\nbase = congested\nattack = ghost\n"),
        ("thresholds.ini", "[safety]\nd_unsafe_m = 5.0\nd_warn_m = 4.0\n"),
        ("unknown_key.ini", "[scenario]\nbase = nominal\nspeed = 3\n"),
    ];
    for (name, body) in cases {
        let p = write(d.path(), name, body);
        let o = vvloop(&["validate", "--scenario", p.to_str().unwrap()]);
        assert_eq!(code(&o), 1, "{name}");
        assert!(!o.stderr.is_empty(), "{name} explains itself");
        let o = vvloop(&["run", "--scenario", p.to_str().unwrap(), "--seed", "1", "--out", d.path().to_str().unwrap()]);
        assert_eq!(code(&o), 1, "{name} via run");
    }
    let missing = d.path().join("nope.ini");
    assert_eq!(code(&vvloop(&["validate", "--scenario", missing.to_str().unwrap()])), 1);
}

#[test]
fn syntax_error_names_the_line() {
    let d = tempfile::tempdir().unwrap();
    let p = write(d.path(), "s.ini", "[scenario]\nbase = nominal\n\nmax_ticks = ten\n");
    let o = vvloop(&["validate", "--scenario", p.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));
}

#[test]
fn run_writes_one_trace() {
    let d = tempfile::tempdir().unwrap();
    let nominal = scenarios().join("nominal.ini");
    let o = vvloop(&["run", "--scenario", nominal.to_str().unwrap(), "--seed", "7", "--out", d.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let trace = d.path().join("nominal").join("7.jsonl");
    let records = vvloop::metrics::read_trace_file(&trace).unwrap();
    assert!(!records.is_empty());
    assert!(records.last().unwrap().status.is_terminal());
}

#[test]
fn failing_planner_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let p = write(
        d.path(),
        "ext.ini",
        "[scenario]\nid = broken_planner\nbase = nominal\n[planner]\nexternal_command = /nonexistent/planner\n",
    );
    let o = vvloop(&["run", "--scenario", p.to_str().unwrap(), "--seed", "1", "--out", d.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);

    // a campaign keeps going past the failure, reports it, and exits 2
    let dir = d.path().join("scen");
    fs::create_dir(&dir).unwrap();
    fs::copy(&p, dir.join("ext.ini")).unwrap();
    fs::copy(scenarios().join("nominal.ini"), dir.join("nominal.ini")).unwrap();
    let out = d.path().join("out");
    let report = d.path().join("r.csv");
    let o = vvloop(&[
        "campaign", "--scenario-dir", dir.to_str().unwrap(), "--runs", "2",
        "--out", out.to_str().unwrap(), "--report", report.to_str().unwrap(), "--format", "csv",
    ]);
    assert_eq!(code(&o), 2);
    let csv = fs::read_to_string(&report).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("nominal,2,")), "{csv}");
    assert_eq!(fs::read_dir(out.join("nominal")).unwrap().count(), 2);
}

#[test]
fn campaign_then_report_agree() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("traces");
    let (r1, r2) = (d.path().join("a.md"), d.path().join("b.md"));
    let o = vvloop(&[
        "campaign", "--scenario-dir", scenarios().to_str().unwrap(), "--base-seed", "3",
        "--out", out.to_str().unwrap(), "--report", r1.to_str().unwrap(), "--parallel", "4",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let files: usize = fs::read_dir(&out)
        .unwrap()
        .map(|e| fs::read_dir(e.unwrap().path()).unwrap().count())
        .sum();
    assert_eq!(files, 90);
    let o = vvloop(&["report", "--traces", out.to_str().unwrap(), "--report", r2.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_to_string(r1).unwrap(), fs::read_to_string(r2).unwrap());
}

#[test]
fn report_on_corrupt_trace_exits_1() {
    let d = tempfile::tempdir().unwrap();
    fs::create_dir(d.path().join("nominal")).unwrap();
    fs::write(d.path().join("nominal").join("0.jsonl"), "{not json\n").unwrap();
    let r = d.path().join("r.md");
    let o = vvloop(&["report", "--traces", d.path().to_str().unwrap(), "--report", r.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}
