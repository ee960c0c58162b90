use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_soliton-entropy"));
    c.env_remove("SOLITON_ENTROPY_OUT");
    c
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn list_shows_the_catalog() {
    let o = bin().arg("list").output().unwrap();
    assert!(o.status.success());
    let text = stdout(&o);
    for id in ["gaussian-shrinker:n=2", "sphere:n=2", "cylinder:k=2,m=2", "cigar"] {
        assert!(text.lines().any(|l| l.starts_with(id)), "{id} missing:\n{text}");
    }
    assert!(text.lines().count() > 8);
    let row = |id: &str| text.lines().find(|l| l.split_whitespace().next() == Some(id)).unwrap().to_string();
    assert!(row("sphere:n=2").contains("mu_s = 0.30685"));
    assert!(row("gaussian-expander:n=3").contains("mu_e = 0"));
    assert!(row("cigar").contains("lambda = 4.00000"));
}

#[test]
fn unknown_models_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().args(["verify", "--models", "torus:n=2", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown model"));
    let o = bin().args(["verify", "--tol", "bogus=1"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["verify", "--suite", "nothing"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn identities_on_the_whole_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["verify", "--models", "all", "--suite", "identities", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stdout(&o));
    let r = report(dir.path());
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["summary"]["fail"], 0);
    let residuals: Vec<_> = r["reports"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["check_id"] == "identity:residual")
        .collect();
    assert_eq!(residuals.len(), 11);
    assert!(residuals.iter().all(|c| c["status"] == "pass"));
}

#[test]
fn flow_suite_on_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["verify", "--models", "gaussian-shrinker:n=1", "--suite", "flow", "--dt", "1e-3", "--horizon", "3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stdout(&o));
    let r = report(dir.path());
    for id in ["flow:dissipation", "flow:decay:H", "flow:mass", "flow:gaussian-l1"] {
        let c = r["reports"].as_array().unwrap().iter().find(|c| c["check_id"] == id).unwrap();
        assert_eq!(c["status"], "pass", "{id}");
    }
    let csv = std::fs::read_to_string(dir.path().join("flow-gaussian-shrinker-n-1.csv")).unwrap();
    assert!(csv.starts_with("t,H,I,mass,min_density\n"));
    assert_eq!(r["artifacts"][0]["file"], "flow-gaussian-shrinker-n-1.csv");
}

#[test]
fn cigar_poincare_equality_and_the_report_command() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cigar");
    let o = bin()
        .args(["verify", "--models", "cigar", "--suite", "lsi", "--out", "ignored"])
        .env("SOLITON_ENTROPY_OUT", &out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(!Path::new("ignored").exists());
    let r = report(&out);
    let eq = r["reports"].as_array().unwrap().iter().find(|c| c["check_id"] == "lsi").unwrap();
    assert_eq!(eq["status"], "pass");
    assert!(eq["gap"].as_f64().unwrap().abs() <= 1e-6);
    assert!(r["config"].get("out").is_none());

    let o = bin().arg("report").arg(dir.path()).output().unwrap();
    assert!(o.status.success());
    let n = r["summary"]["pass"].as_u64().unwrap();
    assert!(stdout(&o).contains(&format!("{n} passed, 0 failed")), "{}", stdout(&o));
}

#[test]
fn report_on_an_empty_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().arg("report").arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("no reports found"));
}

#[test]
fn failing_checks_set_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    // A time-discrete trace cannot satisfy dH/dt = -I exactly.
    let o = bin()
        .args(["verify", "--models", "gaussian-shrinker:n=1", "--suite", "flow", "--tol", "dissipation=0", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL gaussian-shrinker:n=1 flow:dissipation"));
    let r = report(dir.path());
    assert_eq!(r["config"]["tolerances"]["dissipation"], 0.0);

    let o = bin().arg("report").arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("failures:"));
}
