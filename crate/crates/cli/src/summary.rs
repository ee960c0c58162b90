//! Plain-text tables for stored reports.

use crate::output::{SuiteReport, Summary};
use soliton_core::report::Status;
use std::fmt::Write;
use std::path::{Path, PathBuf};

/// Result of scanning a directory for reports.
#[derive(Debug, Default)]
pub struct Scan {
    pub reports: Vec<(PathBuf, SuiteReport)>,
    /// Files that looked like reports but did not parse.
    pub broken: Vec<(PathBuf, String)>,
}

/// Every `*.json` file directly in `dir` and in its immediate subdirectories,
/// in path order.
pub fn scan(dir: &Path) -> std::io::Result<Scan> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            for inner in std::fs::read_dir(&path)? {
                files.push(inner?.path());
            }
        } else {
            files.push(path);
        }
    }
    files.retain(|p| p.extension().is_some_and(|e| e == "json"));
    files.sort();
    let mut out = Scan::default();
    for f in files {
        match SuiteReport::read(&f) {
            Ok(r) => out.reports.push((f, r)),
            Err(e) => out.broken.push((f, e.to_string())),
        }
    }
    Ok(out)
}

fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "-".into()
    } else {
        format!("{x:.3e}")
    }
}

/// The summary table.  Failures come first, largest `|gap|` first, then every
/// report in stored order.
pub fn render(scan: &Scan) -> String {
    let mut out = String::new();
    let mut total = Summary::default();
    for (path, r) in &scan.reports {
        let s = r.summary;
        let _ = writeln!(
            out,
            "{}: {} checks, {} passed, {} failed, {} n/a, {} inconclusive",
            path.display(),
            s.total,
            s.pass,
            s.fail,
            s.not_applicable,
            s.inconclusive
        );
        total.total += s.total;
        total.pass += s.pass;
        total.fail += s.fail;
        total.not_applicable += s.not_applicable;
        total.inconclusive += s.inconclusive;
    }
    for (path, e) in &scan.broken {
        let _ = writeln!(out, "{}: unreadable ({e})", path.display());
    }

    let mut failures: Vec<_> = scan
        .reports
        .iter()
        .flat_map(|(_, r)| &r.reports)
        .filter(|r| r.status == Status::Fail)
        .collect();
    failures.sort_by(|a, b| {
        let key = |g: f64| if g.is_nan() { f64::INFINITY } else { g.abs() };
        key(b.gap)
            .total_cmp(&key(a.gap))
            .then_with(|| (&a.model, &a.check_id).cmp(&(&b.model, &b.check_id)))
    });
    if !failures.is_empty() {
        let _ = writeln!(out, "\nfailures:");
        let _ = writeln!(out, "{:<28} {:<26} {:>11} {:>11}  note", "model", "check", "gap", "tolerance");
        for r in failures {
            let _ = writeln!(
                out,
                "{:<28} {:<26} {:>11} {:>11}  {}",
                r.model,
                r.check_id,
                fmt_num(r.gap),
                fmt_num(r.tolerance),
                r.note.as_deref().unwrap_or("")
            );
        }
    }

    let _ = writeln!(out, "\n{:<28} {:<26} {:<12} {:>11} {:>11}", "model", "check", "status", "value", "gap");
    for (_, r) in &scan.reports {
        for c in &r.reports {
            let _ = writeln!(
                out,
                "{:<28} {:<26} {:<12} {:>11} {:>11}",
                c.model,
                c.check_id,
                c.status.label(),
                fmt_num(c.value),
                fmt_num(c.gap)
            );
        }
    }
    let _ = writeln!(
        out,
        "\n{} passed, {} failed, {} n/a, {} inconclusive",
        total.pass, total.fail, total.not_applicable, total.inconclusive
    );
    out
}

/// Whether the scanned reports are all free of failures and readable.
pub fn all_clear(scan: &Scan) -> bool {
    !scan.reports.is_empty() && scan.broken.is_empty() && scan.reports.iter().all(|(_, r)| r.summary.fail == 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;
    use soliton_core::functionals::FunctionalReport;

    fn stored(dir: &Path, name: &str, reports: Vec<FunctionalReport>) {
        let r = SuiteReport::new(RunConfig::default(), reports, Vec::new(), 0);
        std::fs::write(dir.join(name), r.to_json()).unwrap();
    }

    #[test]
    fn failures_sorted_by_gap() {
        let dir = tempfile::tempdir().unwrap();
        let ok = FunctionalReport::new("a", "m", "-", 1.0).decide(1.0, 0.0, 0.0);
        let small = FunctionalReport::new("small", "m", "-", 1.0).decide(-0.1, 0.0, 0.0);
        let big = FunctionalReport::new("big", "m", "-", 1.0).decide(-3.0, 0.0, 0.0);
        stored(dir.path(), "report.json", vec![ok, small, big]);
        let s = scan(dir.path()).unwrap();
        let text = render(&s);
        let failures = &text[text.find("failures:").unwrap()..];
        assert!(failures.find("big").unwrap() < failures.find("small").unwrap());
        assert!(text.contains("1 passed, 2 failed"));
        assert!(!all_clear(&s));
    }

    #[test]
    fn broken_files_are_listed() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("junk.json"), "{").unwrap();
        let s = scan(dir.path()).unwrap();
        assert_eq!(s.broken.len(), 1);
        assert!(render(&s).contains("unreadable"));
        assert!(!all_clear(&s));
    }
}
