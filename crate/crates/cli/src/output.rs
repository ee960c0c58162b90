//! The report written by `verify` and read back by `report`.

use crate::config::RunConfig;
use crate::suites::Artifact;
use serde::{Deserialize, Serialize};
use soliton_core::functionals::FunctionalReport;
use soliton_core::report::Status;
use std::fs;
use std::io;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub pass: usize,
    pub fail: usize,
    pub not_applicable: usize,
    pub inconclusive: usize,
}

impl Summary {
    pub fn of(reports: &[FunctionalReport]) -> Self {
        let mut s = Summary {
            total: reports.len(),
            ..Summary::default()
        };
        for r in reports {
            match r.status {
                Status::Pass => s.pass += 1,
                Status::Fail => s.fail += 1,
                Status::NotApplicable => s.not_applicable += 1,
                Status::Inconclusive => s.inconclusive += 1,
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    /// Version of the tool that wrote the report.
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub config: RunConfig,
    pub summary: Summary,
    pub reports: Vec<FunctionalReport>,
    pub artifacts: Vec<Artifact>,
}

impl SuiteReport {
    pub fn new(config: RunConfig, reports: Vec<FunctionalReport>, artifacts: Vec<Artifact>, timestamp: u64) -> Self {
        SuiteReport {
            schema_version: SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp,
            summary: Summary::of(&reports),
            config,
            reports,
            artifacts,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    /// Write `report.json` and the CSV artifacts into `dir`.
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        for a in &self.artifacts {
            fs::write(dir.join(&a.file), &a.contents)?;
        }
        fs::write(dir.join(REPORT_FILE), self.to_json())
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)?;
        let report: SuiteReport = serde_json::from_str(&text)?;
        if report.schema_version != SCHEMA_VERSION {
            anyhow::bail!("schema version {} (expected {SCHEMA_VERSION})", report.schema_version);
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_counts() {
        let a = FunctionalReport::new("x", "m", "-", 1.0).decide(1.0, 0.0, 0.0);
        let b = FunctionalReport::new("y", "m", "-", 1.0).decide(-1.0, 0.0, 0.0);
        let c = FunctionalReport::new("z", "m", "-", 1.0).not_applicable("no");
        let s = Summary::of(&[a, b, c]);
        assert_eq!((s.total, s.pass, s.fail, s.not_applicable, s.inconclusive), (3, 1, 1, 1, 0));
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let r = FunctionalReport::new("x", "m", "-", 1.0).decide(f64::NAN, 0.0, 0.0);
        let report = SuiteReport::new(RunConfig::default(), vec![r], Vec::new(), 5);
        report.write(dir.path()).unwrap();
        let back = SuiteReport::read(&dir.path().join(REPORT_FILE)).unwrap();
        assert_eq!(back.summary, report.summary);
        let mut expected = report.config.clone();
        expected.out = Default::default();
        assert_eq!(back.config, expected);
        assert!(back.reports[0].value.is_nan());
    }
}
