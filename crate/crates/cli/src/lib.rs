//! Driver for the `soliton-entropy` command: configuration, the check
//! suites and the JSON report.

pub mod config;
pub mod output;
pub mod suites;
pub mod summary;

use config::RunConfig;
use output::SuiteReport;
use rayon::prelude::*;

/// Run every selected suite on every selected model.  Models are processed in
/// parallel and reassembled in the configured order.
pub fn verify(config: &RunConfig, timestamp: u64) -> SuiteReport {
    let outcomes: Vec<suites::ModelOutcome> = config.models.par_iter().map(|id| suites::run_model(id, config)).collect();
    let mut reports = Vec::new();
    let mut artifacts = Vec::new();
    for o in outcomes {
        reports.extend(o.reports);
        artifacts.extend(o.artifacts);
    }
    SuiteReport::new(config.clone(), reports, artifacts, timestamp)
}
