//! Verdicts and grid certificates shared by all checks.

use crate::grid::{Cutoff, Resolution};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// The hypotheses of the checked statement do not hold for this model.
    NotApplicable,
    /// The computed bracket straddles the bound.
    Inconclusive,
}

impl Status {
    /// `Pass` iff `gap ≥ -tolerance`; non-finite gaps fail.
    pub fn from_gap(gap: f64, tolerance: f64) -> Self {
        if gap >= -tolerance {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    /// `Some(pass)` for decided checks, `None` otherwise.
    pub fn verdict(self) -> Option<bool> {
        match self {
            Status::Pass => Some(true),
            Status::Fail => Some(false),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::NotApplicable => "n/a",
            Status::Inconclusive => "inconclusive",
        }
    }
}

/// Grid parameters used by a check.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub resolution: Resolution,
    pub cutoff: Cutoff,
}

impl GridSpec {
    pub fn new(resolution: Resolution, cutoff: Cutoff) -> Self {
        GridSpec { resolution, cutoff }
    }

    pub fn doubled(self) -> Self {
        GridSpec {
            resolution: self.resolution.doubled(),
            cutoff: self.cutoff,
        }
    }
}

/// Self-consistency certificate: the change of the reported value when the
/// grid resolution is doubled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCertificate {
    pub resolution: Resolution,
    pub cutoff: f64,
    pub refinement_delta: f64,
}

/// Deserialise a float written as `null` (non-finite on output) back to NaN.
pub fn f64_or_nan<'de, D>(deserializer: D) -> std::result::Result<f64, D::Error>
where
    D: serde::Deserializer<'de>,
{
    Ok(Option::<f64>::deserialize(deserializer)?.unwrap_or(f64::NAN))
}
