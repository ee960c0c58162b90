use serde::{Deserialize, Serialize};
use soliton_core::catalog::{default_catalog_ids, parse_model_id};
use soliton_core::grid::{Cutoff, Resolution};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown model: {0}")]
    Model(String),
    #[error("bad --resolution `{0}`: expected RADIAL or RADIALxANGULAR")]
    Resolution(String),
    #[error("bad --cutoff `{0}`: expected auto, auto:TAIL or a radius")]
    Cutoff(String),
    #[error("bad --tol `{0}`: {1}")]
    Tolerance(String, String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Identities,
    Lsi,
    Hwi,
    Flow,
    Volume,
    All,
}

impl Suite {
    pub const EACH: [Suite; 5] = [Suite::Identities, Suite::Lsi, Suite::Hwi, Suite::Flow, Suite::Volume];

    pub fn expand(list: &[Suite]) -> Vec<Suite> {
        let mut out: Vec<Suite> = if list.contains(&Suite::All) {
            Self::EACH.to_vec()
        } else {
            list.to_vec()
        };
        out.sort();
        out.dedup();
        out
    }
}

/// Tolerances of the individual checks, each settable with `--tol KEY=VALUE`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Inequality slack for the log-Sobolev family, the sign and moment checks.
    pub lsi: f64,
    /// Soliton identity and minimiser identity residuals.
    pub residual: f64,
    pub hwi: f64,
    /// Non-minimiser densities of expanders must clear the bound by this much.
    pub rigidity: f64,
    /// Agreement of the steady quadratic form with the W-form.
    pub steady: f64,
    pub flow_l1: f64,
    pub flow_entropy: f64,
    pub dissipation: f64,
    pub decay: f64,
    pub mass: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            lsi: 1e-8,
            residual: 1e-10,
            hwi: 1e-6,
            rigidity: 1e-4,
            steady: 1e-6,
            flow_l1: 1e-4,
            flow_entropy: 1e-4,
            dissipation: 1e-2,
            decay: 1e-3,
            mass: 1e-13,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 10] = [
        "lsi",
        "residual",
        "hwi",
        "rigidity",
        "steady",
        "flow-l1",
        "flow-entropy",
        "dissipation",
        "decay",
        "mass",
    ];

    /// Apply `KEY=VALUE`; a bare number sets `lsi`.
    pub fn apply(&mut self, item: &str) -> Result<(), ConfigError> {
        let (key, value) = item.split_once('=').unwrap_or(("lsi", item));
        let v: f64 = value
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite() && *v >= 0.0)
            .ok_or_else(|| ConfigError::Tolerance(item.into(), "not a nonnegative number".into()))?;
        let slot = match key.trim() {
            "lsi" => &mut self.lsi,
            "residual" => &mut self.residual,
            "hwi" => &mut self.hwi,
            "rigidity" => &mut self.rigidity,
            "steady" => &mut self.steady,
            "flow-l1" => &mut self.flow_l1,
            "flow-entropy" => &mut self.flow_entropy,
            "dissipation" => &mut self.dissipation,
            "decay" => &mut self.decay,
            "mass" => &mut self.mass,
            other => {
                return Err(ConfigError::Tolerance(
                    item.into(),
                    format!("unknown key `{other}`, expected one of {}", Self::KEYS.join(", ")),
                ))
            }
        };
        *slot = v;
        Ok(())
    }
}

/// Everything that determines the contents of a report.  The output
/// directory and worker count do not, and are left out of the echo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub models: Vec<String>,
    pub suites: Vec<Suite>,
    pub resolution: Resolution,
    pub cutoff: Cutoff,
    pub dt: f64,
    pub horizon: f64,
    pub tolerances: Tolerances,
    pub seed: u64,
    #[serde(skip)]
    pub out: PathBuf,
    #[serde(skip)]
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            models: default_catalog_ids().into_iter().map(String::from).collect(),
            suites: Suite::EACH.to_vec(),
            resolution: Resolution::default(),
            cutoff: Cutoff::default(),
            dt: 5e-4,
            horizon: 3.0,
            tolerances: Tolerances::default(),
            seed: 7,
            out: PathBuf::from("soliton-report"),
            jobs: None,
        }
    }
}

impl RunConfig {
    /// Check the parts clap cannot: model ids, and that the horizon is a
    /// whole number of steps.
    pub fn validate(&self) -> Result<(), ConfigError> {
        for id in &self.models {
            parse_model_id(id).map_err(|e| ConfigError::Model(format!("{id} ({e})")))?;
        }
        if self.models.is_empty() {
            return Err(ConfigError::Invalid("no models selected".into()));
        }
        if !(self.dt > 0.0 && self.horizon > 0.0 && self.dt.is_finite() && self.horizon.is_finite()) {
            return Err(ConfigError::Invalid(format!("dt = {} and horizon = {} must be positive", self.dt, self.horizon)));
        }
        let steps = self.horizon / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps {
            return Err(ConfigError::Invalid(format!(
                "horizon {} is not a whole number of steps of {}",
                self.horizon, self.dt
            )));
        }
        if self.resolution.radial < 16 || self.resolution.angular < 4 {
            return Err(ConfigError::Invalid("resolution is too coarse".into()));
        }
        Ok(())
    }
}

/// `all` or a comma-separated list of ids.  Ids contain commas themselves,
/// so a new id starts at each piece holding a `:` or naming the cigar.
pub fn parse_models(list: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for item in list {
        if item.trim() == "all" {
            out.extend(default_catalog_ids().into_iter().map(String::from));
            continue;
        }
        for piece in item.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let starts_new = piece.contains(':') || !piece.contains('=') || out.is_empty();
            match out.last_mut() {
                Some(last) if !starts_new => {
                    last.push(',');
                    last.push_str(piece);
                }
                _ => out.push(piece.to_string()),
            }
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    out.retain(|id| seen.insert(id.clone()));
    out
}

pub fn parse_resolution(s: &str) -> Result<Resolution, ConfigError> {
    let bad = || ConfigError::Resolution(s.into());
    let (radial, angular) = match s.split_once(['x', 'X']) {
        Some((r, a)) => (r.trim().parse().map_err(|_| bad())?, a.trim().parse().map_err(|_| bad())?),
        None => {
            let r: usize = s.trim().parse().map_err(|_| bad())?;
            (r, Resolution::default().angular)
        }
    };
    Ok(Resolution::new(radial, angular))
}

pub fn parse_cutoff(s: &str) -> Result<Cutoff, ConfigError> {
    let bad = || ConfigError::Cutoff(s.into());
    let s = s.trim();
    if s == "auto" {
        return Ok(Cutoff::default());
    }
    if let Some(tail) = s.strip_prefix("auto:") {
        let tail: f64 = tail.parse().map_err(|_| bad())?;
        if !(tail > 0.0 && tail < 1.0) {
            return Err(bad());
        }
        return Ok(match Cutoff::default() {
            Cutoff::Auto { spread, .. } => Cutoff::Auto { tail, spread },
            fixed => fixed,
        });
    }
    let r: f64 = s.parse().map_err(|_| bad())?;
    if r > 0.0 && r.is_finite() {
        Ok(Cutoff::Fixed(r))
    } else {
        Err(bad())
    }
}
