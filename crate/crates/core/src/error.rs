use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported chart: {0}")]
    UnsupportedChart(String),
    #[error("inconsistent model {model}: soliton residual {residual:.3e} exceeds {tolerance:.1e}")]
    InconsistentModel {
        model: String,
        residual: f64,
        tolerance: f64,
    },
    #[error("invalid model id `{0}`")]
    InvalidModelId(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite integrand value {value} at node {node}")]
    NonFinite { node: usize, value: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("infeasible transport problem: {0}")]
    Infeasible(String),
    #[error("time step {dt} exceeds the stability bound; try dt <= {suggested}")]
    StepTooLarge { dt: f64, suggested: f64 },
    #[error("negative density {value:.3e} in cell {cell} at t = {t}")]
    NegativeDensity { cell: usize, value: f64, t: f64 },
    #[error("too few samples: need {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
