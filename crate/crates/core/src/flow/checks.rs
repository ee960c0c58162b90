use super::{run_from, FlowConfig, FlowGrid, FlowState, FlowTrace};
use crate::catalog::{GeometryFactor, SolitonModel};
use crate::error::{Error, Result};
use crate::functionals::FunctionalReport;
use crate::grid::Density;
use statrs::function::erf::erf;
use statrs::function::gamma::gamma_lr;

pub const DISSIPATION_TOLERANCE: f64 = 1e-2;
pub const DECAY_TOLERANCE: f64 = 1e-3;
/// Values of `H` and `I` below this are treated as zero.
const FLOOR: f64 = 1e-13;
const MIN_SAMPLES: usize = 10;

fn blank(trace: &FlowTrace, id: &str) -> FunctionalReport {
    FunctionalReport::new(id, &trace.model, trace.density.clone(), trace.tau)
}

/// Central differences of `y` at the interior samples.
fn central(trace: &FlowTrace, y: impl Fn(usize) -> f64) -> Vec<(usize, f64)> {
    let s = &trace.samples;
    (1..s.len() - 1)
        .map(|k| (k, (y(k + 1) - y(k - 1)) / (s[k + 1].t - s[k - 1].t)))
        .collect()
}

/// `dH/dt = -I` along the trace and, for centred Gaussian traces on flat
/// models, `dI/dt = -2∫[(Ric + Hess V)(∇ξ, ∇ξ) + |Hess ξ|²]ρ` with
/// `ξ = log(ρe^V)`, both by central differences between samples.
pub fn dissipation_check(trace: &FlowTrace, tolerance: f64) -> Result<Vec<FunctionalReport>> {
    let s = &trace.samples;
    if s.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SAMPLES,
            got: s.len(),
        });
    }
    let entropy = central(trace, |k| s[k].entropy)
        .into_iter()
        .map(|(k, d)| (d + s[k].fisher).abs() / s[k].fisher.max(FLOOR))
        .fold(0.0, f64::max);
    let first = blank(trace, "flow:dissipation")
        .decide_below(entropy, tolerance)
        .with_note("max relative error of dH/dt + I over interior samples");

    let second = if trace.centred_gaussian {
        // On N(c, aI) with V = |x - c|²/(4τ): ∇ξ = κ(x - c), Hess ξ = κ g with
        // κ = 1/(2τ) - 1/a, so the right side is -nκ²(a/τ + 2).
        let n = trace.dim as f64;
        let tau = trace.tau;
        let err = central(trace, |k| s[k].fisher)
            .into_iter()
            .map(|(k, d)| {
                let a = s[k].second_moment / n;
                let kappa = 0.5 / tau - 1.0 / a;
                let rhs = -n * kappa * kappa * (a / tau + 2.0);
                (d - rhs).abs() / rhs.abs().max(FLOOR)
            })
            .fold(0.0, f64::max);
        blank(trace, "flow:fisher-dissipation")
            .decide_below(err, tolerance)
            .with_note("max relative error of dI/dt against the Gaussian closed form")
    } else {
        blank(trace, "flow:fisher-dissipation")
            .not_applicable("the closed form of Hess ξ needs a centred Gaussian start on a flat model")
    };
    Ok(vec![first, second])
}

/// `H` non-increasing along the trace, and `I` as well when `K ≥ 0`.
pub fn monotonicity_check(trace: &FlowTrace) -> Vec<FunctionalReport> {
    let s = &trace.samples;
    let rise = |y: &dyn Fn(usize) -> f64| (1..s.len()).map(|k| y(k) - y(k - 1)).fold(f64::NEG_INFINITY, f64::max);
    let h = blank(trace, "flow:entropy-monotone").decide_below(rise(&|k| s[k].entropy), FLOOR);
    let i = if trace.k >= 0.0 {
        blank(trace, "flow:fisher-monotone").decide_below(rise(&|k| s[k].fisher), FLOOR)
    } else {
        blank(trace, "flow:fisher-monotone").not_applicable(format!("K = {} is negative", trace.k))
    };
    vec![h, i]
}

/// `H(t) ≤ H(0)e^{-2Kt}(1 + tol)` and the same for `I`; reported as the
/// largest ratio of a sample to its envelope without the `(1 + tol)` factor.
pub fn decay_check(trace: &FlowTrace, tolerance: f64) -> Vec<FunctionalReport> {
    let s = &trace.samples;
    let k = trace.k;
    let ratio = |y: &dyn Fn(usize) -> f64| {
        (0..s.len())
            .map(|j| {
                let excess = (y(j) - FLOOR).max(0.0);
                let envelope = y(0) * (-2.0 * k * s[j].t).exp();
                if excess == 0.0 {
                    0.0
                } else {
                    excess / envelope
                }
            })
            .fold(0.0, f64::max)
    };
    let mut out = Vec::new();
    for (id, y) in [
        ("flow:decay:H", &(|j: usize| s[j].entropy) as &dyn Fn(usize) -> f64),
        ("flow:decay:I", &|j: usize| s[j].fisher),
    ] {
        let r = blank(trace, id);
        out.push(if k > 0.0 {
            r.decide_below(ratio(y), 1.0 + tolerance)
                .with_note(format!("envelope exp(-2Kt) with K = {k}"))
        } else {
            r.not_applicable(format!("K = {k} is not positive"))
        });
    }
    out
}

/// Exact cell masses of `N(centre, a I)` on a flow grid over a flat model.
pub fn gaussian_cell_masses(grid: &FlowGrid, a: f64) -> Vec<f64> {
    let half = 0.5 * grid.dim as f64;
    let cdf = |x: f64| {
        if grid.even {
            if x == 0.0 {
                0.0
            } else {
                gamma_lr(half, x * x / (2.0 * a))
            }
        } else {
            0.5 * (1.0 + erf(x / (2.0 * a).sqrt()))
        }
    };
    grid.edges.windows(2).map(|w| cdf(w[1]) - cdf(w[0])).collect()
}

/// Agreement of a flow from `N(c, 2τs₀)` with the exact solution
/// `N(c, a(t))`, `a(t) = 2τ + (2τs₀ - 2τ)e^{-t/τ}`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GaussianComparison {
    pub s0: f64,
    /// Largest L¹ distance between cell masses over the samples, mass
    /// outside the grid included.
    pub max_l1: f64,
    pub final_l1: f64,
    /// Largest `|H - H_exact|` with `H_exact = (n/2)(a/2τ - 1 - log(a/2τ))`.
    pub max_entropy_error: f64,
}

impl GaussianComparison {
    pub fn reports(&self, trace: &FlowTrace, l1_limit: f64, entropy_limit: f64) -> Vec<FunctionalReport> {
        vec![
            blank(trace, "flow:gaussian-l1")
                .decide_below(self.max_l1, l1_limit)
                .with_note(format!("s0 = {}, final L1 error {:.3e}", self.s0, self.final_l1)),
            blank(trace, "flow:gaussian-entropy").decide_below(self.max_entropy_error, entropy_limit),
        ]
    }
}

pub fn gaussian_solution_check(model: &SolitonModel, s0: f64, config: &FlowConfig) -> Result<(FlowTrace, GaussianComparison)> {
    if !matches!(model.factors.as_slice(), [GeometryFactor::FlatGaussian { .. }]) {
        return Err(Error::Unsupported(format!("{} has no Gaussian flow solution", model.id)));
    }
    let density = Density::param_gaussian(s0, Vec::new());
    let state = FlowState::new(model, &density, config.cells, config.cutoff)?;
    let tau = model.tau;
    let n = state.grid.dim as f64;
    let variance = |t: f64| 2.0 * tau + 2.0 * tau * (s0 - 1.0) * (-t / tau).exp();
    let mut cmp = GaussianComparison {
        s0,
        max_l1: 0.0,
        final_l1: 0.0,
        max_entropy_error: 0.0,
    };
    let mut trace = run_from(model, state, config, |st| {
        let a = variance(st.t);
        let exact = gaussian_cell_masses(&st.grid, a);
        let outside = 1.0 - exact.iter().sum::<f64>();
        let l1 = st.masses.iter().zip(&exact).map(|(m, e)| (m - e).abs()).sum::<f64>() + outside.abs();
        let r = a / (2.0 * tau);
        let h_exact = 0.5 * n * (r - 1.0 - r.ln());
        cmp.max_l1 = cmp.max_l1.max(l1);
        cmp.final_l1 = l1;
        cmp.max_entropy_error = cmp.max_entropy_error.max((st.entropy() - h_exact).abs());
        Ok(())
    })?;
    trace.density = density.describe();
    trace.centred_gaussian = true;
    Ok((trace, cmp))
}

/// Ratio of the Gaussian L¹ errors when the grid is refined four times and
/// the time step cut by the same factor; second order in space and first
/// order in time give a ratio near 4 or more.
pub fn refinement_check(model: &SolitonModel, s0: f64, config: &FlowConfig, min_ratio: f64) -> Result<FunctionalReport> {
    let (trace, coarse) = gaussian_solution_check(model, s0, config)?;
    let finer = FlowConfig {
        cells: 4 * config.cells,
        dt: config.dt / 4.0,
        ..*config
    };
    let (_, fine) = gaussian_solution_check(model, s0, &finer)?;
    let ratio = coarse.max_l1 / fine.max_l1;
    let mut r = blank(&trace, "flow:refinement-order").decide(ratio, min_ratio, 0.0);
    r.note = Some(format!(
        "L1 error {:.3e} at {} cells, {:.3e} at {} cells",
        coarse.max_l1, config.cells, fine.max_l1, finer.cells
    ));
    Ok(r)
}
