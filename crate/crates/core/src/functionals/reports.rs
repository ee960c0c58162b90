use super::{check_sigma, el_residual, moments, mu_estimate, Moments};
use crate::catalog::{mu_invariant, SolitonKind, SolitonModel};
use crate::error::{Error, Result};
use crate::grid::{build_grid, factor_samples, Density, QuadratureGrid};
use crate::report::{f64_or_nan, GridCertificate, GridSpec, Status};
use serde::{Deserialize, Serialize};

/// One check on one (model, density, scale).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub check_id: String,
    pub model: String,
    pub density: String,
    #[serde(deserialize_with = "f64_or_nan")]
    pub sigma: f64,
    #[serde(deserialize_with = "f64_or_nan")]
    pub value: f64,
    #[serde(deserialize_with = "f64_or_nan")]
    pub bound: f64,
    #[serde(deserialize_with = "f64_or_nan")]
    pub gap: f64,
    pub pass: Option<bool>,
    pub status: Status,
    #[serde(deserialize_with = "f64_or_nan")]
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridCertificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl FunctionalReport {
    pub fn new(check_id: impl Into<String>, model: &str, density: impl Into<String>, sigma: f64) -> Self {
        FunctionalReport {
            check_id: check_id.into(),
            model: model.to_string(),
            density: density.into(),
            sigma,
            value: f64::NAN,
            bound: f64::NAN,
            gap: f64::NAN,
            pass: None,
            status: Status::NotApplicable,
            tolerance: f64::NAN,
            h_value: None,
            i_value: None,
            w_value: None,
            grid: None,
            note: None,
        }
    }

    /// Record `gap = value - bound` and the verdict `gap ≥ -tolerance`.
    pub fn decide(mut self, value: f64, bound: f64, tolerance: f64) -> Self {
        self.value = value;
        self.bound = bound;
        self.gap = value - bound;
        self.tolerance = tolerance;
        self.status = Status::from_gap(self.gap, tolerance);
        self.pass = self.status.verdict();
        self
    }

    /// Two-sided check `|value - bound| ≤ tolerance`; `gap` keeps its sign.
    pub fn decide_equal(mut self, value: f64, bound: f64, tolerance: f64) -> Self {
        self = self.decide(value, bound, tolerance);
        self.status = Status::from_bool(self.gap.abs() <= tolerance);
        self.pass = self.status.verdict();
        self
    }

    /// One-sided check `value ≤ limit` for errors and residuals.
    pub fn decide_below(mut self, value: f64, limit: f64) -> Self {
        self.value = value;
        self.bound = limit;
        self.gap = limit - value;
        self.tolerance = 0.0;
        self.status = Status::from_bool(value <= limit);
        self.pass = self.status.verdict();
        self
    }

    pub fn not_applicable(mut self, why: impl Into<String>) -> Self {
        self.status = Status::NotApplicable;
        self.pass = None;
        self.note = Some(why.into());
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn with_values(mut self, m: &Moments, sigma: f64) -> Self {
        self.h_value = Some(m.entropy());
        self.i_value = Some(m.fisher());
        self.w_value = Some(m.perelman(sigma));
        self
    }

    pub fn with_grid(mut self, grid: GridCertificate) -> Self {
        self.grid = Some(grid);
        self
    }
}

/// Grid and tolerance for a family of checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub grid: GridSpec,
    pub tolerance: f64,
    /// Recompute on the doubled grid and attach the change as a certificate.
    pub certify: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            grid: GridSpec::default(),
            tolerance: 1e-8,
            certify: true,
        }
    }
}

impl CheckOptions {
    pub fn build(&self, model: &SolitonModel) -> Result<QuadratureGrid> {
        build_grid(model, self.grid.resolution, self.grid.cutoff)
    }

    fn certificate<F>(&self, model: &SolitonModel, grid: &QuadratureGrid, value: f64, eval: F) -> Result<GridCertificate>
    where
        F: Fn(&QuadratureGrid) -> Result<f64>,
    {
        let refinement_delta = if self.certify {
            let fine = build_grid(model, self.grid.resolution.doubled(), self.grid.cutoff)?;
            (eval(&fine)? - value).abs()
        } else {
            f64::NAN
        };
        Ok(GridCertificate {
            resolution: self.grid.resolution,
            cutoff: grid.cutoff_radius(),
            refinement_delta,
        })
    }
}

/// The sharp inequality `W ≥ -μ_s` (resp. `-μ_e`, `-λ`) at the soliton scale.
pub fn lsi_gap(model: &SolitonModel, density: &Density, sigma: f64, opts: &CheckOptions) -> Result<FunctionalReport> {
    check_sigma(model, sigma)?;
    if model.kind == SolitonKind::Shrinking && (sigma - model.tau).abs() > 1e-12 * model.tau {
        return Err(Error::InvalidParameter(format!(
            "the sharp inequality is taken at σ = τ = {}; other scales go through scale_lsi_gap",
            model.tau
        )));
    }
    let grid = opts.build(model)?;
    let m = moments(model, &grid, density)?;
    let w = m.perelman(sigma);
    let bound = -mu_invariant(model)?;
    let cert = opts.certificate(model, &grid, w, |g| Ok(moments(model, g, density)?.perelman(sigma)))?;
    let mut r = FunctionalReport::new("lsi", &model.id, density.describe(), sigma)
        .decide(w, bound, opts.tolerance)
        .with_values(&m, sigma)
        .with_grid(cert);
    if density.is_reference() {
        r = r.with_note("equality case: density is the minimiser");
    }
    Ok(r)
}

/// Smallest scalar curvature over the grid nodes.
fn grid_min_scalar(model: &SolitonModel, grid: &QuadratureGrid) -> Result<f64> {
    let fs = factor_samples(model, grid, &Density::reference())?;
    Ok(fs
        .iter()
        .map(|s| s.points.iter().map(|p| p.geom.scalar).fold(f64::INFINITY, f64::min))
        .sum())
}

/// The three scale-dependent lower bounds for `W(σ)` on shrinkers: the
/// logarithmic bound (`σ > τ`), the curvature bound (`σ > τ`, `Ric ≥ 0`,
/// `S ≥ δ > 0` with `δ` the grid minimum) and the small-scale bound
/// (`σ ≤ τ`, `0 ≤ Ric ≤ A`).  Scales enter through `σ/τ`.
pub fn scale_lsi_gap(
    model: &SolitonModel,
    density: &Density,
    sigma: f64,
    opts: &CheckOptions,
) -> Result<Vec<FunctionalReport>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale must be positive, got {sigma}")));
    }
    let ids = ["scale-lsi:log", "scale-lsi:curvature", "scale-lsi:small-scale"];
    let blank = |id: &str| FunctionalReport::new(id, &model.id, density.describe(), sigma);
    if model.kind != SolitonKind::Shrinking {
        return Ok(ids
            .iter()
            .map(|id| blank(id).not_applicable(format!("{} soliton", model.kind.label())))
            .collect());
    }
    let grid = opts.build(model)?;
    let m = moments(model, &grid, density)?;
    let w = m.w_sigma(sigma);
    let cert = opts.certificate(model, &grid, w, |g| Ok(moments(model, g, density)?.w_sigma(sigma)))?;
    let mu = mu_invariant(model)?;
    let n = model.total_dim as f64;
    let rel = sigma / model.tau;
    let (ric_lo, ric_hi) = model.ricci_bounds();
    let finish = |r: FunctionalReport, bound: f64| r.decide(w, bound, opts.tolerance).with_values(&m, sigma).with_grid(cert);

    let log_bound = if rel > 1.0 {
        finish(blank(ids[0]), -mu - 0.5 * n * rel.ln())
    } else {
        blank(ids[0]).not_applicable("needs σ > τ")
    };

    let delta = model.tau * grid_min_scalar(model, &grid)?;
    let curvature = if rel <= 1.0 {
        blank(ids[1]).not_applicable("needs σ > τ")
    } else if ric_lo < 0.0 {
        blank(ids[1]).not_applicable("needs Ric ≥ 0")
    } else if !(delta > 0.0) {
        blank(ids[1]).not_applicable("scalar curvature is not bounded below by a positive constant")
    } else {
        finish(blank(ids[1]), -mu + 0.5 * n - delta - 0.5 * n * (n / (2.0 * delta)).ln())
            .with_note(format!("δ = {delta} taken as the grid minimum of S"))
    };

    let a = model.tau * ric_hi;
    let small = if rel > 1.0 {
        blank(ids[2]).not_applicable("needs σ ≤ τ")
    } else if ric_lo < 0.0 || !a.is_finite() {
        blank(ids[2]).not_applicable("needs 0 ≤ Ric ≤ A")
    } else {
        finish(blank(ids[2]), -mu - n * a)
    };
    Ok(vec![log_bound, curvature, small])
}

/// Euler-Lagrange residual as a report: passes when below the tolerance.
pub fn el_residual_report(
    model: &SolitonModel,
    density: &Density,
    sigma: f64,
    opts: &CheckOptions,
) -> Result<FunctionalReport> {
    let grid = opts.build(model)?;
    let res = el_residual(model, &grid, density, sigma)?;
    let cert = opts.certificate(model, &grid, res, |g| el_residual(model, g, density, sigma))?;
    let mut r = FunctionalReport::new("el-residual", &model.id, density.describe(), sigma).with_grid(cert);
    r.value = res;
    r.bound = opts.tolerance;
    r.gap = opts.tolerance - res;
    r.tolerance = opts.tolerance;
    r.status = Status::from_bool(res <= opts.tolerance);
    r.pass = r.status.verdict();
    Ok(r)
}

/// `max |τ(2Δf - |∇f|² + S) + f - n + μ_s|` (and the analogues for the other
/// kinds) over every node of the product grid.
pub fn minimizer_identity_residual(model: &SolitonModel, grid: &QuadratureGrid) -> Result<f64> {
    let mu = mu_invariant(model)?;
    let fs = factor_samples(model, grid, &Density::reference())?;
    // Each factor contributes the identity's factor terms; the maximum over
    // the product is attained by combining extreme factor values.
    let n = model.total_dim as f64;
    let term = |p: &crate::grid::PointSample| {
        let g = &p.geom;
        match model.kind {
            SolitonKind::Shrinking => model.tau * (2.0 * g.lap_f - g.grad_f_sq + g.scalar) + g.f,
            SolitonKind::Expanding => 2.0 * g.lap_f - g.grad_f_sq - 3.0 * g.scalar + g.f,
            SolitonKind::Steady => 2.0 * g.lap_f - g.grad_f_sq - 3.0 * g.scalar,
        }
    };
    let constant = match model.kind {
        SolitonKind::Steady => mu,
        _ => model.potential_offset - n + mu,
    };
    let (mut lo, mut hi) = (constant, constant);
    for s in &fs {
        let vals: Vec<f64> = s.points.iter().map(term).collect();
        lo += vals.iter().copied().fold(f64::INFINITY, f64::min);
        hi += vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    Ok(lo.abs().max(hi.abs()))
}

/// `∫ f e^{-f} (4πτ)^{-n/2} dΓ ≤ n/2` on shrinkers.
pub fn moment_bound(model: &SolitonModel, opts: &CheckOptions) -> Result<FunctionalReport> {
    let blank = FunctionalReport::new("moment-bound", &model.id, "reference", model.tau);
    if model.kind != SolitonKind::Shrinking {
        return Ok(blank.not_applicable(format!("{} soliton", model.kind.label())));
    }
    let grid = opts.build(model)?;
    let ef = moments(model, &grid, &Density::reference())?.f;
    let cert = opts.certificate(model, &grid, ef, |g| Ok(moments(model, g, &Density::reference())?.f))?;
    let n = model.total_dim as f64;
    let mut r = blank.decide(0.5 * n, ef, opts.tolerance).with_grid(cert);
    r.value = ef;
    r.bound = 0.5 * n;
    Ok(r)
}

/// Consistency of the family estimates of `μ(g, σ)` with the lower bound
/// `μ(g, 1) - nAσ - B - (A²n/2 + An)(1 - σ)` for `0 < σ < 1`, where
/// `Ric ≥ -A` and `S ≤ B`, and `μ(g, 1)` is the exact value `-μ_s`.
pub fn scale_consistency(model: &SolitonModel, sigma: f64, opts: &CheckOptions) -> Result<FunctionalReport> {
    let blank = FunctionalReport::new("scale-consistency", &model.id, "family search", sigma);
    if model.kind != SolitonKind::Shrinking || model.tau != 1.0 {
        return Ok(blank.not_applicable("stated for the τ = 1 slice of a shrinker"));
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Ok(blank.not_applicable("needs 0 < σ < 1"));
    }
    let (ric_lo, ric_hi) = model.ricci_bounds();
    let (_, s_hi) = model.scalar_bounds();
    let a = ric_lo.abs().max(ric_hi.abs());
    let b = s_hi;
    let n = model.total_dim as f64;
    let mu1 = -mu_invariant(model)?;
    let bound = mu1 - n * a * sigma - b - (a * a * n / 2.0 + a * n) * (1.0 - sigma);
    let est = mu_estimate(model, sigma, 60, opts)?;
    Ok(blank
        .decide(est.value, bound, opts.tolerance)
        .with_note(format!("A = {a}, B = {b}; value is an upper estimate of μ(g, σ)")))
}
