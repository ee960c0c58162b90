//! Relative entropy, Fisher information, the W-entropy and the inequality
//! checks built on them.
//!
//! For parametric densities every integrand used here is a sum of factor
//! terms, so the integrals are assembled from one expectation per factor.

mod forms;
mod radial;
mod reports;
mod search;

pub use forms::{rho_form_w, steady_quadratic_form, QuadraticForm};
pub use radial::{radial_entropy, radial_fisher, radial_profile, RadialProfile};
pub use reports::{
    el_residual_report, lsi_gap, minimizer_identity_residual, moment_bound, scale_consistency, scale_lsi_gap,
    CheckOptions, FunctionalReport,
};
pub use search::{mu_estimate, nu_estimate, MuEstimate, NuEstimate};

use crate::catalog::{SolitonKind, SolitonModel};
use crate::error::{Error, Result};
use crate::grid::{factor_samples, normalize, reference_log_prefactor, Density, QuadratureGrid};
use std::f64::consts::PI;

/// Expectations of the factor data under a product density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub kind: SolitonKind,
    pub total_dim: usize,
    /// `(n/2) log(4πτ)` for shrinkers and expanders, `0` for steady models.
    pub log_prefactor: f64,
    pub ell: f64,
    /// `E[f]`, potential offset included.
    pub f: f64,
    pub grad_ell_sq: f64,
    pub dot: f64,
    pub grad_f_sq: f64,
    pub scalar: f64,
    pub lap_ell: f64,
}

impl Moments {
    /// `H_V = E[log ρ + V]`.
    pub fn entropy(&self) -> f64 {
        self.ell + self.f + self.log_prefactor
    }

    /// `I_V = E|∇(log ρ + V)|²`.
    pub fn fisher(&self) -> f64 {
        self.grad_ell_sq + 2.0 * self.dot + self.grad_f_sq
    }

    /// `E[σ(|∇ψ|² + S) + ψ - n]` with `ρ = e^{-ψ}/(4πσ)^{n/2}`.
    pub fn w_sigma(&self, sigma: f64) -> f64 {
        let n = self.total_dim as f64;
        sigma * (self.grad_ell_sq + self.scalar) - self.ell - 0.5 * n * (4.0 * PI * sigma).ln() - n
    }

    /// The entropy paired with the soliton kind: `W_σ` for shrinkers,
    /// `E[|∇ψ|² - 3S + ψ - n]` for expanders and `E[|∇ψ|² - 3S]` for steady models.
    pub fn perelman(&self, sigma: f64) -> f64 {
        let n = self.total_dim as f64;
        match self.kind {
            SolitonKind::Shrinking => self.w_sigma(sigma),
            SolitonKind::Expanding => {
                self.grad_ell_sq - 3.0 * self.scalar - self.ell - 0.5 * n * (4.0 * PI).ln() - n
            }
            SolitonKind::Steady => self.grad_ell_sq - 3.0 * self.scalar,
        }
    }
}

fn require_parametric(density: &Density) -> Result<()> {
    if density.is_gridded() {
        Err(Error::Unsupported(
            "gradient-based functionals of gridded densities need the radial profile path".into(),
        ))
    } else {
        Ok(())
    }
}

/// Factor-by-factor expectations of a parametric density on the grid.
pub fn moments(model: &SolitonModel, grid: &QuadratureGrid, density: &Density) -> Result<Moments> {
    require_parametric(density)?;
    let fs = factor_samples(model, grid, density)?;
    let mut m = Moments {
        kind: model.kind,
        total_dim: model.total_dim,
        log_prefactor: reference_log_prefactor(model),
        ell: 0.0,
        f: model.potential_offset,
        grad_ell_sq: 0.0,
        dot: 0.0,
        grad_f_sq: 0.0,
        scalar: 0.0,
        lap_ell: 0.0,
    };
    for s in &fs {
        m.ell += s.expect(|p| p.ell);
        m.f += s.expect(|p| p.geom.f);
        m.grad_ell_sq += s.expect(|p| p.grad_ell_sq);
        m.dot += s.expect(|p| p.dot);
        m.grad_f_sq += s.expect(|p| p.geom.grad_f_sq);
        m.scalar += s.expect(|p| p.geom.scalar);
        m.lap_ell += s.expect(|p| p.lap_ell);
    }
    Ok(m)
}

/// `H_V(ρ) = ∫ ρ (log ρ + V) dΓ` with `V = f + (n/2) log(4πτ)` (`V = f` for
/// steady models) and `0 log 0 = 0`.
pub fn relative_entropy(model: &SolitonModel, grid: &QuadratureGrid, density: &Density) -> Result<f64> {
    if let Some(values) = density.gridded_values() {
        let d = if density.is_normalized() {
            density.clone()
        } else {
            normalize(model, grid, density)?
        };
        let values = d.gridded_values().unwrap_or(values);
        let pre = reference_log_prefactor(model);
        let terms = (0..grid.node_count())
            .map(|k| {
                let rho = values[k];
                if rho == 0.0 {
                    return Ok(0.0);
                }
                let (p, _) = grid.node(k);
                Ok(rho * (rho.ln() + model.geometry(&p)?.f + pre))
            })
            .collect::<Result<Vec<f64>>>()?;
        return crate::grid::integrate(grid, &terms);
    }
    Ok(moments(model, grid, density)?.entropy())
}

/// `I_V(ρ) = ∫ |∇(log ρ + V)|² ρ dΓ`.  Gridded densities go through the
/// radial profile and need shell-symmetric values on a single-factor model.
pub fn fisher_information(model: &SolitonModel, grid: &QuadratureGrid, density: &Density) -> Result<f64> {
    if density.is_gridded() {
        return radial_fisher(&radial_profile(model, grid, density)?);
    }
    Ok(moments(model, grid, density)?.fisher())
}

fn check_sigma(model: &SolitonModel, sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale must be positive, got {sigma}")));
    }
    if model.kind != SolitonKind::Shrinking && sigma != 1.0 {
        return Err(Error::InvalidParameter(format!(
            "the {} entropy is defined at scale 1 only, got {sigma}",
            model.kind.label()
        )));
    }
    Ok(())
}

/// The W-entropy of the kind (see [`Moments::perelman`]).
pub fn perelman_w(model: &SolitonModel, grid: &QuadratureGrid, density: &Density, sigma: f64) -> Result<f64> {
    check_sigma(model, sigma)?;
    Ok(moments(model, grid, density)?.perelman(sigma))
}

/// Perelman's `W(g, u, σ)` on any model, with `u = e^{-ψ}/(4πσ)^{n/2}`.
pub fn w_sigma(model: &SolitonModel, grid: &QuadratureGrid, density: &Density, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale must be positive, got {sigma}")));
    }
    Ok(moments(model, grid, density)?.w_sigma(sigma))
}

/// `L²(dΓ)` norm of `-4σΔw + σSw - nw - 2w log w - μw` with
/// `w = √(ρ (4πσ)^{n/2})` and `μ = W(g, ρ, σ)`.  Expanders use `-3S` in place
/// of `S` at `σ = 1`; steady models have `-4Δw - 3Sw - μw` with `w = √ρ`.
///
/// The bracket divided by `w` is a sum of factor terms `a_i` plus a constant,
/// so its second moment is `Σ Var(a_i) + (Σ E a_i + C)²`.
pub fn el_residual(model: &SolitonModel, grid: &QuadratureGrid, density: &Density, sigma: f64) -> Result<f64> {
    require_parametric(density)?;
    check_sigma(model, sigma)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale must be positive, got {sigma}")));
    }
    let fs = factor_samples(model, grid, density)?;
    let n = model.total_dim as f64;
    let (curv, entropic) = match model.kind {
        SolitonKind::Shrinking => (1.0, 1.0),
        SolitonKind::Expanding => (-3.0, 1.0),
        SolitonKind::Steady => (-3.0, 0.0),
    };
    let a = |p: &crate::grid::PointSample| {
        -2.0 * sigma * p.lap_ell - sigma * p.grad_ell_sq + curv * sigma * p.geom.scalar - entropic * p.ell
    };
    let mut mean = 0.0;
    let mut var = 0.0;
    let mut m = Moments {
        kind: model.kind,
        total_dim: model.total_dim,
        log_prefactor: 0.0,
        ell: 0.0,
        f: 0.0,
        grad_ell_sq: 0.0,
        dot: 0.0,
        grad_f_sq: 0.0,
        scalar: 0.0,
        lap_ell: 0.0,
    };
    for s in &fs {
        let e = s.expect(a);
        mean += e;
        var += s.expect(|p| (a(p) - e).powi(2));
        m.ell += s.expect(|p| p.ell);
        m.grad_ell_sq += s.expect(|p| p.grad_ell_sq);
        m.scalar += s.expect(|p| p.geom.scalar);
    }
    let mu = m.perelman(sigma);
    let prefactor = entropic * 0.5 * n * (4.0 * PI * sigma).ln();
    let c = entropic * -n - prefactor - mu;
    let second = var + (mean + c).powi(2);
    Ok((prefactor.exp() * second).sqrt())
}
