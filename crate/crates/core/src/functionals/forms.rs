//! Second routes to the entropies: the `√ρ` form with finite-difference gradients.

use crate::catalog::{mu_invariant, FactorPoint, GeometryFactor, SolitonKind, SolitonModel};
use crate::error::{Error, Result};
use crate::grid::{normalize, pairwise_sum, Density, QuadratureGrid};
use rayon::prelude::*;
use std::f64::consts::PI;

const STEP: f64 = 1e-5;

/// `|∇√u_i|²` at a factor point from central differences of the factor density.
fn grad_sqrt_sq(model: &SolitonModel, density: &Density, index: usize, fp: &FactorPoint) -> Result<f64> {
    let root = |q: &FactorPoint| -> Result<f64> { Ok((0.5 * density.factor_log_density(model, index, q)?).exp()) };
    let diff = |plus: FactorPoint, minus: FactorPoint| -> Result<f64> { Ok((root(&plus)? - root(&minus)?) / (2.0 * STEP)) };
    match (&model.factors[index], fp) {
        (GeometryFactor::FlatGaussian { .. }, FactorPoint::Flat(x)) => {
            let mut total = 0.0;
            for j in 0..x.len() {
                let (mut a, mut b) = (x.clone(), x.clone());
                a[j] += STEP;
                b[j] -= STEP;
                total += diff(FactorPoint::Flat(a), FactorPoint::Flat(b))?.powi(2);
            }
            Ok(total)
        }
        (GeometryFactor::RoundSphere { radius, .. }, FactorPoint::Sphere(angles)) => {
            // ds² = r²(dθ_1² + sin²θ_1 dθ_2² + … + Π sin²θ_i dφ²).
            let mut total = 0.0;
            let mut metric = *radius;
            for j in 0..angles.len() {
                let (mut a, mut b) = (angles.clone(), angles.clone());
                a[j] += STEP;
                b[j] -= STEP;
                total += (diff(FactorPoint::Sphere(a), FactorPoint::Sphere(b))? / metric).powi(2);
                metric *= angles[j].sin();
            }
            Ok(total)
        }
        (GeometryFactor::Cigar, FactorPoint::Cigar([x, y])) => {
            let dx = diff(FactorPoint::Cigar([x + STEP, *y]), FactorPoint::Cigar([x - STEP, *y]))?;
            let dy = diff(FactorPoint::Cigar([*x, y + STEP]), FactorPoint::Cigar([*x, y - STEP]))?;
            Ok((1.0 + x * x + y * y) * (dx * dx + dy * dy))
        }
        (GeometryFactor::AbstractEinstein { .. }, FactorPoint::Abstract) => Ok(0.0),
        (factor, _) => Err(Error::UnsupportedChart(format!("point {fp:?} on factor {factor:?}"))),
    }
}

/// Per-factor integrals `(∫4|∇√u|², ∫S u, ∫u log u)`.
fn factor_integrals(model: &SolitonModel, grid: &QuadratureGrid, density: &Density) -> Result<Vec<[f64; 3]>> {
    let d = normalize(model, grid, density)?;
    let mut out = Vec::with_capacity(model.factors.len());
    for (i, g) in grid.factors.iter().enumerate() {
        let rows = g
            .points
            .par_iter()
            .zip(g.weights.par_iter())
            .map(|(fp, w)| {
                let ell = d.factor_log_density(model, i, fp)?;
                let u = ell.exp();
                let s = model.factor_geometry(i, fp)?.scalar;
                Ok([
                    w * 4.0 * grad_sqrt_sq(model, &d, i, fp)?,
                    w * s * u,
                    if u == 0.0 { 0.0 } else { w * u * ell },
                ])
            })
            .collect::<Result<Vec<[f64; 3]>>>()?;
        let col = |c: usize| pairwise_sum(&rows.iter().map(|r| r[c]).collect::<Vec<_>>());
        out.push([col(0), col(1), col(2)]);
    }
    Ok(out)
}

/// The W-entropy of the kind written with `√ρ`:
/// `∫[4σ|∇√ρ|² + σSρ - ρ log ρ] - (n/2) log(4πσ) - n` for shrinkers, with the
/// gradient taken by central differences of the density rather than in closed form.
pub fn rho_form_w(model: &SolitonModel, grid: &QuadratureGrid, density: &Density, sigma: f64) -> Result<f64> {
    if density.is_gridded() {
        return Err(Error::Unsupported("the √ρ form needs pointwise density values".into()));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale must be positive, got {sigma}")));
    }
    let parts = factor_integrals(model, grid, density)?;
    let grad: f64 = parts.iter().map(|p| p[0]).sum();
    let s: f64 = parts.iter().map(|p| p[1]).sum();
    let ent: f64 = parts.iter().map(|p| p[2]).sum();
    let n = model.total_dim as f64;
    Ok(match model.kind {
        SolitonKind::Shrinking => sigma * (grad + s) - ent - 0.5 * n * (4.0 * PI * sigma).ln() - n,
        SolitonKind::Expanding => grad - 3.0 * s - ent - 0.5 * n * (4.0 * PI).ln() - n,
        SolitonKind::Steady => grad - 3.0 * s,
    })
}

/// `Q(φ) = ∫(4|∇φ|² - 3Sφ²)` and `∫φ²` for `φ = amplitude·√u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticForm {
    pub energy: f64,
    pub mass: f64,
    pub lambda: f64,
}

impl QuadraticForm {
    /// `Q(φ) + λ∫φ²`, nonnegative on a steady soliton.
    pub fn gap(&self) -> f64 {
        self.energy + self.lambda * self.mass
    }
}

/// The steady quadratic form evaluated on `φ = amplitude·√u`.
pub fn steady_quadratic_form(
    model: &SolitonModel,
    grid: &QuadratureGrid,
    density: &Density,
    amplitude: f64,
) -> Result<QuadraticForm> {
    if model.kind != SolitonKind::Steady {
        return Err(Error::Unsupported("the quadratic form check applies to steady solitons".into()));
    }
    let parts = factor_integrals(model, grid, density)?;
    let a2 = amplitude * amplitude;
    let grad: f64 = parts.iter().map(|p| p[0]).sum();
    let s: f64 = parts.iter().map(|p| p[1]).sum();
    Ok(QuadraticForm {
        energy: a2 * (grad - 3.0 * s),
        mass: a2,
        lambda: mu_invariant(model)?,
    })
}
