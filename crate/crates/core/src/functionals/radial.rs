use crate::catalog::{GeometryFactor, SolitonModel};
use crate::error::{Error, Result};
use crate::grid::fd::radial_derivatives;
use crate::grid::{normalize, pairwise_sum, reference_log_prefactor, Density, QuadratureGrid};

/// A density depending on one radial coordinate only.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    /// Increasing radial coordinate (distance to the centre or arc length from the pole).
    pub coord: Vec<f64>,
    /// Measure of each node: shell or cell weight, area element included.
    pub weight: Vec<f64>,
    pub rho: Vec<f64>,
    /// `log ρ + V` at each node.
    pub log_h: Vec<f64>,
    /// Whether the profile extends evenly through `coord = 0`.
    pub even: bool,
}

/// `H_V = Σ w ρ log h`, with `0 log 0 = 0`.
pub fn radial_entropy(p: &RadialProfile) -> f64 {
    let terms: Vec<f64> = p
        .weight
        .iter()
        .zip(p.rho.iter().zip(&p.log_h))
        .map(|(w, (r, l))| if *r == 0.0 { 0.0 } else { w * r * l })
        .collect();
    pairwise_sum(&terms)
}

/// `I_V = Σ w ρ (∂_r log h)²` with fourth-order finite differences in `r`.
pub fn radial_fisher(p: &RadialProfile) -> Result<f64> {
    if let Some((node, v)) = p.log_h.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { node, value: *v });
    }
    let (d1, _) = radial_derivatives(&p.coord, &p.log_h, p.even);
    let terms: Vec<f64> = p
        .weight
        .iter()
        .zip(p.rho.iter().zip(&d1))
        .map(|(w, (r, d))| w * r * d * d)
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Radial profile of a shell-symmetric gridded density on a single-factor model.
pub fn radial_profile(model: &SolitonModel, grid: &QuadratureGrid, density: &Density) -> Result<RadialProfile> {
    let values = density
        .gridded_values()
        .ok_or_else(|| Error::Unsupported("radial profiles are built from gridded densities".into()))?;
    if model.factors.len() != 1 || matches!(model.factors[0], GeometryFactor::AbstractEinstein { .. }) {
        return Err(Error::Unsupported(
            "radial profiles need a single flat, sphere or cigar factor".into(),
        ));
    }
    let d = if density.is_normalized() {
        density.clone()
    } else {
        normalize(model, grid, density)?
    };
    let values = d.gridded_values().unwrap_or(values);
    let g = &grid.factors[0];
    let shells = g.shells.as_ref().ok_or_else(|| Error::Unsupported("grid has no shells".into()))?;
    let scale = values.iter().fold(0.0, |a: f64, b| a.max(*b));
    let pre = reference_log_prefactor(model);
    let mut profile = RadialProfile {
        coord: shells.radii.clone(),
        weight: Vec::with_capacity(shells.radii.len()),
        rho: Vec::with_capacity(shells.radii.len()),
        log_h: Vec::with_capacity(shells.radii.len()),
        even: true,
    };
    for i in 0..shells.radii.len() {
        let block = i * shells.per_shell..(i + 1) * shells.per_shell;
        let v = values[block.start];
        if values[block.clone()].iter().any(|x| (x - v).abs() > 1e-12 * scale) {
            return Err(Error::Unsupported(format!(
                "density is not radially symmetric (shell {i}); gradients of non-radial gridded data are not supported"
            )));
        }
        let f = model.factor_geometry(0, &g.points[block.start])?.f + model.potential_offset;
        profile.weight.push(pairwise_sum(&g.weights[block]));
        profile.rho.push(v);
        profile.log_h.push(v.ln() + f + pre);
    }
    Ok(profile)
}
