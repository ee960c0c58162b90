//! Tensor-product quadrature over catalog models, densities and integration.

mod density;
pub mod fd;
pub mod rules;
mod sample;

pub use density::{normalize, Density, DensityKind, TiltProfile};
pub(crate) use sample::{evaluate_factor, sphere_zonal};
pub use sample::{factor_samples, product_expectation, FactorSamples, NodeTotals, PointSample};

use crate::catalog::{sphere_unit_vector, ChartPoint, FactorPoint, GeometryFactor, SolitonKind, SolitonModel};
use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;
use std::fmt::Write as _;

/// Gauss-Legendre nodes per radial panel.
pub const PANEL_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    /// Radial node count (rounded up to whole panels).
    pub radial: usize,
    /// Longitude nodes on sphere factors; polar angles get half as many.
    /// Flat factors of dimension ≥ 3 use half of this.
    pub angular: usize,
}

impl Resolution {
    pub fn new(radial: usize, angular: usize) -> Self {
        Resolution { radial, angular }
    }

    pub fn doubled(self) -> Self {
        Resolution {
            radial: 2 * self.radial,
            angular: 2 * self.angular,
        }
    }
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution {
            radial: 128,
            angular: 24,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cutoff {
    /// Radius chosen so that a reference-type law whose variance is widened by
    /// `spread` puts less than `tail` mass outside the grid.
    Auto { tail: f64, spread: f64 },
    Fixed(f64),
}

impl Default for Cutoff {
    fn default() -> Self {
        Cutoff::Auto {
            tail: 1e-12,
            spread: 8.0,
        }
    }
}

/// Nodes of a single factor, with enough structure to recover radial profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorGrid {
    pub points: Vec<FactorPoint>,
    pub weights: Vec<f64>,
    /// Radial (or colatitude-scaled) coordinate of each shell and the number
    /// of nodes per shell; node `i * per_shell + j` lies on shell `i`.
    pub shells: Option<Shells>,
    pub cutoff: Option<f64>,
    pub exactness: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shells {
    pub radii: Vec<f64>,
    pub per_shell: usize,
}

impl FactorGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub model_id: String,
    pub factors: Vec<FactorGrid>,
    pub resolution: Resolution,
    pub cutoff: Cutoff,
}

fn flat_tail_radius(dim: usize, variance: f64, tail: f64) -> f64 {
    // P(|X| > R) = Q(d/2, R²/(2 var)) for X ~ N(0, var I_d).
    let a = 0.5 * dim as f64;
    let q = |r: f64| gamma_ur(a, r * r / (2.0 * variance));
    let mut hi = variance.sqrt();
    while q(hi) > tail {
        hi *= 1.5;
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if q(mid) > tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Geodesic cutoff on the cigar for the law `∝ (1 + r²)^{-1/spread} dΓ`.
fn cigar_tail_radius(tail: f64, spread: f64) -> f64 {
    let a = 1.0 / spread.max(1.0);
    // Mass beyond s is ≈ e^{-2as} relative to the total.
    (1.0 / tail).ln() / (2.0 * a) + 2.0
}

impl QuadratureGrid {
    pub fn node_count(&self) -> usize {
        self.factors.iter().map(FactorGrid::len).product()
    }

    /// Per-factor indices of the flat node index (last factor fastest).
    pub fn split_index(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (slot, g) in out.iter_mut().zip(&self.factors).rev() {
            *slot = index % g.len();
            index /= g.len();
        }
        out
    }

    pub fn node(&self, index: usize) -> (ChartPoint, f64) {
        let idx = self.split_index(index);
        let mut w = 1.0;
        let pts = idx
            .iter()
            .zip(&self.factors)
            .map(|(&i, g)| {
                w *= g.weights[i];
                g.points[i].clone()
            })
            .collect();
        (ChartPoint::new(pts), w)
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.split_index(index)
            .iter()
            .zip(&self.factors)
            .map(|(&i, g)| g.weights[i])
            .product()
    }

    /// Minimum polynomial exactness over the factor rules.
    pub fn exactness(&self) -> usize {
        self.factors.iter().map(|g| g.exactness).min().unwrap_or(0)
    }

    /// Largest radial cutoff over the factors (zero for compact models).
    pub fn cutoff_radius(&self) -> f64 {
        self.factors.iter().filter_map(|g| g.cutoff).fold(0.0, f64::max)
    }

    /// Node list as CSV: factor coordinates followed by the weight.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut header = Vec::new();
        for (i, g) in self.factors.iter().enumerate() {
            let width = match g.points.first() {
                Some(FactorPoint::Flat(x)) => x.len(),
                Some(FactorPoint::Sphere(a)) => a.len(),
                Some(FactorPoint::Cigar(_)) => 2,
                _ => 0,
            };
            for j in 0..width {
                header.push(format!("f{i}_c{j}"));
            }
        }
        header.push("weight".into());
        out.push_str(&header.join(","));
        out.push('\n');
        for k in 0..self.node_count() {
            let (p, w) = self.node(k);
            let mut row = Vec::new();
            for fp in &p.factors {
                match fp {
                    FactorPoint::Flat(x) | FactorPoint::Sphere(x) => row.extend(x.iter().map(|v| format!("{v:e}"))),
                    FactorPoint::Cigar(x) => row.extend(x.iter().map(|v| format!("{v:e}"))),
                    FactorPoint::Abstract => {}
                }
            }
            row.push(format!("{w:e}"));
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// Tensor-product grid for the model.
pub fn build_grid(model: &SolitonModel, resolution: Resolution, cutoff: Cutoff) -> Result<QuadratureGrid> {
    if resolution.radial == 0 || resolution.angular < 2 {
        return Err(Error::InvalidParameter(format!(
            "resolution must be positive with at least 2 angular nodes: {resolution:?}"
        )));
    }
    let panels = resolution.radial.div_ceil(PANEL_NODES);
    let per_panel = resolution.radial.div_ceil(panels);
    let mut factors = Vec::with_capacity(model.factors.len());
    for factor in &model.factors {
        let g = match factor {
            GeometryFactor::FlatGaussian {
                dim,
                tilt,
                quadratic_scale,
            } => {
                let centre: Vec<f64> = tilt.iter().map(|b| -b / (2.0 * quadratic_scale)).collect();
                let c_norm = centre.iter().map(|c| c * c).sum::<f64>().sqrt();
                let variance = 1.0 / (2.0 * quadratic_scale);
                let radius = match cutoff {
                    Cutoff::Auto { tail, spread } => {
                        c_norm + flat_tail_radius(*dim, variance * spread.max(1.0), tail) + spread.max(1.0).sqrt()
                    }
                    Cutoff::Fixed(r) => r,
                };
                let h0 = 0.5 * variance.sqrt();
                let radial = rules::composite_legendre(&rules::panel_edges(radius, panels, Some(h0)), per_panel);
                let longitude = if *dim >= 3 {
                    (resolution.angular / 2).max(8)
                } else {
                    resolution.angular
                };
                let polar = longitude.div_ceil(2);
                let (dirs, dir_w) = rules::sphere_rule(dim - 1, polar, longitude);
                let dirs: Vec<Vec<f64>> = if *dim == 1 {
                    vec![vec![1.0], vec![-1.0]]
                } else {
                    dirs.iter().map(|a| sphere_unit_vector(a)).collect()
                };
                let mut points = Vec::with_capacity(radial.len() * dirs.len());
                let mut weights = Vec::with_capacity(points.capacity());
                for (r, wr) in radial.nodes.iter().zip(&radial.weights) {
                    let jac = r.powi(*dim as i32 - 1);
                    for (u, wu) in dirs.iter().zip(&dir_w) {
                        points.push(FactorPoint::Flat(
                            u.iter().zip(&centre).map(|(ui, ci)| ci + r * ui).collect(),
                        ));
                        weights.push(wr * jac * wu);
                    }
                }
                let exactness = if *dim == 1 {
                    2 * per_panel - 1
                } else {
                    (2 * per_panel - 1).min(2 * polar - 1).min(longitude - 1)
                };
                FactorGrid {
                    points,
                    weights,
                    shells: Some(Shells {
                        radii: radial.nodes.clone(),
                        per_shell: dirs.len(),
                    }),
                    cutoff: Some(radius),
                    exactness,
                }
            }
            GeometryFactor::RoundSphere { dim, radius } => {
                let longitude = resolution.angular;
                let polar = longitude.div_ceil(2);
                let (angles, w) = rules::sphere_rule(*dim, polar, longitude);
                let scale = radius.powi(*dim as i32);
                let per_shell = angles.len() / polar;
                let radii = (0..polar).map(|i| radius * angles[i * per_shell][0]).collect();
                FactorGrid {
                    points: angles.into_iter().map(FactorPoint::Sphere).collect(),
                    weights: w.into_iter().map(|x| x * scale).collect(),
                    shells: Some(Shells { radii, per_shell }),
                    cutoff: None,
                    exactness: (2 * polar - 1).min(longitude - 1),
                }
            }
            GeometryFactor::Cigar => {
                let s_max = match cutoff {
                    Cutoff::Auto { tail, spread } => cigar_tail_radius(tail, spread),
                    Cutoff::Fixed(r) => r,
                };
                let edges = rules::panel_edges(s_max, panels, Some(0.75));
                let radial = rules::composite_legendre(&edges, per_panel);
                let longitude = resolution.angular;
                let dphi = 2.0 * std::f64::consts::PI / longitude as f64;
                let mut points = Vec::with_capacity(radial.len() * longitude);
                let mut weights = Vec::with_capacity(points.capacity());
                for (s, ws) in radial.nodes.iter().zip(&radial.weights) {
                    let r = s.sinh();
                    for m in 0..longitude {
                        let phi = dphi * m as f64;
                        points.push(FactorPoint::Cigar([r * phi.cos(), r * phi.sin()]));
                        weights.push(ws * s.tanh() * dphi);
                    }
                }
                FactorGrid {
                    points,
                    weights,
                    shells: Some(Shells {
                        radii: radial.nodes.clone(),
                        per_shell: longitude,
                    }),
                    cutoff: Some(s_max),
                    exactness: (2 * per_panel - 1).min(longitude - 1),
                }
            }
            GeometryFactor::AbstractEinstein { volume, .. } => FactorGrid {
                points: vec![FactorPoint::Abstract],
                weights: vec![*volume],
                shells: None,
                cutoff: None,
                exactness: usize::MAX,
            },
        };
        factors.push(g);
    }
    Ok(QuadratureGrid {
        model_id: model.id.clone(),
        factors,
        resolution,
        cutoff,
    })
}

/// Deterministic pairwise sum; the split points depend only on the length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 256;
    const PAR: usize = 1 << 16;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let (a, b) = values.split_at(values.len() / 2);
    if values.len() >= PAR {
        let (x, y) = rayon::join(|| pairwise_sum(a), || pairwise_sum(b));
        x + y
    } else {
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// `Σ w_k v_k` over all grid nodes.
pub fn integrate(grid: &QuadratureGrid, values: &[f64]) -> Result<f64> {
    if values.len() != grid.node_count() {
        return Err(Error::InvalidParameter(format!(
            "{} values for {} nodes",
            values.len(),
            grid.node_count()
        )));
    }
    if let Some((node, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { node, value: *v });
    }
    let terms: Vec<f64> = values
        .par_iter()
        .enumerate()
        .map(|(k, v)| grid.weight(k) * v)
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Evaluate `integrand(point)` at every node and integrate.
pub fn integrate_fn<F>(grid: &QuadratureGrid, integrand: F) -> Result<f64>
where
    F: Fn(&ChartPoint) -> Result<f64> + Sync,
{
    let values = (0..grid.node_count())
        .into_par_iter()
        .map(|k| integrand(&grid.node(k).0))
        .collect::<Result<Vec<f64>>>()?;
    integrate(grid, &values)
}

/// The reference measure's normalising constant, `(4πτ)^{n/2}` or 1.
pub fn reference_log_prefactor(model: &SolitonModel) -> f64 {
    match model.kind {
        SolitonKind::Steady => 0.0,
        _ => 0.5 * model.total_dim as f64 * (4.0 * std::f64::consts::PI * model.tau).ln(),
    }
}

#[cfg(test)]
mod tests;
