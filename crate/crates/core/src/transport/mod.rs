//! Wasserstein-2 distances between densities on catalog models and the HWI
//! inequality.
//!
//! On flat models every parametric density is a product over Cartesian
//! coordinates, so its optimal map to another such density acts coordinate by
//! coordinate and `W₂²` is a sum of one-dimensional quantile integrals.  Pairs
//! that are radially symmetric about a common centre can also be reduced to
//! their laws of `|x - centre|`; the optimal map between them is radial (a
//! standard fact about optimal transport that is taken as given here).
//! On a round sphere every parametric density is invariant under the
//! rotations fixing some axis.  For two such densities with a common axis
//! the colatitude is 1-Lipschitz for the geodesic distance and the monotone
//! map along meridians attains the bound, so `W₂` is the radius times the
//! one-dimensional distance between the colatitude laws.
//! Everything else goes through an exact discrete coupling on grid nodes.

mod hwi;
mod line;
mod simplex;

pub use hwi::{hwi_gap, HwiReport};

use crate::catalog::{geodesic_distance, FactorPoint, GeometryFactor, SolitonModel};
use crate::error::{Error, Result};
use crate::grid::{build_grid, normalize, sphere_zonal, Density, DensityKind, QuadratureGrid, Resolution, TiltProfile};
use crate::report::GridSpec;
use line::{w2_sq, Law};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Largest support handled by the exact coupling on grid nodes.
pub const MAX_DISCRETE_NODES: usize = 2000;

/// A coupling of two discrete probability vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub source: Vec<f64>,
    pub target: Vec<f64>,
    /// Nonzero entries `(i, j, mass)`, sorted by `(i, j)`.
    pub coupling: Vec<(usize, usize, f64)>,
    pub cost: f64,
}

impl TransportPlan {
    pub fn row_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.source.len()];
        for (i, _, m) in &self.coupling {
            out[*i] += m;
        }
        out
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.target.len()];
        for (_, j, m) in &self.coupling {
            out[*j] += m;
        }
        out
    }

    /// Largest deviation of a row or column sum from its marginal.
    pub fn marginal_error(&self) -> f64 {
        let rows = self.row_sums().iter().zip(&self.source).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let cols = self.col_sums().iter().zip(&self.target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        rows.max(cols)
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.source.len(), self.target.len());
        for (i, j, m) in &self.coupling {
            out[(*i, *j)] += m;
        }
        out
    }

    /// `i,j,mass` rows for the nonzero entries.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,mass\n");
        for (i, j, m) in &self.coupling {
            let _ = writeln!(out, "{i},{j},{m:e}");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum W2Method {
    #[serde(rename = "quantile-1d")]
    Quantile1d,
    #[serde(rename = "radial")]
    Radial,
    /// Sum of one-dimensional quantile integrals over Cartesian coordinates.
    #[serde(rename = "axis-product")]
    AxisProduct,
    #[serde(rename = "discrete-exact")]
    DiscreteExact,
    /// Colatitude quantiles of two densities symmetric about a common axis.
    #[serde(rename = "zonal")]
    Zonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct W2Result {
    pub value: f64,
    pub method: W2Method,
    #[serde(skip)]
    pub plan: Option<TransportPlan>,
    /// Change of the value under grid refinement.
    pub error_estimate: f64,
}

fn check_masses(name: &str, masses: &[f64]) -> Result<()> {
    if masses.is_empty() {
        return Err(Error::Infeasible(format!("{name} masses are empty")));
    }
    if let Some(m) = masses.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
        return Err(Error::Infeasible(format!("{name} mass {m} is negative or not finite")));
    }
    let total: f64 = masses.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Infeasible(format!("{name} masses sum to {total}, not 1")));
    }
    Ok(())
}

/// Exact optimal coupling for a cost matrix (rows: source, columns: target).
pub fn w2_discrete_exact(cost: &DMatrix<f64>, source: &[f64], target: &[f64]) -> Result<TransportPlan> {
    check_masses("source", source)?;
    check_masses("target", target)?;
    if cost.nrows() != source.len() || cost.ncols() != target.len() {
        return Err(Error::Infeasible(format!(
            "cost matrix is {}×{} for {} sources and {} targets",
            cost.nrows(),
            cost.ncols(),
            source.len(),
            target.len()
        )));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::Infeasible("cost matrix has non-finite entries".into()));
    }
    let (m, n) = (source.len(), target.len());
    let mut row_major = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            row_major.push(cost[(i, j)]);
        }
    }
    let sol = simplex::solve(&row_major, source, target)?;
    let cost_value = sol.flows.iter().map(|(i, j, f)| f * cost[(*i, *j)]).sum();
    Ok(TransportPlan {
        source: source.to_vec(),
        target: target.to_vec(),
        coupling: sol.flows,
        cost: cost_value,
    })
}

fn single_flat(model: &SolitonModel) -> Result<(usize, Vec<f64>)> {
    match model.factors.as_slice() {
        [GeometryFactor::FlatGaussian {
            dim,
            tilt,
            quadratic_scale,
        }] => Ok((*dim, tilt.iter().map(|b| -b / (2.0 * quadratic_scale)).collect())),
        _ => Err(Error::Unsupported(format!(
            "{} is not a single flat factor; use w2_discrete_exact on grid nodes",
            model.id
        ))),
    }
}

fn require_parametric(d: &Density) -> Result<()> {
    if d.is_gridded() {
        Err(Error::Unsupported(
            "quantile routes need pointwise densities; use w2_discrete_exact on grid nodes".into(),
        ))
    } else {
        Ok(())
    }
}

/// Centre of symmetry of a radially symmetric density on a flat model.
fn radial_centre(model: &SolitonModel, d: &Density, centre: &[f64]) -> Result<Option<Vec<f64>>> {
    Ok(match &d.kind {
        DensityKind::ParamGaussian { .. } => {
            let shift = d.shifts(model)?[0];
            Some(
                centre
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c + shift.get(i).copied().unwrap_or(0.0))
                    .collect(),
            )
        }
        DensityKind::TiltedReference { epsilon, profile } => {
            (*profile == TiltProfile::Radial || *epsilon == 0.0).then(|| centre.to_vec())
        }
        DensityKind::Gridded { .. } => None,
    })
}

fn log_density_at<'a>(model: &'a SolitonModel, d: &'a Density) -> Result<impl Fn(&[f64]) -> f64 + Sync + 'a> {
    let shift = d.shifts(model)?[0];
    Ok(move |x: &[f64]| {
        crate::grid::evaluate_factor(model, 0, &FactorPoint::Flat(x.to_vec()), &d.kind, shift)
            .map_or(f64::NEG_INFINITY, |s| s.ell)
    })
}

fn cutoff_radius(model: &SolitonModel, spec: &GridSpec) -> Result<f64> {
    let g = build_grid(model, Resolution::new(crate::grid::PANEL_NODES, 4), spec.cutoff)?;
    Ok(g.cutoff_radius())
}

fn shift_norm(model: &SolitonModel, d: &Density) -> Result<f64> {
    Ok(d.shifts(model)?[0].iter().map(|m| m * m).sum::<f64>().sqrt())
}

fn line_panels(spec: &GridSpec) -> usize {
    (spec.resolution.radial / 4).max(8)
}

fn ray_law<'a>(model: &'a SolitonModel, d: &'a Density, centre: &[f64], radius: f64, panels: usize) -> Result<Law<'a>> {
    let f = log_density_at(model, d)?;
    let centre = centre.to_vec();
    let power = centre.len() as f64 - 1.0;
    Law::new(
        move |r: f64| {
            let mut x = centre.clone();
            x[0] += r;
            f(&x) + power * r.ln()
        },
        0.0,
        radius,
        panels,
    )
}

fn axis_law<'a>(model: &'a SolitonModel, d: &'a Density, base: &[f64], k: usize, radius: f64, panels: usize) -> Result<Law<'a>> {
    let f = log_density_at(model, d)?;
    let base = base.to_vec();
    let (lo, hi) = (base[k] - radius, base[k] + radius);
    Law::new(
        move |t: f64| {
            let mut x = base.clone();
            x[k] = t;
            f(&x)
        },
        lo,
        hi,
        panels,
    )
}

/// `W₂²` of the radial laws, with `panels` quadrature panels.
fn radial_sq(model: &SolitonModel, a: &Density, b: &Density, centre: &[f64], radius: f64, panels: usize) -> Result<f64> {
    Ok(w2_sq(
        &ray_law(model, a, centre, radius, panels)?,
        &ray_law(model, b, centre, radius, panels)?,
    ))
}

/// `Σ_k W₂²` of the coordinate marginals, with `panels` panels per axis.
fn axis_sq(model: &SolitonModel, a: &Density, b: &Density, centre: &[f64], radius: f64, panels: usize) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..centre.len() {
        total += w2_sq(
            &axis_law(model, a, centre, k, radius, panels)?,
            &axis_law(model, b, centre, k, radius, panels)?,
        );
    }
    Ok(total)
}

fn with_refinement(coarse: impl Fn(usize) -> Result<f64>, panels: usize, method: W2Method) -> Result<W2Result> {
    let v = coarse(panels)?.max(0.0).sqrt();
    let fine = coarse(2 * panels)?.max(0.0).sqrt();
    Ok(W2Result {
        value: v,
        method,
        plan: None,
        error_estimate: (fine - v).abs(),
    })
}

/// `W₂` between densities on a single flat factor by quantile functions:
/// on the line directly, and on `R^n` through the laws of `|x - centre|`.
///
/// Needs both densities radially symmetric about the same centre when
/// `n ≥ 2`; other pairs are rejected in favour of the discrete solver.
pub fn w2_radial(model: &SolitonModel, a: &Density, b: &Density, spec: &GridSpec) -> Result<W2Result> {
    let (dim, centre) = single_flat(model)?;
    require_parametric(a)?;
    require_parametric(b)?;
    let radius = cutoff_radius(model, spec)? + shift_norm(model, a)?.max(shift_norm(model, b)?);
    let panels = line_panels(spec);
    if dim == 1 {
        return with_refinement(|p| axis_sq(model, a, b, &centre, radius, p), panels, W2Method::Quantile1d);
    }
    let (ca, cb) = (radial_centre(model, a, &centre)?, radial_centre(model, b, &centre)?);
    match (ca, cb) {
        (Some(ca), Some(cb)) if ca.iter().zip(&cb).all(|(x, y)| (x - y).abs() <= 1e-12) => {
            with_refinement(|p| radial_sq(model, a, b, &ca, radius, p), panels, W2Method::Radial)
        }
        _ => Err(Error::Unsupported(
            "densities are not radially symmetric about a common centre; use w2_discrete_exact on grid nodes".into(),
        )),
    }
}

/// `W₂` between parametric densities on a single flat factor as the sum of
/// the one-dimensional distances between coordinate marginals.
pub fn w2_axes(model: &SolitonModel, a: &Density, b: &Density, spec: &GridSpec) -> Result<W2Result> {
    let (dim, centre) = single_flat(model)?;
    require_parametric(a)?;
    require_parametric(b)?;
    let radius = cutoff_radius(model, spec)? + shift_norm(model, a)?.max(shift_norm(model, b)?);
    let method = if dim == 1 {
        W2Method::Quantile1d
    } else {
        W2Method::AxisProduct
    };
    with_refinement(|p| axis_sq(model, a, b, &centre, radius, p), line_panels(spec), method)
}

/// Probability masses of a density at the grid nodes.
pub fn node_masses(model: &SolitonModel, grid: &QuadratureGrid, d: &Density) -> Result<Vec<f64>> {
    let d = normalize(model, grid, d)?;
    let raw: Vec<f64> = match d.gridded_values() {
        Some(v) => (0..grid.node_count()).map(|k| v[k] * grid.weight(k)).collect(),
        None => (0..grid.node_count())
            .map(|k| {
                let (p, w) = grid.node(k);
                Ok(d.log_density(model, &p)?.exp() * w)
            })
            .collect::<Result<_>>()?,
    };
    let total: f64 = raw.iter().sum();
    Ok(raw.iter().map(|m| m / total).collect())
}

/// Exact discrete `W₂` between the node masses of two densities, with squared
/// geodesic distances between nodes as the cost.
pub fn w2_on_nodes(model: &SolitonModel, grid: &QuadratureGrid, a: &Density, b: &Density) -> Result<W2Result> {
    let n = grid.node_count();
    if n > MAX_DISCRETE_NODES {
        return Err(Error::Unsupported(format!(
            "{n} grid nodes exceed the {MAX_DISCRETE_NODES}-node limit of the exact coupling"
        )));
    }
    let (ma, mb) = (node_masses(model, grid, a)?, node_masses(model, grid, b)?);
    let points: Vec<_> = (0..n).map(|k| grid.node(k).0).collect();
    let mut cost = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let d = geodesic_distance(model, &points[i], &points[j])?;
            cost[(i, j)] = d * d;
            cost[(j, i)] = d * d;
        }
    }
    let plan = w2_discrete_exact(&cost, &ma, &mb)?;
    Ok(W2Result {
        value: plan.cost.max(0.0).sqrt(),
        method: W2Method::DiscreteExact,
        plan: Some(plan),
        error_estimate: f64::NAN,
    })
}

/// Sphere grids of about `target` nodes and about twice as many.
fn sphere_levels(model: &SolitonModel, target: usize, cutoff: crate::grid::Cutoff) -> Result<[QuadratureGrid; 2]> {
    let largest = |limit: usize| -> Result<QuadratureGrid> {
        let mut best = None;
        let mut l = 4;
        loop {
            let g = build_grid(model, Resolution::new(crate::grid::PANEL_NODES, l), cutoff)?;
            if g.node_count() > limit {
                break;
            }
            best = Some(g);
            l += 2;
        }
        best.ok_or_else(|| Error::Unsupported("sphere grid too large for the exact coupling".into()))
    };
    Ok([largest(target)?, largest(2 * target)?])
}

/// `W₂` on a single round sphere from exact couplings of the node masses on
/// two nested grid sizes (at most [`MAX_DISCRETE_NODES`] nodes); the error
/// estimate is the change between them.
pub fn w2_sphere(model: &SolitonModel, a: &Density, b: &Density, spec: &GridSpec) -> Result<W2Result> {
    if !matches!(model.factors.as_slice(), [GeometryFactor::RoundSphere { .. }]) {
        return Err(Error::Unsupported(format!("{} is not a single round sphere", model.id)));
    }
    if a.is_gridded() || b.is_gridded() {
        return Err(Error::Unsupported(
            "sphere distances resample the densities; pass parametric densities".into(),
        ));
    }
    let [coarse, fine] = sphere_levels(model, MAX_DISCRETE_NODES / 2, spec.cutoff)?;
    let c = w2_on_nodes(model, &coarse, a, b)?;
    let mut f = w2_on_nodes(model, &fine, a, b)?;
    f.error_estimate = (f.value - c.value).abs();
    Ok(f)
}

/// `W₂` on a single round sphere between densities symmetric about a common
/// axis, from the quantile functions of their colatitudes.
pub fn w2_sphere_zonal(model: &SolitonModel, a: &Density, b: &Density, spec: &GridSpec) -> Result<W2Result> {
    let [GeometryFactor::RoundSphere { dim, radius }] = model.factors.as_slice() else {
        return Err(Error::Unsupported(format!("{} is not a single round sphere", model.id)));
    };
    let zonal = |d: &Density| -> Result<_> {
        sphere_zonal(model, 0, &d.kind, d.shifts(model)?[0])
            .ok_or_else(|| Error::Unsupported("gridded densities have no symmetry axis".into()))
    };
    let ((axis_a, pdf_a), (axis_b, pdf_b)) = (zonal(a)?, zonal(b)?);
    let axis = match (axis_a, axis_b) {
        (Some(p), Some(q)) if p.iter().zip(&q).any(|(x, y)| (x - y).abs() > 1e-12) => {
            return Err(Error::Unsupported(
                "densities are symmetric about different axes; use the discrete coupling".into(),
            ))
        }
        (p, q) => p.or(q),
    };
    let power = *dim as f64 - 1.0;
    fn law<'a>(pdf: &'a (dyn Fn(f64) -> f64 + Sync), power: f64, panels: usize) -> Result<Law<'a>> {
        Law::new(move |t: f64| pdf(t.cos()) + power * t.sin().ln(), 0.0, std::f64::consts::PI, panels)
    }
    let panels = line_panels(spec);
    let mut r = with_refinement(
        |p| {
            if axis.is_none() {
                return Ok(0.0);
            }
            Ok(radius * radius * w2_sq(&law(&*pdf_a, power, p)?, &law(&*pdf_b, power, p)?))
        },
        panels,
        W2Method::Zonal,
    )?;
    r.error_estimate = r.error_estimate.max(f64::EPSILON * radius);
    Ok(r)
}

/// `W₂` by the most accurate route available for the model and densities.
pub fn w2(model: &SolitonModel, a: &Density, b: &Density, spec: &GridSpec) -> Result<W2Result> {
    match model.factors.as_slice() {
        [GeometryFactor::FlatGaussian { .. }] => match w2_radial(model, a, b, spec) {
            Err(Error::Unsupported(_)) if !a.is_gridded() && !b.is_gridded() => w2_axes(model, a, b, spec),
            other => other,
        },
        [GeometryFactor::RoundSphere { .. }] => match w2_sphere_zonal(model, a, b, spec) {
            Err(Error::Unsupported(_)) => w2_sphere(model, a, b, spec),
            other => other,
        },
        _ => Err(Error::Unsupported(format!("no Wasserstein route for {}", model.id))),
    }
}
