//! Pointwise evaluation of parametric densities, factor by factor.
//!
//! Every parametric density is a product of factor densities, so `log ρ`,
//! `|∇log ρ|²`, `⟨∇log ρ, ∇f⟩` and `Δ log ρ` are sums of factor terms and the
//! functionals that are linear in them reduce to one integral per factor.

use super::density::{Density, DensityKind, TiltProfile};
use super::{pairwise_sum, QuadratureGrid};
use crate::catalog::{sphere_unit_vector, FactorGeometry, FactorPoint, GeometryFactor, SolitonModel};
use crate::error::{Error, Result};
use rayon::prelude::*;

/// Unnormalised log density of one factor and its derivatives at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSample {
    pub geom: FactorGeometry,
    pub ell: f64,
    pub grad_ell_sq: f64,
    /// `⟨∇ log ρ, ∇f⟩`.
    pub dot: f64,
    pub lap_ell: f64,
    pub grad: Vec<f64>,
}

fn shift_dim(factor: &GeometryFactor) -> usize {
    match factor {
        GeometryFactor::FlatGaussian { dim, .. } | GeometryFactor::RoundSphere { dim, .. } => *dim,
        GeometryFactor::Cigar => 2,
        GeometryFactor::AbstractEinstein { .. } => 0,
    }
}

/// Split a concatenated shift vector into per-factor slices (empty = no shift).
pub(crate) fn factor_shifts<'a>(model: &SolitonModel, shift: &'a [f64]) -> Result<Vec<&'a [f64]>> {
    if shift.is_empty() {
        return Ok(vec![&[][..]; model.factors.len()]);
    }
    let total: usize = model.factors.iter().map(shift_dim).sum();
    if shift.len() != total || shift.iter().any(|m| !m.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "shift has {} entries, model {} needs {total}",
            shift.len(),
            model.id
        )));
    }
    let mut out = Vec::with_capacity(model.factors.len());
    let mut at = 0;
    for f in &model.factors {
        let d = shift_dim(f);
        out.push(&shift[at..at + d]);
        at += d;
    }
    Ok(out)
}

fn scale_of(kind: &DensityKind, index: usize) -> f64 {
    match kind {
        DensityKind::ParamGaussian {
            scale, factor_scales, ..
        } => factor_scales.as_ref().map_or(*scale, |v| v[index]),
        _ => 1.0,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Point on the unit sphere reached from the north pole `e_0` along `v`
/// (ambient components `1..=k`, arc length `|v|/radius`).
fn sphere_shift_target(v: &[f64], radius: f64) -> Vec<f64> {
    let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut out = vec![0.0; v.len() + 1];
    let a = len / radius;
    out[0] = a.cos();
    if len > 0.0 {
        for (o, x) in out[1..].iter_mut().zip(v) {
            *o = a.sin() * x / len;
        }
    }
    out
}

pub(crate) type ZonalLogPdf = Box<dyn Fn(f64) -> f64 + Sync>;

/// A sphere factor density as a function of `c = ⟨x̂, axis⟩`: every
/// non-gridded family is invariant under rotations fixing its axis.  The
/// axis is `None` when the density is uniform.
pub(crate) fn sphere_zonal(
    model: &SolitonModel,
    index: usize,
    kind: &DensityKind,
    shift: &[f64],
) -> Option<(Option<Vec<f64>>, ZonalLogPdf)> {
    let GeometryFactor::RoundSphere { dim, radius } = &model.factors[index] else {
        return None;
    };
    let mut north = vec![0.0; dim + 1];
    north[0] = 1.0;
    let (axis, uniform, log_pdf): (Vec<f64>, bool, ZonalLogPdf) = match kind {
        DensityKind::ParamGaussian { .. } => {
            let kappa = radius * radius / (2.0 * model.tau) * (1.0 / scale_of(kind, index) - 1.0);
            let axis = if shift.is_empty() { north } else { sphere_shift_target(shift, *radius) };
            (axis, kappa == 0.0, Box::new(move |c| kappa * c))
        }
        &DensityKind::TiltedReference { epsilon, profile } => match profile {
            TiltProfile::Height => (north, epsilon == 0.0, Box::new(move |c| -epsilon * c)),
            TiltProfile::Radial => (north, epsilon == 0.0, Box::new(move |c| -epsilon * c * c)),
        },
        DensityKind::Gridded { .. } => return None,
    };
    Some(((!uniform).then_some(axis), log_pdf))
}

/// Unnormalised factor log density `ℓ` with gradient data.
pub(crate) fn evaluate_factor(
    model: &SolitonModel,
    index: usize,
    fp: &FactorPoint,
    kind: &DensityKind,
    shift: &[f64],
) -> Result<PointSample> {
    let geom = model.factor_geometry(index, fp)?;
    let factor = &model.factors[index];
    let s = scale_of(kind, index);
    let sample = match (factor, fp) {
        (
            GeometryFactor::FlatGaussian {
                dim,
                tilt,
                quadratic_scale: q,
            },
            FactorPoint::Flat(x),
        ) => {
            let d = *dim as f64;
            let y: Vec<f64> = x.iter().zip(tilt).map(|(xi, b)| xi + b / (2.0 * q)).collect();
            let grad_f: Vec<f64> = y.iter().map(|v| 2.0 * q * v).collect();
            let (ell, grad, lap) = match kind {
                DensityKind::ParamGaussian { .. } => {
                    let z: Vec<f64> = y
                        .iter()
                        .enumerate()
                        .map(|(i, v)| v - shift.get(i).copied().unwrap_or(0.0))
                        .collect();
                    let ell = -q * dot(&z, &z) / s;
                    let grad: Vec<f64> = z.iter().map(|v| -2.0 * q * v / s).collect();
                    (ell, grad, -2.0 * q * d / s)
                }
                DensityKind::TiltedReference { epsilon, profile } => match profile {
                    TiltProfile::Height => {
                        let mut grad: Vec<f64> = grad_f.iter().map(|g| -g).collect();
                        grad[0] -= epsilon;
                        (-geom.f - epsilon * y[0], grad, -2.0 * q * d)
                    }
                    TiltProfile::Radial => {
                        let grad = grad_f.iter().map(|g| -(1.0 + epsilon) * g).collect();
                        (-geom.f - epsilon * q * dot(&y, &y), grad, -(1.0 + epsilon) * 2.0 * q * d)
                    }
                },
                DensityKind::Gridded { .. } => return Err(gridded()),
            };
            PointSample {
                geom,
                ell,
                grad_ell_sq: dot(&grad, &grad),
                dot: dot(&grad, &grad_f),
                lap_ell: lap,
                grad,
            }
        }
        (GeometryFactor::RoundSphere { dim, radius }, FactorPoint::Sphere(angles)) => {
            let k = *dim as f64;
            let r2 = radius * radius;
            let xh = sphere_unit_vector(angles);
            // Tangential gradient of the ambient linear function ⟨x̂, m⟩ on the sphere of radius r.
            let lin_grad = |m: &[f64], c: f64| -> Vec<f64> { m.iter().zip(&xh).map(|(mi, xi)| (mi - c * xi) / radius).collect() };
            let mut north = vec![0.0; xh.len()];
            north[0] = 1.0;
            let (ell, grad, grad_sq, lap) = match kind {
                DensityKind::ParamGaussian { .. } => {
                    let kappa = r2 / (2.0 * model.tau) * (1.0 / s - 1.0);
                    let m = if shift.is_empty() {
                        north
                    } else {
                        sphere_shift_target(shift, *radius)
                    };
                    let c = dot(&xh, &m).clamp(-1.0, 1.0);
                    let grad = lin_grad(&m, c).into_iter().map(|g| kappa * g).collect();
                    (kappa * c, grad, kappa * kappa * (1.0 - c * c) / r2, -kappa * k * c / r2)
                }
                DensityKind::TiltedReference { epsilon, profile } => {
                    let c = xh[0];
                    let gc = lin_grad(&north, c);
                    let gc_sq = (1.0 - c * c) / r2;
                    match profile {
                        TiltProfile::Height => (
                            -epsilon * c,
                            gc.iter().map(|g| -epsilon * g).collect(),
                            epsilon * epsilon * gc_sq,
                            epsilon * k * c / r2,
                        ),
                        TiltProfile::Radial => (
                            -epsilon * c * c,
                            gc.iter().map(|g| -2.0 * epsilon * c * g).collect(),
                            4.0 * epsilon * epsilon * c * c * gc_sq,
                            -epsilon * (-2.0 * k * c * c + 2.0 * (1.0 - c * c)) / r2,
                        ),
                    }
                }
                DensityKind::Gridded { .. } => return Err(gridded()),
            };
            PointSample {
                geom,
                ell,
                grad_ell_sq: grad_sq,
                dot: 0.0,
                lap_ell: lap,
                grad,
            }
        }
        (GeometryFactor::Cigar, FactorPoint::Cigar([x, y])) => {
            let r2 = x * x + y * y;
            let om = 1.0 + r2;
            let gf = [2.0 * x / om, 2.0 * y / om];
            // Euclidean gradient and Laplacian of ℓ; the metric is e/(1+r²).
            let (ell, ge, lap_e) = match kind {
                DensityKind::ParamGaussian { .. } => {
                    let m = if shift.is_empty() { [0.0, 0.0] } else { [shift[0], shift[1]] };
                    let z = [x - m[0], y - m[1]];
                    let oz = 1.0 + z[0] * z[0] + z[1] * z[1];
                    (
                        -oz.ln() / s,
                        [-2.0 * z[0] / (s * oz), -2.0 * z[1] / (s * oz)],
                        -4.0 / (s * oz * oz),
                    )
                }
                DensityKind::TiltedReference { epsilon, profile } => match profile {
                    TiltProfile::Height => {
                        let sq = om.sqrt();
                        let phi = x / sq;
                        let gphi = [(1.0 + y * y) / (om * sq), -x * y / (om * sq)];
                        // Δ_g φ = φ(3 tanh² s - 4) with tanh² s = r²/(1 + r²).
                        let lap_g_phi = phi * (3.0 * r2 / om - 4.0);
                        (
                            -geom.f - epsilon * phi,
                            [-gf[0] - epsilon * gphi[0], -gf[1] - epsilon * gphi[1]],
                            (-geom.lap_f - epsilon * lap_g_phi) / om,
                        )
                    }
                    TiltProfile::Radial => (
                        -(1.0 + epsilon) * geom.f,
                        [-(1.0 + epsilon) * gf[0], -(1.0 + epsilon) * gf[1]],
                        -(1.0 + epsilon) * geom.lap_f / om,
                    ),
                },
                DensityKind::Gridded { .. } => return Err(gridded()),
            };
            PointSample {
                geom,
                ell,
                grad_ell_sq: om * (ge[0] * ge[0] + ge[1] * ge[1]),
                dot: om * (ge[0] * gf[0] + ge[1] * gf[1]),
                lap_ell: om * lap_e,
                grad: vec![om * ge[0], om * ge[1]],
            }
        }
        (GeometryFactor::AbstractEinstein { .. }, FactorPoint::Abstract) => PointSample {
            geom,
            ell: 0.0,
            grad_ell_sq: 0.0,
            dot: 0.0,
            lap_ell: 0.0,
            grad: Vec::new(),
        },
        _ => return Err(Error::UnsupportedChart(format!("point {fp:?} on factor {factor:?}"))),
    };
    Ok(sample)
}

fn gridded() -> Error {
    Error::Unsupported("gridded densities have no closed-form factor data".into())
}

/// `log Σ w_k e^{ℓ_k}` without overflow.
pub(crate) fn log_sum_exp(terms: &[(f64, f64)]) -> f64 {
    let m = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    let vals: Vec<f64> = terms.iter().map(|(l, w)| w * (l - m).exp()).collect();
    m + pairwise_sum(&vals).ln()
}

/// Whether the factor density depends only on the shell coordinate of the factor grid.
fn is_shell_symmetric(factor: &GeometryFactor, kind: &DensityKind, shift: &[f64]) -> bool {
    let unshifted = shift.iter().all(|m| *m == 0.0);
    match (factor, kind) {
        (GeometryFactor::AbstractEinstein { .. }, _) => true,
        (GeometryFactor::RoundSphere { .. }, _) => unshifted,
        (_, DensityKind::ParamGaussian { .. }) => unshifted,
        (_, DensityKind::TiltedReference { profile, .. }) => *profile == TiltProfile::Radial,
        _ => false,
    }
}

/// Normalised samples of one factor density on its factor grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSamples {
    pub weights: Vec<f64>,
    pub rho: Vec<f64>,
    pub points: Vec<PointSample>,
    /// `log Σ w e^{ℓ}` over the factor grid, already subtracted from `points[k].ell`.
    pub log_norm: f64,
}

impl FactorSamples {
    /// `∫ g ρ` over this factor.
    pub fn expect(&self, g: impl Fn(&PointSample) -> f64) -> f64 {
        let terms: Vec<f64> = self
            .points
            .iter()
            .zip(self.weights.iter().zip(&self.rho))
            .map(|(p, (w, r))| if *r == 0.0 { 0.0 } else { w * r * g(p) })
            .collect();
        pairwise_sum(&terms)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn build_factor(
    model: &SolitonModel,
    grid: &QuadratureGrid,
    index: usize,
    density: &Density,
    shift: &[f64],
    reduce: bool,
) -> Result<FactorSamples> {
    let g = &grid.factors[index];
    let factor = &model.factors[index];
    let (points, weights): (Vec<&FactorPoint>, Vec<f64>) = match &g.shells {
        Some(shells) if reduce && is_shell_symmetric(factor, &density.kind, shift) => shells
            .radii
            .iter()
            .enumerate()
            .map(|(i, _)| {
                let block = &g.weights[i * shells.per_shell..(i + 1) * shells.per_shell];
                (&g.points[i * shells.per_shell], pairwise_sum(block))
            })
            .unzip(),
        _ => (g.points.iter().collect(), g.weights.clone()),
    };
    let mut samples = points
        .par_iter()
        .map(|fp| evaluate_factor(model, index, fp, &density.kind, shift))
        .collect::<Result<Vec<_>>>()?;
    if let Some((node, p)) = samples
        .iter()
        .enumerate()
        .find(|(_, p)| !(p.ell.is_finite() && p.grad_ell_sq.is_finite() && p.lap_ell.is_finite()))
    {
        return Err(Error::NonFinite { node, value: p.ell });
    }
    let terms: Vec<(f64, f64)> = samples.iter().zip(&weights).map(|(p, w)| (p.ell, *w)).collect();
    let log_norm = log_sum_exp(&terms);
    let mut rho = Vec::with_capacity(samples.len());
    for p in samples.iter_mut() {
        p.ell -= log_norm;
        rho.push(p.ell.exp());
    }
    Ok(FactorSamples {
        weights,
        rho,
        points: samples,
        log_norm,
    })
}

/// Normalised per-factor samples of a parametric density.  Factors on which
/// the density is constant along grid shells are collapsed to one node per shell.
pub fn factor_samples(model: &SolitonModel, grid: &QuadratureGrid, density: &Density) -> Result<Vec<FactorSamples>> {
    factor_samples_with(model, grid, density, true)
}

fn factor_samples_with(
    model: &SolitonModel,
    grid: &QuadratureGrid,
    density: &Density,
    reduce: bool,
) -> Result<Vec<FactorSamples>> {
    if grid.model_id != model.id {
        return Err(Error::InvalidParameter(format!(
            "grid for {} used with model {}",
            grid.model_id, model.id
        )));
    }
    if density.is_gridded() {
        return Err(gridded());
    }
    density.validate(model)?;
    let shifts = density.shifts(model)?;
    (0..model.factors.len())
        .map(|i| build_factor(model, grid, i, density, shifts[i], reduce))
        .collect()
}

/// Totals of the factor data at one product node (normalised `ℓ`, `f` with offset).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NodeTotals {
    pub f: f64,
    pub grad_f_sq: f64,
    pub lap_f: f64,
    pub scalar: f64,
    pub ell: f64,
    pub grad_ell_sq: f64,
    pub dot: f64,
    pub lap_ell: f64,
}

/// `∫ g ρ dΓ` by direct summation over every node of the product grid.
///
/// This is the slow route; it makes no use of the product structure and
/// accepts integrands that are not sums of factor terms.
pub fn product_expectation<G>(model: &SolitonModel, grid: &QuadratureGrid, density: &Density, g: G) -> Result<f64>
where
    G: Fn(&NodeTotals) -> f64 + Sync,
{
    let fs = factor_samples_with(model, grid, density, false)?;
    let terms: Vec<f64> = (0..grid.node_count())
        .into_par_iter()
        .map(|k| {
            let idx = grid.split_index(k);
            let mut t = NodeTotals {
                f: model.potential_offset,
                ..Default::default()
            };
            let mut w = 1.0;
            for (s, &i) in fs.iter().zip(&idx) {
                let p = &s.points[i];
                w *= s.weights[i];
                t.f += p.geom.f;
                t.grad_f_sq += p.geom.grad_f_sq;
                t.lap_f += p.geom.lap_f;
                t.scalar += p.geom.scalar;
                t.ell += p.ell;
                t.grad_ell_sq += p.grad_ell_sq;
                t.dot += p.dot;
                t.lap_ell += p.lap_ell;
            }
            let rho = t.ell.exp();
            if rho == 0.0 {
                0.0
            } else {
                w * rho * g(&t)
            }
        })
        .collect();
    Ok(pairwise_sum(&terms))
}
