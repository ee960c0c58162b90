use super::GeometryFactor;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Coordinates on a single factor.
///
/// Flat factors use Cartesian coordinates, spheres use hyperspherical angles
/// `(θ_1, …, θ_{k-1}, φ)` with `θ_i ∈ [0, π]`, the cigar uses the planar chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FactorPoint {
    Flat(Vec<f64>),
    Sphere(Vec<f64>),
    Cigar([f64; 2]),
    Abstract,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub factors: Vec<FactorPoint>,
}

impl ChartPoint {
    pub fn new(factors: Vec<FactorPoint>) -> Self {
        ChartPoint { factors }
    }

    pub fn flat(x: &[f64]) -> Self {
        ChartPoint::new(vec![FactorPoint::Flat(x.to_vec())])
    }

    pub fn sphere(angles: &[f64]) -> Self {
        ChartPoint::new(vec![FactorPoint::Sphere(angles.to_vec())])
    }

    pub fn cigar(x: f64, y: f64) -> Self {
        ChartPoint::new(vec![FactorPoint::Cigar([x, y])])
    }
}

/// Unit vector in `R^{k+1}` for hyperspherical angles on `S^k`.
pub fn sphere_unit_vector(angles: &[f64]) -> Vec<f64> {
    let k = angles.len();
    let mut out = vec![0.0; k + 1];
    let mut prod = 1.0;
    for (i, &theta) in angles[..k - 1].iter().enumerate() {
        out[i] = prod * theta.cos();
        prod *= theta.sin();
    }
    let phi = angles[k - 1];
    out[k - 1] = prod * phi.cos();
    out[k] = prod * phi.sin();
    out
}

pub(crate) fn validate(factor: &GeometryFactor, p: &FactorPoint) -> Result<()> {
    let ok = match (factor, p) {
        (GeometryFactor::FlatGaussian { dim, .. }, FactorPoint::Flat(x)) => {
            x.len() == *dim && x.iter().all(|v| v.is_finite())
        }
        (GeometryFactor::RoundSphere { dim, .. }, FactorPoint::Sphere(a)) => {
            a.len() == *dim
                && a.iter().all(|v| v.is_finite())
                && a[..dim - 1].iter().all(|t| (0.0..=PI).contains(t))
        }
        (GeometryFactor::Cigar, FactorPoint::Cigar(x)) => x.iter().all(|v| v.is_finite()),
        (GeometryFactor::AbstractEinstein { .. }, FactorPoint::Abstract) => true,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::UnsupportedChart(format!(
            "coordinates {p:?} are not valid on factor {factor:?}"
        )))
    }
}

pub(crate) fn factor_distance(factor: &GeometryFactor, a: &FactorPoint, b: &FactorPoint) -> Result<f64> {
    validate(factor, a)?;
    validate(factor, b)?;
    match (factor, a, b) {
        (GeometryFactor::FlatGaussian { .. }, FactorPoint::Flat(x), FactorPoint::Flat(y)) => {
            Ok(x.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt())
        }
        (GeometryFactor::RoundSphere { radius, .. }, FactorPoint::Sphere(x), FactorPoint::Sphere(y)) => {
            Ok(radius * great_circle_angle(&sphere_unit_vector(x), &sphere_unit_vector(y)))
        }
        (GeometryFactor::Cigar, FactorPoint::Cigar(x), FactorPoint::Cigar(y)) => {
            let rx = x[0].hypot(x[1]);
            let ry = y[0].hypot(y[1]);
            let cross = x[0] * y[1] - x[1] * y[0];
            let dot = x[0] * y[0] + x[1] * y[1];
            let same_ray = rx == 0.0 || ry == 0.0 || (cross.abs() <= 1e-12 * rx * ry && dot > 0.0);
            if same_ray {
                Ok((rx.asinh() - ry.asinh()).abs())
            } else {
                Err(Error::UnsupportedChart(
                    "cigar distances are only available along a common ray from the tip".into(),
                ))
            }
        }
        _ => Err(Error::UnsupportedChart("distance on an abstract factor".into())),
    }
}

/// Angle between unit vectors, accurate for nearby and antipodal pairs.
pub fn great_circle_angle(u: &[f64], v: &[f64]) -> f64 {
    let mut diff = 0.0;
    let mut sum = 0.0;
    for (a, b) in u.iter().zip(v) {
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

/// A tangent vector given factor by factor.  Flat and cigar components are in
/// chart coordinates, sphere components are ambient vectors in `R^{k+1}` (the
/// normal part is discarded), abstract factors take a single length component.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub components: Vec<Vec<f64>>,
}

impl TangentVector {
    pub fn new(components: Vec<Vec<f64>>) -> Self {
        TangentVector { components }
    }

    /// Fractions `|v_i|²_g / |v|²_g` carried by each factor.
    pub fn factor_weights(&self, model: &super::SolitonModel, p: &ChartPoint) -> Result<Vec<f64>> {
        if self.components.len() != model.factors.len() {
            return Err(Error::InvalidParameter("tangent vector has the wrong number of factors".into()));
        }
        let mut norms = Vec::with_capacity(self.components.len());
        for ((factor, fp), v) in model.factors.iter().zip(&p.factors).zip(&self.components) {
            let n2 = match (factor, fp) {
                (GeometryFactor::FlatGaussian { dim, .. }, _) => {
                    check_len(v, *dim)?;
                    v.iter().map(|c| c * c).sum::<f64>()
                }
                (GeometryFactor::RoundSphere { dim, .. }, FactorPoint::Sphere(a)) => {
                    check_len(v, dim + 1)?;
                    let x = sphere_unit_vector(a);
                    let radial: f64 = x.iter().zip(v).map(|(a, b)| a * b).sum();
                    v.iter().zip(&x).map(|(c, xi)| (c - radial * xi).powi(2)).sum::<f64>()
                }
                (GeometryFactor::Cigar, FactorPoint::Cigar(x)) => {
                    check_len(v, 2)?;
                    (v[0] * v[0] + v[1] * v[1]) / (1.0 + x[0] * x[0] + x[1] * x[1])
                }
                (GeometryFactor::AbstractEinstein { .. }, _) => {
                    check_len(v, 1)?;
                    v[0] * v[0]
                }
                _ => return Err(Error::UnsupportedChart("direction does not match point".into())),
            };
            norms.push(n2);
        }
        let total: f64 = norms.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter("zero tangent vector".into()));
        }
        Ok(norms.into_iter().map(|n| n / total).collect())
    }
}

fn check_len(v: &[f64], n: usize) -> Result<()> {
    if v.len() == n {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "tangent component has {} entries, expected {n}",
            v.len()
        )))
    }
}
