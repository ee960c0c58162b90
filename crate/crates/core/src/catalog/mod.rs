//! Closed-form model solitons.
//!
//! Conventions: a shrinker satisfies `Ric + Hess f = g/(2τ)`, an expander
//! `Ric + g/2 = Hess f` and a steady soliton `Ric = Hess f`.  The potential is
//! normalised so that `∫ e^{-f} (4πτ)^{-n/2} dΓ = 1` (shrinkers, expanders) or
//! `∫ e^{-f} dΓ = 1` (steady).

mod ids;
mod point;

pub use ids::{default_catalog_ids, parse_model_id};
pub use point::{great_circle_angle, sphere_unit_vector, ChartPoint, FactorPoint, TangentVector};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

/// Residual bound enforced when a catalog entry is constructed.
pub const CONSTRUCTION_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolitonKind {
    Shrinking,
    Steady,
    Expanding,
}

impl SolitonKind {
    pub fn label(self) -> &'static str {
        match self {
            SolitonKind::Shrinking => "shrinking",
            SolitonKind::Steady => "steady",
            SolitonKind::Expanding => "expanding",
        }
    }

    pub fn invariant_symbol(self) -> &'static str {
        match self {
            SolitonKind::Shrinking => "mu_s",
            SolitonKind::Steady => "lambda",
            SolitonKind::Expanding => "mu_e",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GeometryFactor {
    /// `R^dim` with potential `q|x|² + b·x`.
    FlatGaussian {
        dim: usize,
        tilt: Vec<f64>,
        quadratic_scale: f64,
    },
    RoundSphere { dim: usize, radius: f64 },
    /// Hamilton's cigar `(dx² + dy²)/(1 + x² + y²)` with potential `log(1 + r²)`.
    Cigar,
    /// Compact Einstein factor known only through its invariants.  `diameter`
    /// is an upper bound used to bracket ball volumes.
    AbstractEinstein {
        dim: usize,
        volume: f64,
        scalar_curv: f64,
        diameter: f64,
    },
}

impl GeometryFactor {
    pub fn flat(dim: usize, tau: f64) -> Self {
        GeometryFactor::FlatGaussian {
            dim,
            tilt: vec![0.0; dim],
            quadratic_scale: 1.0 / (4.0 * tau),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            GeometryFactor::FlatGaussian { dim, .. }
            | GeometryFactor::RoundSphere { dim, .. }
            | GeometryFactor::AbstractEinstein { dim, .. } => *dim,
            GeometryFactor::Cigar => 2,
        }
    }

    pub fn is_chartable(&self) -> bool {
        !matches!(self, GeometryFactor::AbstractEinstein { .. })
    }

    pub fn is_compact(&self) -> bool {
        matches!(
            self,
            GeometryFactor::RoundSphere { .. } | GeometryFactor::AbstractEinstein { .. }
        )
    }

    /// Total mass of `e^{-f_factor} dΓ`.
    pub fn log_mass(&self) -> f64 {
        match self {
            GeometryFactor::FlatGaussian {
                dim,
                tilt,
                quadratic_scale,
            } => {
                let b2: f64 = tilt.iter().map(|b| b * b).sum();
                0.5 * *dim as f64 * (PI / quadratic_scale).ln() + b2 / (4.0 * quadratic_scale)
            }
            GeometryFactor::RoundSphere { dim, radius } => log_sphere_area(*dim, *radius),
            GeometryFactor::Cigar => PI.ln(),
            GeometryFactor::AbstractEinstein { volume, .. } => volume.ln(),
        }
    }

    /// Riemannian volume of a compact factor.
    pub fn volume(&self) -> Option<f64> {
        match self {
            GeometryFactor::RoundSphere { dim, radius } => Some(log_sphere_area(*dim, *radius).exp()),
            GeometryFactor::AbstractEinstein { volume, .. } => Some(*volume),
            _ => None,
        }
    }

    pub fn diameter(&self) -> Option<f64> {
        match self {
            GeometryFactor::RoundSphere { radius, .. } => Some(PI * radius),
            GeometryFactor::AbstractEinstein { diameter, .. } => Some(*diameter),
            _ => None,
        }
    }

    /// Constant lower and upper Ricci eigenvalue bounds, where they exist.
    pub fn ricci_bounds(&self) -> (f64, f64) {
        match self {
            GeometryFactor::FlatGaussian { .. } => (0.0, 0.0),
            GeometryFactor::RoundSphere { dim, radius } => {
                let k = (*dim as f64 - 1.0) / (radius * radius);
                (k, k)
            }
            GeometryFactor::Cigar => (0.0, 2.0),
            GeometryFactor::AbstractEinstein {
                dim, scalar_curv, ..
            } => {
                let k = scalar_curv / *dim as f64;
                (k, k)
            }
        }
    }

    fn describe(&self) -> String {
        match self {
            GeometryFactor::FlatGaussian { dim, .. } => format!("R^{dim}"),
            GeometryFactor::RoundSphere { dim, radius } => format!("S^{dim}(r={radius:.6})"),
            GeometryFactor::Cigar => "cigar".into(),
            GeometryFactor::AbstractEinstein { dim, volume, .. } => {
                format!("N^{dim}(vol={volume})")
            }
        }
    }
}

/// Area of the round sphere `S^k` of the given radius, in log form.
pub fn log_sphere_area(k: usize, radius: f64) -> f64 {
    let kp1 = k as f64 + 1.0;
    2f64.ln() + 0.5 * kp1 * PI.ln() - ln_gamma(0.5 * kp1) + k as f64 * radius.ln()
}

/// Volume of the Euclidean unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let h = 0.5 * n as f64;
    (h * PI.ln() - ln_gamma(h + 1.0)).exp()
}

/// Per-point geometric data of one factor, all with respect to the factor metric.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FactorGeometry {
    pub f: f64,
    pub grad_f_sq: f64,
    pub lap_f: f64,
    pub scalar: f64,
    /// Isotropic value of `Ric + Hess f` on this factor.
    pub ric_hess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolitonModel {
    pub id: String,
    pub kind: SolitonKind,
    pub factors: Vec<GeometryFactor>,
    pub tau: f64,
    pub potential_offset: f64,
    pub total_dim: usize,
}

impl SolitonModel {
    /// Assemble a model and compute the normalising offset.  No consistency check
    /// is made here; catalog constructors go through [`SolitonModel::checked`].
    pub fn from_factors(
        id: impl Into<String>,
        kind: SolitonKind,
        factors: Vec<GeometryFactor>,
        tau: f64,
    ) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
        }
        if factors.is_empty() {
            return Err(Error::InvalidParameter("model needs at least one factor".into()));
        }
        for factor in &factors {
            match factor {
                GeometryFactor::FlatGaussian {
                    dim,
                    tilt,
                    quadratic_scale,
                } => {
                    if *dim == 0 || tilt.len() != *dim || !(*quadratic_scale > 0.0) {
                        return Err(Error::InvalidParameter(format!(
                            "flat factor needs dim ≥ 1, matching tilt and positive scale: {factor:?}"
                        )));
                    }
                    if kind == SolitonKind::Steady {
                        return Err(Error::InvalidParameter("steady models take cigar factors only".into()));
                    }
                }
                GeometryFactor::RoundSphere { dim, radius } => {
                    if *dim < 2 || !(*radius > 0.0) {
                        return Err(Error::InvalidParameter(format!("bad sphere {factor:?}")));
                    }
                    if kind != SolitonKind::Shrinking {
                        return Err(Error::InvalidParameter("round spheres only occur in shrinkers".into()));
                    }
                }
                GeometryFactor::Cigar => {
                    if kind != SolitonKind::Steady {
                        return Err(Error::InvalidParameter("the cigar is a steady soliton".into()));
                    }
                }
                GeometryFactor::AbstractEinstein {
                    dim,
                    volume,
                    diameter,
                    ..
                } => {
                    if *dim == 0 || !(*volume > 0.0) || !(*diameter > 0.0) {
                        return Err(Error::InvalidParameter(format!("bad Einstein factor {factor:?}")));
                    }
                    if kind == SolitonKind::Steady {
                        return Err(Error::InvalidParameter("steady models take cigar factors only".into()));
                    }
                }
            }
        }
        let tau = if kind == SolitonKind::Shrinking { tau } else { 1.0 };
        let total_dim = factors.iter().map(GeometryFactor::dim).sum::<usize>();
        let log_mass: f64 = factors.iter().map(GeometryFactor::log_mass).sum();
        let potential_offset = match kind {
            SolitonKind::Steady => log_mass,
            _ => log_mass - 0.5 * total_dim as f64 * (4.0 * PI * tau).ln(),
        };
        Ok(SolitonModel {
            id: id.into(),
            kind,
            factors,
            tau,
            potential_offset,
            total_dim,
        })
    }

    /// Build and reject the model unless the soliton identities hold to
    /// [`CONSTRUCTION_TOLERANCE`].
    pub fn checked(self) -> Result<Self> {
        let residual = soliton_residual(&self, &self.sample_points(16))?;
        if residual > CONSTRUCTION_TOLERANCE {
            return Err(Error::InconsistentModel {
                model: self.id.clone(),
                residual,
                tolerance: CONSTRUCTION_TOLERANCE,
            });
        }
        Ok(self)
    }

    pub fn gaussian_shrinker(n: usize, tilt: Option<Vec<f64>>, tau: f64) -> Result<Self> {
        let tilt = tilt.unwrap_or_else(|| vec![0.0; n]);
        let id = ids::gaussian_id("gaussian-shrinker", n, &tilt, tau);
        let factor = GeometryFactor::FlatGaussian {
            dim: n,
            tilt,
            quadratic_scale: 1.0 / (4.0 * tau),
        };
        Self::from_factors(id, SolitonKind::Shrinking, vec![factor], tau)?.checked()
    }

    pub fn sphere(n: usize, tau: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter("sphere dimension must be at least 2".into()));
        }
        let radius = (2.0 * tau * (n as f64 - 1.0)).sqrt();
        let id = ids::with_tau(format!("sphere:n={n}"), tau);
        Self::from_factors(
            id,
            SolitonKind::Shrinking,
            vec![GeometryFactor::RoundSphere { dim: n, radius }],
            tau,
        )?
        .checked()
    }

    pub fn cylinder(k: usize, m: usize, tau: f64) -> Result<Self> {
        if k < 2 || m == 0 {
            return Err(Error::InvalidParameter("cylinder needs k ≥ 2 and m ≥ 1".into()));
        }
        let radius = (2.0 * tau * (k as f64 - 1.0)).sqrt();
        let id = ids::with_tau(format!("cylinder:k={k},m={m}"), tau);
        Self::from_factors(
            id,
            SolitonKind::Shrinking,
            vec![
                GeometryFactor::RoundSphere { dim: k, radius },
                GeometryFactor::flat(m, tau),
            ],
            tau,
        )?
        .checked()
    }

    pub fn cigar() -> Result<Self> {
        Self::from_factors("cigar", SolitonKind::Steady, vec![GeometryFactor::Cigar], 1.0)?.checked()
    }

    pub fn gaussian_expander(n: usize, tilt: Option<Vec<f64>>) -> Result<Self> {
        let tilt = tilt.unwrap_or_else(|| vec![0.0; n]);
        let id = ids::gaussian_id("gaussian-expander", n, &tilt, 1.0);
        let factor = GeometryFactor::FlatGaussian {
            dim: n,
            tilt,
            quadratic_scale: 0.25,
        };
        Self::from_factors(id, SolitonKind::Expanding, vec![factor], 1.0)?.checked()
    }

    /// `N^k × R^m` with `N` Einstein, `Ric_N = -g/2`.
    pub fn einstein_expander_product(k: usize, m: usize, volume: f64, diameter: Option<f64>) -> Result<Self> {
        let diameter = diameter.unwrap_or(2.0 * volume.sqrt());
        let id = format!("einstein-expander-product:k={k},m={m},vol={volume}");
        let id = if diameter == 2.0 * volume.sqrt() {
            id
        } else {
            format!("{id},diam={diameter}")
        };
        let factors = vec![
            GeometryFactor::AbstractEinstein {
                dim: k,
                volume,
                scalar_curv: -0.5 * k as f64,
                diameter,
            },
            GeometryFactor::flat(m, 1.0),
        ];
        Self::from_factors(id, SolitonKind::Expanding, factors, 1.0)?.checked()
    }

    pub fn has_abstract_factor(&self) -> bool {
        self.factors.iter().any(|f| !f.is_chartable())
    }

    pub fn chartable_factors(&self) -> impl Iterator<Item = (usize, &GeometryFactor)> {
        self.factors.iter().enumerate().filter(|(_, f)| f.is_chartable())
    }

    /// Minimum point of the potential on each factor (used as the base point `o`).
    pub fn base_point(&self) -> ChartPoint {
        ChartPoint::new(
            self.factors
                .iter()
                .map(|factor| match factor {
                    GeometryFactor::FlatGaussian {
                        tilt,
                        quadratic_scale,
                        ..
                    } => FactorPoint::Flat(tilt.iter().map(|b| -b / (2.0 * quadratic_scale)).collect()),
                    GeometryFactor::RoundSphere { dim, .. } => FactorPoint::Sphere(vec![0.0; *dim]),
                    GeometryFactor::Cigar => FactorPoint::Cigar([0.0, 0.0]),
                    GeometryFactor::AbstractEinstein { .. } => FactorPoint::Abstract,
                })
                .collect(),
        )
    }

    /// Deterministic scattered points (additive recurrence with irrational
    /// steps), spread over the region holding most of the reference mass.
    pub fn sample_points(&self, count: usize) -> Vec<ChartPoint> {
        let base = self.base_point();
        (0..count)
            .map(|i| {
                let mut j = 0usize;
                let mut take = || {
                    j += 1;
                    weyl(i + 1, j)
                };
                let pts = self
                    .factors
                    .iter()
                    .zip(base.factors.iter())
                    .map(|(factor, centre)| match (factor, centre) {
                        (GeometryFactor::FlatGaussian { dim, .. }, FactorPoint::Flat(c)) => {
                            let spread = 4.0 * self.tau.sqrt();
                            FactorPoint::Flat((0..*dim).map(|i| c[i] + spread * (2.0 * take() - 1.0)).collect())
                        }
                        (GeometryFactor::RoundSphere { dim, .. }, _) => {
                            let mut angles: Vec<f64> = (0..dim - 1).map(|_| PI * take()).collect();
                            angles.push(2.0 * PI * take());
                            FactorPoint::Sphere(angles)
                        }
                        (GeometryFactor::Cigar, _) => {
                            FactorPoint::Cigar([12.0 * (2.0 * take() - 1.0), 12.0 * (2.0 * take() - 1.0)])
                        }
                        _ => FactorPoint::Abstract,
                    })
                    .collect();
                ChartPoint::new(pts)
            })
            .collect()
    }

    fn check_point(&self, p: &ChartPoint) -> Result<()> {
        if p.factors.len() != self.factors.len() {
            return Err(Error::UnsupportedChart(format!(
                "point has {} factor coordinates, model {} has {} factors",
                p.factors.len(),
                self.id,
                self.factors.len()
            )));
        }
        for (factor, fp) in self.factors.iter().zip(&p.factors) {
            point::validate(factor, fp)?;
        }
        Ok(())
    }

    /// Per-factor geometric quantities at the point.
    pub fn factor_geometry(&self, index: usize, fp: &FactorPoint) -> Result<FactorGeometry> {
        let factor = &self.factors[index];
        point::validate(factor, fp)?;
        Ok(match (factor, fp) {
            (
                GeometryFactor::FlatGaussian {
                    dim,
                    tilt,
                    quadratic_scale: q,
                },
                FactorPoint::Flat(x),
            ) => {
                let mut f = 0.0;
                let mut g2 = 0.0;
                for i in 0..*dim {
                    f += q * x[i] * x[i] + tilt[i] * x[i];
                    let g = 2.0 * q * x[i] + tilt[i];
                    g2 += g * g;
                }
                FactorGeometry {
                    f,
                    grad_f_sq: g2,
                    lap_f: 2.0 * q * *dim as f64,
                    scalar: 0.0,
                    ric_hess: 2.0 * q,
                }
            }
            (GeometryFactor::RoundSphere { dim, radius }, FactorPoint::Sphere(_)) => {
                let k = *dim as f64;
                FactorGeometry {
                    f: 0.0,
                    grad_f_sq: 0.0,
                    lap_f: 0.0,
                    scalar: k * (k - 1.0) / (radius * radius),
                    ric_hess: (k - 1.0) / (radius * radius),
                }
            }
            (GeometryFactor::Cigar, FactorPoint::Cigar([x, y])) => {
                let r2 = x * x + y * y;
                let s = 4.0 / (1.0 + r2);
                FactorGeometry {
                    f: r2.ln_1p(),
                    grad_f_sq: 4.0 * r2 / (1.0 + r2),
                    lap_f: s,
                    scalar: s,
                    ric_hess: s,
                }
            }
            (
                GeometryFactor::AbstractEinstein {
                    dim, scalar_curv, ..
                },
                FactorPoint::Abstract,
            ) => FactorGeometry {
                f: 0.0,
                grad_f_sq: 0.0,
                lap_f: 0.0,
                scalar: *scalar_curv,
                ric_hess: scalar_curv / *dim as f64,
            },
            _ => unreachable!("validated above"),
        })
    }

    /// Summed geometry over all factors, with the offset folded into `f`.
    pub fn geometry(&self, p: &ChartPoint) -> Result<FactorGeometry> {
        self.check_point(p)?;
        let mut total = FactorGeometry {
            f: self.potential_offset,
            ric_hess: f64::INFINITY,
            ..Default::default()
        };
        for (i, fp) in p.factors.iter().enumerate() {
            let g = self.factor_geometry(i, fp)?;
            total.f += g.f;
            total.grad_f_sq += g.grad_f_sq;
            total.lap_f += g.lap_f;
            total.scalar += g.scalar;
            total.ric_hess = total.ric_hess.min(g.ric_hess);
        }
        Ok(total)
    }

    fn require_chart(&self, p: &ChartPoint) -> Result<()> {
        if self.has_abstract_factor() {
            return Err(Error::UnsupportedChart(format!(
                "model {} has an abstract Einstein factor without pointwise charts",
                self.id
            )));
        }
        self.check_point(p)
    }

    pub fn potential(&self, p: &ChartPoint) -> Result<f64> {
        self.require_chart(p)?;
        Ok(self.geometry(p)?.f)
    }

    pub fn scalar_curvature(&self, p: &ChartPoint) -> Result<f64> {
        Ok(self.geometry(p)?.scalar)
    }

    pub fn grad_potential_normsq(&self, p: &ChartPoint) -> Result<f64> {
        self.require_chart(p)?;
        Ok(self.geometry(p)?.grad_f_sq)
    }

    pub fn laplacian_potential(&self, p: &ChartPoint) -> Result<f64> {
        self.require_chart(p)?;
        Ok(self.geometry(p)?.lap_f)
    }

    /// The kind-specific invariant combination (`μ_s`, `μ_e` or `λ`) at a point.
    pub fn identity_value(&self, g: &FactorGeometry) -> f64 {
        match self.kind {
            SolitonKind::Shrinking => self.tau * (g.scalar + g.grad_f_sq) - g.f,
            SolitonKind::Expanding => g.scalar + g.grad_f_sq - g.f,
            SolitonKind::Steady => g.scalar + g.grad_f_sq,
        }
    }

    /// The trace identity, zero on a soliton.
    pub fn trace_value(&self, g: &FactorGeometry) -> f64 {
        let n = self.total_dim as f64;
        match self.kind {
            SolitonKind::Shrinking => g.scalar + g.lap_f - n / (2.0 * self.tau),
            SolitonKind::Expanding => g.lap_f - g.scalar - 0.5 * n,
            SolitonKind::Steady => g.lap_f - g.scalar,
        }
    }

    /// The pointwise Euler-Lagrange identity of the minimiser; equals minus the invariant.
    pub fn minimizer_identity(&self, g: &FactorGeometry) -> f64 {
        let n = self.total_dim as f64;
        match self.kind {
            SolitonKind::Shrinking => {
                self.tau * (2.0 * g.lap_f - g.grad_f_sq + g.scalar) + g.f - n
            }
            SolitonKind::Expanding => 2.0 * g.lap_f - g.grad_f_sq - 3.0 * g.scalar + g.f - n,
            SolitonKind::Steady => 2.0 * g.lap_f - g.grad_f_sq - 3.0 * g.scalar,
        }
    }

    pub fn describe(&self) -> String {
        self.factors
            .iter()
            .map(GeometryFactor::describe)
            .collect::<Vec<_>>()
            .join(" x ")
    }

    /// `(min, max)` of the Ricci eigenvalues over the whole manifold.
    pub fn ricci_bounds(&self) -> (f64, f64) {
        self.factors.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), f| {
            let (a, b) = f.ricci_bounds();
            (lo.min(a), hi.max(b))
        })
    }

    /// `(inf, sup)` of scalar curvature over the manifold.
    pub fn scalar_bounds(&self) -> (f64, f64) {
        self.factors.iter().fold((0.0, 0.0), |(lo, hi), f| match f {
            GeometryFactor::FlatGaussian { .. } => (lo, hi),
            GeometryFactor::RoundSphere { dim, radius } => {
                let s = (*dim * (*dim - 1)) as f64 / (radius * radius);
                (lo + s, hi + s)
            }
            GeometryFactor::Cigar => (lo, hi + 4.0),
            GeometryFactor::AbstractEinstein { scalar_curv, .. } => (lo + scalar_curv, hi + scalar_curv),
        })
    }

    pub fn is_flat(&self) -> bool {
        self.factors
            .iter()
            .all(|f| matches!(f, GeometryFactor::FlatGaussian { .. }))
    }
}

/// Maximum deviation of the invariant combination from its value at the first
/// sample, plus the maximum trace-identity defect.
pub fn soliton_residual(model: &SolitonModel, sample: &[ChartPoint]) -> Result<f64> {
    if sample.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: sample.len(),
        });
    }
    let geoms = sample.iter().map(|p| model.geometry(p)).collect::<Result<Vec<_>>>()?;
    let v0 = model.identity_value(&geoms[0]);
    let spread = geoms
        .iter()
        .map(|g| (model.identity_value(g) - v0).abs())
        .fold(0.0, f64::max);
    let trace = geoms
        .iter()
        .map(|g| model.trace_value(g).abs())
        .fold(0.0, f64::max);
    Ok(spread + trace)
}

/// `μ_s`, `μ_e` or `λ` according to the model kind.
pub fn mu_invariant(model: &SolitonModel) -> Result<f64> {
    let sample = model.sample_points(16);
    let residual = soliton_residual(model, &sample)?;
    if residual > CONSTRUCTION_TOLERANCE {
        return Err(Error::InconsistentModel {
            model: model.id.clone(),
            residual,
            tolerance: CONSTRUCTION_TOLERANCE,
        });
    }
    Ok(model.identity_value(&model.geometry(&sample[0])?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdBound {
    pub value: f64,
    /// Set when abstract Einstein factors contributed through their Einstein constant only.
    pub from_einstein_constants: bool,
}

/// `min (Ric + Hess f)(v, v)` over the sample points and unit directions.
pub fn cd_lower_bound(model: &SolitonModel, samples: &[ChartPoint], directions: &[TangentVector]) -> Result<CdBound> {
    if samples.len() != directions.len() {
        return Err(Error::InvalidParameter(format!(
            "{} samples but {} directions",
            samples.len(),
            directions.len()
        )));
    }
    let mut value = f64::INFINITY;
    for (p, v) in samples.iter().zip(directions) {
        model.check_point(p)?;
        let weights = v.factor_weights(model, p)?;
        let mut q = 0.0;
        for (i, fp) in p.factors.iter().enumerate() {
            q += model.factor_geometry(i, fp)?.ric_hess * weights[i];
        }
        value = value.min(q);
    }
    Ok(CdBound {
        value,
        from_einstein_constants: model.has_abstract_factor(),
    })
}

/// Isotropic version: the smallest factor eigenvalue of `Ric + Hess f` over the samples.
pub fn cd_lower_bound_isotropic(model: &SolitonModel, samples: &[ChartPoint]) -> Result<CdBound> {
    let mut value = f64::INFINITY;
    for p in samples {
        value = value.min(model.geometry(p)?.ric_hess);
    }
    Ok(CdBound {
        value,
        from_einstein_constants: model.has_abstract_factor(),
    })
}

/// Riemannian distance, combined over factors by Pythagoras.
pub fn geodesic_distance(model: &SolitonModel, p: &ChartPoint, q: &ChartPoint) -> Result<f64> {
    model.require_chart(p)?;
    model.require_chart(q)?;
    let mut d2 = 0.0;
    for (factor, (a, b)) in model.factors.iter().zip(p.factors.iter().zip(&q.factors)) {
        let d = point::factor_distance(factor, a, b)?;
        d2 += d * d;
    }
    Ok(d2.sqrt())
}

/// `frac(i·√p_j)` for the j-th prime: a low-discrepancy sequence in each coordinate.
fn weyl(i: usize, j: usize) -> f64 {
    const PRIMES: [f64; 12] = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0, 23.0, 29.0, 31.0, 37.0];
    let p = PRIMES[(j - 1) % PRIMES.len()] + 40.0 * ((j - 1) / PRIMES.len()) as f64;
    (i as f64 * p.sqrt()).fract()
}

#[cfg(test)]
mod tests;
