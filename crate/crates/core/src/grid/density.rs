use super::sample::{evaluate_factor, factor_shifts, log_sum_exp};
use super::{integrate, QuadratureGrid};
use crate::catalog::{ChartPoint, FactorPoint, GeometryFactor, SolitonModel};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Catalog perturbation profile `φ` for [`DensityKind::TiltedReference`].
///
/// `Height` is `x_1 - c_1` on flat factors, the first ambient coordinate of
/// the unit sphere, and `x/√(1+r²)` on the cigar.  `Radial` is
/// `q|x - c|²`, the squared first ambient coordinate, and `log(1 + r²)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiltProfile {
    Height,
    Radial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum DensityKind {
    /// Per-factor Gaussian-type family; `scale = 1` with no shift is the
    /// reference measure.  Flat factors get `N(c + m, 2τ·scale)`; spheres get
    /// `exp(κ⟨x̂, m̂⟩)` with `κ = r²(1/scale - 1)/(2τ)` and `m̂` the point reached
    /// from the north pole along the shift; the cigar gets `(1 + |x - m|²)^{-1/scale}`.
    /// `shift` concatenates the per-factor shifts (flat `dim`, sphere `dim`,
    /// cigar 2 entries) or is empty.  `factor_scales`, when present, replaces
    /// `scale` factor by factor.
    ParamGaussian {
        scale: f64,
        shift: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        factor_scales: Option<Vec<f64>>,
    },
    /// `ρ ∝ e^{-f - εφ}`.
    TiltedReference { epsilon: f64, profile: TiltProfile },
    /// Values at the nodes of a specific grid.
    Gridded {
        #[serde(skip)]
        values: Vec<f64>,
    },
}

/// A probability density on a catalog model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub kind: DensityKind,
    #[serde(skip)]
    log_norm: Option<Vec<f64>>,
}

impl Density {
    pub fn reference() -> Self {
        Self::param_gaussian(1.0, Vec::new())
    }

    pub fn param_gaussian(scale: f64, shift: Vec<f64>) -> Self {
        Density {
            kind: DensityKind::ParamGaussian {
                scale,
                shift,
                factor_scales: None,
            },
            log_norm: None,
        }
    }

    pub fn tilted(epsilon: f64, profile: TiltProfile) -> Self {
        Density {
            kind: DensityKind::TiltedReference { epsilon, profile },
            log_norm: None,
        }
    }

    pub fn gridded(values: Vec<f64>) -> Self {
        Density {
            kind: DensityKind::Gridded { values },
            log_norm: None,
        }
    }

    /// Candidate minimiser at scale `σ`: flat factors widened to `N(c, 2σ)`,
    /// compact factors and the cigar left at the reference.
    pub fn scale_candidate(model: &SolitonModel, sigma: f64) -> Self {
        let scales = model
            .factors
            .iter()
            .map(|f| match f {
                GeometryFactor::FlatGaussian { .. } => sigma / model.tau,
                _ => 1.0,
            })
            .collect();
        Self::factor_scaled(scales)
    }

    /// Unshifted product of the scale family with one scale per factor.
    pub fn factor_scaled(scales: Vec<f64>) -> Self {
        Density {
            kind: DensityKind::ParamGaussian {
                scale: 1.0,
                shift: Vec::new(),
                factor_scales: Some(scales),
            },
            log_norm: None,
        }
    }

    pub fn is_normalized(&self) -> bool {
        self.log_norm.is_some()
    }

    pub fn is_gridded(&self) -> bool {
        matches!(self.kind, DensityKind::Gridded { .. })
    }

    /// Whether the density is exactly the reference measure `e^{-f}`.
    pub fn is_reference(&self) -> bool {
        match &self.kind {
            DensityKind::ParamGaussian {
                scale,
                shift,
                factor_scales,
            } => {
                let scales_one = match factor_scales {
                    Some(v) => v.iter().all(|s| *s == 1.0),
                    None => *scale == 1.0,
                };
                scales_one && shift.iter().all(|m| *m == 0.0)
            }
            DensityKind::TiltedReference { epsilon, .. } => *epsilon == 0.0,
            DensityKind::Gridded { .. } => false,
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            DensityKind::ParamGaussian {
                scale,
                shift,
                factor_scales,
            } => {
                let mut out = match factor_scales {
                    Some(v) => {
                        let s: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
                        format!("param-gaussian(s=[{}]", s.join(";"))
                    }
                    None => format!("param-gaussian(s={scale}"),
                };
                if shift.iter().any(|m| *m != 0.0) {
                    let m: Vec<String> = shift.iter().map(|v| format!("{v}")).collect();
                    out.push_str(&format!(",m=[{}]", m.join(";")));
                }
                out.push(')');
                out
            }
            DensityKind::TiltedReference { epsilon, profile } => {
                let p = match profile {
                    TiltProfile::Height => "height",
                    TiltProfile::Radial => "radial",
                };
                format!("tilted(eps={epsilon},{p})")
            }
            DensityKind::Gridded { values } => format!("gridded({} nodes)", values.len()),
        }
    }

    pub(crate) fn validate(&self, model: &SolitonModel) -> Result<()> {
        match &self.kind {
            DensityKind::ParamGaussian {
                scale,
                shift,
                factor_scales,
            } => {
                let mut all = vec![*scale];
                if let Some(v) = factor_scales {
                    if v.len() != model.factors.len() {
                        return Err(Error::InvalidParameter(format!(
                            "{} factor scales for {} factors",
                            v.len(),
                            model.factors.len()
                        )));
                    }
                    all.extend_from_slice(v);
                }
                if let Some(bad) = all.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
                    return Err(Error::InvalidParameter(format!("density scale must be positive, got {bad}")));
                }
                factor_shifts(model, shift)?;
            }
            DensityKind::TiltedReference { epsilon, .. } => {
                if !epsilon.is_finite() {
                    return Err(Error::InvalidParameter("tilt must be finite".into()));
                }
            }
            DensityKind::Gridded { .. } => {}
        }
        Ok(())
    }

    /// Per-factor log normalisers of a parametric density, once normalised.
    pub fn log_normalizers(&self) -> Option<&[f64]> {
        self.log_norm.as_deref()
    }

    pub fn gridded_values(&self) -> Option<&[f64]> {
        match &self.kind {
            DensityKind::Gridded { values } => Some(values),
            _ => None,
        }
    }

    /// `log ρ(p)` for a normalised parametric density.
    pub fn log_density(&self, model: &SolitonModel, p: &ChartPoint) -> Result<f64> {
        let log_norm = self.require_parametric_normalized()?;
        let shifts = self.shifts(model)?;
        let mut total = 0.0;
        for (i, fp) in p.factors.iter().enumerate() {
            total += evaluate_factor(model, i, fp, &self.kind, shifts[i])?.ell - log_norm[i];
        }
        Ok(total)
    }

    /// Normalised log density of factor `index` alone.
    pub fn factor_log_density(&self, model: &SolitonModel, index: usize, fp: &FactorPoint) -> Result<f64> {
        let log_norm = self.require_parametric_normalized()?;
        let shifts = self.shifts(model)?;
        Ok(evaluate_factor(model, index, fp, &self.kind, shifts[index])?.ell - log_norm[index])
    }

    /// `ψ = -log ρ - (n/2) log(4πτ)`, so that `ρ = e^{-ψ}/(4πτ)^{n/2}`.
    pub fn psi(&self, model: &SolitonModel, p: &ChartPoint) -> Result<f64> {
        Ok(-self.log_density(model, p)? - super::reference_log_prefactor(model))
    }

    /// Metric gradient of `log ρ`, factor by factor: Cartesian components on
    /// flat factors, an ambient tangent vector on spheres, `g^{ij}∂_j` on the
    /// cigar and nothing on abstract factors.
    pub fn grad_log_density(&self, model: &SolitonModel, p: &ChartPoint) -> Result<Vec<Vec<f64>>> {
        if self.is_gridded() {
            return Err(Error::Unsupported(
                "pointwise gradients of gridded densities: use the radial profile path".into(),
            ));
        }
        let shifts = self.shifts(model)?;
        p.factors
            .iter()
            .enumerate()
            .map(|(i, fp)| Ok(evaluate_factor(model, i, fp, &self.kind, shifts[i])?.grad))
            .collect()
    }

    pub(crate) fn shifts<'a>(&'a self, model: &SolitonModel) -> Result<Vec<&'a [f64]>> {
        match &self.kind {
            DensityKind::ParamGaussian { shift, .. } => factor_shifts(model, shift),
            _ => Ok(vec![&[][..]; model.factors.len()]),
        }
    }

    fn require_parametric_normalized(&self) -> Result<&[f64]> {
        if self.is_gridded() {
            return Err(Error::Unsupported("pointwise evaluation of a gridded density".into()));
        }
        self.log_norm
            .as_deref()
            .ok_or_else(|| Error::InvalidParameter("density is not normalised".into()))
    }
}

/// Scale the density to unit mass on the grid.
///
/// Parametric densities are normalised factor by factor, gridded values are
/// divided by their integral.
pub fn normalize(model: &SolitonModel, grid: &QuadratureGrid, density: &Density) -> Result<Density> {
    if grid.model_id != model.id || grid.factors.len() != model.factors.len() {
        return Err(Error::InvalidParameter(format!(
            "grid for {} used with model {}",
            grid.model_id, model.id
        )));
    }
    density.validate(model)?;
    match &density.kind {
        DensityKind::Gridded { values } => {
            if let Some((node, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::NonFinite { node, value: *v });
            }
            let mass = integrate(grid, values)?;
            if !(mass > 0.0) {
                return Err(Error::InvalidParameter("density vanishes identically".into()));
            }
            Ok(Density {
                kind: DensityKind::Gridded {
                    values: values.iter().map(|v| v / mass).collect(),
                },
                log_norm: Some(Vec::new()),
            })
        }
        kind => {
            let shifts = density.shifts(model)?;
            let mut log_norm = Vec::with_capacity(model.factors.len());
            for (i, g) in grid.factors.iter().enumerate() {
                let mut terms = Vec::with_capacity(g.len());
                for (fp, w) in g.points.iter().zip(&g.weights) {
                    terms.push((evaluate_factor(model, i, fp, kind, shifts[i])?.ell, *w));
                }
                log_norm.push(log_sum_exp(&terms));
            }
            Ok(Density {
                kind: kind.clone(),
                log_norm: Some(log_norm),
            })
        }
    }
}
