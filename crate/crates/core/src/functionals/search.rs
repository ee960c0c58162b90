//! Upper estimates of `μ(g, σ) = inf W(g, u, σ)` and `ν(g) = inf_σ μ(g, σ)`.

use super::{moments, CheckOptions};
use crate::catalog::{GeometryFactor, SolitonModel};
use crate::error::{Error, Result};
use crate::grid::{Density, DensityKind};

/// Best value found over the per-factor scale family.
#[derive(Debug, Clone, PartialEq)]
pub struct MuEstimate {
    pub sigma: f64,
    pub value: f64,
    pub factor_scales: Vec<f64>,
    pub evaluations: usize,
    /// Set when the budget ran out before the searches converged.
    pub incomplete: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NuEstimate {
    pub value: f64,
    pub sigma: f64,
    pub per_sigma: Vec<MuEstimate>,
    pub incomplete: bool,
}

fn family(scales: &[f64]) -> Density {
    Density::factor_scaled(scales.to_vec())
}

fn scale_range(factor: &GeometryFactor) -> Option<(f64, f64)> {
    match factor {
        GeometryFactor::FlatGaussian { .. } | GeometryFactor::RoundSphere { .. } => Some((0.125, 8.0)),
        GeometryFactor::Cigar => Some((0.125, 2.0)),
        GeometryFactor::AbstractEinstein { .. } => None,
    }
}

/// Estimate `μ(g, σ)` by minimising `W(g, u, σ)` over product densities whose
/// factors are the scale family of [`DensityKind::ParamGaussian`].
///
/// `W` is a sum of factor terms over this family, so one golden-section search
/// per factor (in `log s`) minimises it; the reference and the widened
/// candidate `N(c, 2σ)` are always tried as well.  `budget` caps the number of
/// `W` evaluations.
pub fn mu_estimate(model: &SolitonModel, sigma: f64, budget: usize, opts: &CheckOptions) -> Result<MuEstimate> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale must be positive, got {sigma}")));
    }
    let grid = opts.build(model)?;
    let mut evaluations = 0usize;
    let mut eval = |scales: &[f64]| -> Result<f64> {
        evaluations += 1;
        Ok(moments(model, &grid, &family(scales))?.w_sigma(sigma))
    };

    let k = model.factors.len();
    let mut best_scales = vec![1.0; k];
    let mut best = eval(&best_scales)?;
    let candidate = match Density::scale_candidate(model, sigma).kind {
        DensityKind::ParamGaussian { factor_scales: Some(v), .. } => v,
        _ => vec![1.0; k],
    };
    let cand = eval(&candidate)?;
    if cand < best {
        best = cand;
        best_scales = candidate;
    }

    let mut incomplete = false;
    let per_factor = budget.saturating_sub(2) / k.max(1);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    for i in 0..k {
        let Some((lo, hi)) = scale_range(&model.factors[i]) else {
            continue;
        };
        let mut scales = best_scales.clone();
        let mut at = |x: f64| -> Result<f64> {
            scales[i] = x.exp();
            eval(&scales)
        };
        let (mut a, mut b) = (lo.ln(), hi.ln());
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let mut fc = at(c)?;
        let mut fd = at(d)?;
        let mut used = 2;
        while b - a > 1e-6 {
            if used >= per_factor {
                incomplete = true;
                break;
            }
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = at(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = at(d)?;
            }
            used += 1;
        }
        let (x, fx) = if fc < fd { (c, fc) } else { (d, fd) };
        if fx < best {
            best = fx;
            best_scales[i] = x.exp();
        }
    }
    Ok(MuEstimate {
        sigma,
        value: best,
        factor_scales: best_scales,
        evaluations,
        incomplete,
    })
}

/// `min_σ` of [`mu_estimate`] over the given scales.
pub fn nu_estimate(model: &SolitonModel, sigmas: &[f64], budget: usize, opts: &CheckOptions) -> Result<NuEstimate> {
    if sigmas.is_empty() {
        return Err(Error::InvalidParameter("no scales to search".into()));
    }
    let per_sigma = sigmas
        .iter()
        .map(|s| mu_estimate(model, *s, budget, opts))
        .collect::<Result<Vec<_>>>()?;
    let best = per_sigma
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("non-empty");
    Ok(NuEstimate {
        value: best.value,
        sigma: best.sigma,
        incomplete: per_sigma.iter().any(|m| m.incomplete),
        per_sigma: per_sigma.clone(),
    })
}
