//! Volumes of geodesic balls about a base point, growth scans, and checks of
//! the polynomial volume growth bounds.
//!
//! A model is split into its flat factors, merged into one `R^m`, and at most
//! one other factor (the fibre).  With `V_A` the ball volume of the fibre,
//!
//! ```text
//! V(r) = m ω_m r^m ∫_0^{π/2} V_A(r cos φ) sin^{m-1}φ cos φ dφ,
//! ```
//!
//! which is exact for spheres and the cigar.  Abstract Einstein factors only
//! know their volume, diameter and Einstein constant, so their ball volumes are
//! bracketed by Bishop and Bishop-Gromov comparison with the model space.

mod checks;
#[cfg(test)]
mod tests;

pub use checks::{
    avr_check, expander_exponent_check, growth_bound_check, potential_growth_check, EXPONENT_TOLERANCE,
    GROWTH_TOLERANCE,
};

use crate::catalog::{log_sphere_area, unit_ball_volume, ChartPoint, FactorPoint, GeometryFactor, SolitonModel};
use crate::error::{Error, Result};
use crate::grid::rules::{gauss_legendre, Rule};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

const NODES: usize = 32;
const FIBRE_PANELS: usize = 16;
pub const SCAN_POINTS: usize = 64;

fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(NODES))
}

fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|j| {
            let mid = a + h * (j as f64 + 0.5);
            0.5 * h * rule().integrate(|x| f(mid + 0.5 * h * x))
        })
        .sum()
}

/// Lower and upper bounds on a volume; equal when the volume is computed
/// exactly (up to quadrature rounding).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeBracket {
    pub lower: f64,
    pub upper: f64,
}

impl VolumeBracket {
    pub fn exact(v: f64) -> Self {
        VolumeBracket { lower: v, upper: v }
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    pub fn estimate(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Fibre {
    Point,
    Sphere {
        dim: usize,
        radius: f64,
    },
    Cigar,
    Einstein {
        dim: usize,
        volume: f64,
        diameter: f64,
        /// Sectional curvature of the comparison space.
        curvature: f64,
        /// Radius at which the comparison volume reaches `volume`.
        cap: f64,
    },
}

/// Volume of a ball of radius `s` in the simply connected space of constant
/// curvature `k` and dimension `dim`.
fn model_space_volume(dim: usize, k: f64, s: f64) -> f64 {
    let c = k.abs().sqrt();
    let sn = |t: f64| {
        if k == 0.0 {
            t
        } else if k < 0.0 {
            (c * t).sinh() / c
        } else {
            (c * t).sin() / c
        }
    };
    let s = if k > 0.0 { s.min(PI / c) } else { s };
    let panels = ((c * s / 2.0).ceil() as usize).max(1);
    log_sphere_area(dim - 1, 1.0).exp() * integrate(|t| sn(t).powi(dim as i32 - 1), 0.0, s, panels)
}

impl Fibre {
    fn of(factor: &GeometryFactor) -> Result<Self> {
        Ok(match *factor {
            GeometryFactor::RoundSphere { dim, radius } => Fibre::Sphere { dim, radius },
            GeometryFactor::Cigar => Fibre::Cigar,
            GeometryFactor::AbstractEinstein {
                dim,
                volume,
                scalar_curv,
                diameter,
            } => {
                let curvature = if dim >= 2 {
                    scalar_curv / (dim * (dim - 1)) as f64
                } else {
                    0.0
                };
                if model_space_volume(dim, curvature, diameter) < volume {
                    return Err(Error::InvalidParameter(format!(
                        "volume {volume} is too large for diameter {diameter} under Ricci curvature {}",
                        scalar_curv / dim as f64
                    )));
                }
                let (mut lo, mut hi) = (0.0, diameter);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if model_space_volume(dim, curvature, mid) < volume {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Fibre::Einstein {
                    dim,
                    volume,
                    diameter,
                    curvature,
                    cap: hi,
                }
            }
            GeometryFactor::FlatGaussian { .. } => unreachable!("flat factors are merged"),
        })
    }

    fn volume(&self, s: f64) -> VolumeBracket {
        match *self {
            Fibre::Point => VolumeBracket::exact(1.0),
            Fibre::Sphere { dim, radius } => {
                let theta = (s / radius).min(PI);
                let v = log_sphere_area(dim - 1, 1.0).exp()
                    * radius.powi(dim as i32)
                    * integrate(|t| t.sin().powi(dim as i32 - 1), 0.0, theta, 2);
                VolumeBracket::exact(v)
            }
            Fibre::Cigar => {
                let panels = ((s / 4.0).ceil() as usize).max(1);
                VolumeBracket::exact(2.0 * PI * integrate(f64::tanh, 0.0, s, panels))
            }
            Fibre::Einstein {
                dim,
                volume,
                diameter,
                curvature,
                ..
            } => {
                if s >= diameter {
                    return VolumeBracket::exact(volume);
                }
                let comparison = model_space_volume(dim, curvature, s);
                VolumeBracket {
                    lower: volume * comparison / model_space_volume(dim, curvature, diameter),
                    upper: comparison.min(volume),
                }
            }
        }
    }

    /// Radii where the fibre volume is not smooth.
    fn kinks(&self) -> Vec<f64> {
        match *self {
            Fibre::Sphere { radius, .. } => vec![PI * radius],
            Fibre::Einstein { diameter, cap, .. } => vec![cap, diameter],
            _ => Vec::new(),
        }
    }
}

/// Ball volumes about a fixed base point of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct BallVolumes {
    flat_dim: usize,
    fibre: Fibre,
}

impl BallVolumes {
    pub fn new(model: &SolitonModel, o: &ChartPoint) -> Result<Self> {
        model.geometry(o)?;
        let mut flat_dim = 0;
        let mut fibre = Fibre::Point;
        for (factor, p) in model.factors.iter().zip(&o.factors) {
            match factor {
                GeometryFactor::FlatGaussian { dim, .. } => flat_dim += dim,
                _ if fibre != Fibre::Point => {
                    return Err(Error::Unsupported(format!(
                        "{}: ball volumes need at most one non-flat factor",
                        model.id
                    )))
                }
                GeometryFactor::Cigar if !matches!(p, FactorPoint::Cigar([x, y]) if *x == 0.0 && *y == 0.0) => {
                    return Err(Error::Unsupported("cigar balls are only available about the tip".into()))
                }
                _ => fibre = Fibre::of(factor)?,
            }
        }
        Ok(BallVolumes { flat_dim, fibre })
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self.fibre, Fibre::Einstein { .. })
    }

    pub fn at(&self, r: f64) -> Result<VolumeBracket> {
        if !(r >= 0.0) || r.is_infinite() {
            return Err(Error::InvalidParameter(format!("ball radius {r}")));
        }
        let m = self.flat_dim;
        if m == 0 {
            return Ok(self.fibre.volume(r));
        }
        if self.fibre == Fibre::Point || r == 0.0 {
            return Ok(VolumeBracket::exact(unit_ball_volume(m) * r.powi(m as i32)));
        }
        let mut cuts = vec![0.0];
        let mut angles: Vec<f64> = self
            .fibre
            .kinks()
            .into_iter()
            .filter(|k| *k < r)
            .map(|k| (k / r).acos())
            .collect();
        angles.sort_by(f64::total_cmp);
        cuts.extend(angles);
        cuts.push(FRAC_PI_2);
        let weight = |phi: f64| phi.sin().powi(m as i32 - 1) * phi.cos();
        let (mut lower, mut upper) = (0.0, 0.0);
        for w in cuts.windows(2) {
            lower += integrate(|phi| self.fibre.volume(r * phi.cos()).lower * weight(phi), w[0], w[1], FIBRE_PANELS);
            if !self.is_exact() {
                upper += integrate(|phi| self.fibre.volume(r * phi.cos()).upper * weight(phi), w[0], w[1], FIBRE_PANELS);
            }
        }
        let scale = m as f64 * unit_ball_volume(m) * r.powi(m as i32);
        if self.is_exact() {
            upper = lower;
        }
        Ok(VolumeBracket {
            lower: scale * lower,
            upper: scale * upper,
        })
    }
}

/// Volume of the geodesic ball `B(o, r)`.
pub fn ball_volume(model: &SolitonModel, o: &ChartPoint, r: f64) -> Result<VolumeBracket> {
    BallVolumes::new(model, o)?.at(r)
}

/// Largest diameter among the compact factors, or 1 when there is none.
pub fn characteristic_length(model: &SolitonModel) -> f64 {
    model
        .factors
        .iter()
        .filter_map(GeometryFactor::diameter)
        .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.max(d))))
        .unwrap_or(1.0)
}

/// `count` radii spaced geometrically from `lo` to `hi`, both included.
pub fn geometric_radii(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let q = (hi / lo).ln() / (count - 1) as f64;
    (0..count)
        .map(|j| if j + 1 == count { hi } else { lo * (q * j as f64).exp() })
        .collect()
}

/// Least-squares slope of `log V` against `log r` with a 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub exponent: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Smallest radius used in the fit.
    pub from_radius: f64,
}

fn regression(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    (slope, (ssr / (n - 2.0) / sxx).sqrt())
}

impl GrowthFit {
    /// Fit over the points with `r ≥ from`; the interval covers both ends of
    /// the volume brackets.
    pub fn new(radii: &[f64], volumes: &[VolumeBracket], from: f64) -> Result<Self> {
        let keep: Vec<usize> = (0..radii.len()).filter(|&i| radii[i] >= from && volumes[i].lower > 0.0).collect();
        if keep.len() < 3 {
            return Err(Error::TooFewSamples {
                needed: 3,
                got: keep.len(),
            });
        }
        let x: Vec<f64> = keep.iter().map(|&i| radii[i].ln()).collect();
        let series = |v: &dyn Fn(&VolumeBracket) -> f64| keep.iter().map(|&i| v(&volumes[i]).ln()).collect::<Vec<_>>();
        let t = StudentsT::new(0.0, 1.0, (keep.len() - 2) as f64)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        let (slope, _) = regression(&x, &series(&|v| v.estimate()));
        let (lo, lo_se) = regression(&x, &series(&|v| v.lower));
        let (hi, hi_se) = regression(&x, &series(&|v| v.upper));
        Ok(GrowthFit {
            exponent: slope,
            ci_low: (lo - t * lo_se).min(hi - t * hi_se),
            ci_high: (lo + t * lo_se).max(hi + t * hi_se),
            from_radius: radii[keep[0]],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeScan {
    pub model: String,
    pub origin: ChartPoint,
    pub dim: usize,
    pub radii: Vec<f64>,
    pub volumes: Vec<VolumeBracket>,
    /// Fit over the upper half of the radii.
    pub fit: GrowthFit,
}

impl VolumeScan {
    /// `V(r)/r^p` from the bracket midpoints.
    pub fn series(&self, p: f64) -> Vec<f64> {
        self.radii
            .iter()
            .zip(&self.volumes)
            .map(|(r, v)| v.estimate() / r.powf(p))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,V,V_over_r_n\n");
        let ratio = self.series(self.dim as f64);
        for ((r, v), q) in self.radii.iter().zip(&self.volumes).zip(ratio) {
            out.push_str(&format!("{r:e},{:e},{q:e}\n", v.estimate()));
        }
        out
    }
}

/// Volumes about `o` at `points` geometric radii in `[r_min, r_max]`.
pub fn volume_scan(model: &SolitonModel, o: &ChartPoint, r_min: f64, r_max: f64, points: usize) -> Result<VolumeScan> {
    if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) || points < 6 {
        return Err(Error::InvalidParameter(format!(
            "scan of {points} radii over [{r_min}, {r_max}]"
        )));
    }
    let balls = BallVolumes::new(model, o)?;
    let radii = geometric_radii(r_min, r_max, points);
    let volumes = radii.par_iter().map(|&r| balls.at(r)).collect::<Result<Vec<_>>>()?;
    let fit = GrowthFit::new(&radii, &volumes, radii[points / 2])?;
    Ok(VolumeScan {
        model: model.id.clone(),
        origin: o.clone(),
        dim: model.total_dim,
        radii,
        volumes,
        fit,
    })
}

/// Scan about the base point from `r_max/100` to `r_max`.
pub fn avr_scan(model: &SolitonModel, r_max: f64) -> Result<VolumeScan> {
    volume_scan(model, &model.base_point(), r_max / 100.0, r_max, SCAN_POINTS)
}
