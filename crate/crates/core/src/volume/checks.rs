use super::{geometric_radii, BallVolumes, VolumeBracket, VolumeScan};
use crate::catalog::{geodesic_distance, mu_invariant, ChartPoint, FactorPoint, GeometryFactor, SolitonKind, SolitonModel};
use crate::error::{Error, Result};
use crate::functionals::FunctionalReport;
use crate::report::Status;
use rayon::prelude::*;

/// Relative slack in the volume inequalities.
pub const GROWTH_TOLERANCE: f64 = 1e-9;
/// Allowed distance of a fitted growth exponent from the predicted power.
pub const EXPONENT_TOLERANCE: f64 = 0.05;
const BOUND_POINTS: usize = 48;
const RAY_STEPS: usize = 64;

fn blank(model: &SolitonModel, id: &str) -> FunctionalReport {
    FunctionalReport::new(id, &model.id, "-", model.tau)
}

fn shrinker_hypotheses(model: &SolitonModel) -> std::result::Result<(), String> {
    if model.kind != SolitonKind::Shrinking {
        return Err(format!("{} is not a shrinker", model.kind.label()));
    }
    if model.is_flat() {
        return Err("flat case: AVR positive".into());
    }
    let ric = model.ricci_bounds().0;
    if ric < 0.0 {
        return Err(format!("Ricci curvature reaches {ric} < 0"));
    }
    Ok(())
}

/// `V(r)/r^n` non-increasing from the compact diameter on and its last value
/// below a tenth of the first.  With brackets, each ratio is compared
/// upper-to-lower.
pub fn avr_check(model: &SolitonModel, scan: &VolumeScan) -> FunctionalReport {
    let r = blank(model, "volume:avr");
    if let Err(why) = shrinker_hypotheses(model) {
        return r.not_applicable(why);
    }
    let n = scan.dim as i32;
    let diameter = super::characteristic_length(model);
    let ratio = |i: usize, v: fn(&VolumeBracket) -> f64| v(&scan.volumes[i]) / scan.radii[i].powi(n);
    let start = scan.radii.iter().position(|r| *r >= diameter * (1.0 - 1e-12)).unwrap_or(0);
    let rises = (start + 1..scan.radii.len())
        .filter(|&i| ratio(i, |v| v.upper) > ratio(i - 1, |v| v.lower) * (1.0 + GROWTH_TOLERANCE))
        .count();
    let last = scan.radii.len() - 1;
    let decay = ratio(last, |v| v.upper) / ratio(0, |v| v.lower);
    let mut r = r.decide_below(decay, 0.1).with_note(format!(
        "V/r^n from r = {:.4} to {:.4}; {rises} increases beyond r = {diameter:.4}",
        scan.radii[0], scan.radii[last]
    ));
    if rises > 0 {
        r.status = Status::Fail;
        r.pass = Some(false);
    }
    r
}

fn volumes(balls: &BallVolumes, radii: &[f64]) -> Result<Vec<VolumeBracket>> {
    radii.par_iter().map(|&r| balls.at(r)).collect()
}

/// Smallest `a ∈ [0, r0)` with `V(s) ≤ V(r0)((s-a)/(r0-a))^p` at every
/// scanned `s`.  The right side grows with `a`, so bisection applies.
fn fit_shift(v0: f64, radii: &[f64], vols: &[VolumeBracket], p: f64) -> f64 {
    let r0 = radii[0];
    let holds = |a: f64| {
        radii
            .iter()
            .zip(vols)
            .all(|(s, v)| v.upper <= v0 * ((s - a) / (r0 - a)).powf(p) * (1.0 + GROWTH_TOLERANCE))
    };
    if holds(0.0) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, r0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Shrinkers: `V(r) ≤ V(r0)((r-a)/(r0-a))^{n-δ}` with `δ = inf S` and `a`
/// fitted on `[r0, r]` and on `[r0, 2r]`; passes when the fitted shift does
/// not move under the doubling.
///
/// Expanders: `V(r) ≥ V(r0)((r+a)/(r0+a))^{n-2β}` with `β = max(-inf S, 0)`
/// and `a = 2√(f(o) + μ_e + β)`.  With bracketed volumes the check is
/// inconclusive where the brackets straddle the bound.
pub fn growth_bound_check(model: &SolitonModel, r0: f64, r: f64) -> Result<FunctionalReport> {
    if !(r0 > 0.0 && r > r0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("growth check needs 0 < r0 < r, got {r0}, {r}")));
    }
    let o = model.base_point();
    let n = model.total_dim as f64;
    let (s_min, s_max) = model.scalar_bounds();
    match model.kind {
        SolitonKind::Shrinking => {
            let report = blank(model, "volume:shrinker-upper");
            if let Err(why) = shrinker_hypotheses(model) {
                return Ok(report.not_applicable(why));
            }
            if !s_max.is_finite() {
                return Ok(report.not_applicable("scalar curvature is unbounded"));
            }
            let balls = BallVolumes::new(model, &o)?;
            let p = n - s_min;
            let radii = geometric_radii(r0, 2.0 * r, 2 * BOUND_POINTS);
            let vols = volumes(&balls, &radii)?;
            let half = radii.iter().position(|s| *s > r * (1.0 + 1e-12)).unwrap_or(radii.len());
            let v0 = vols[0].lower;
            let a = fit_shift(v0, &radii[..half], &vols[..half], p);
            let doubled = fit_shift(v0, &radii, &vols, p);
            Ok(report
                .decide_below(doubled - a, 1e-6 * r0)
                .with_note(format!("exponent n - δ = {p}; fitted a = {a:.6} on [r0, r], {doubled:.6} on [r0, 2r]")))
        }
        SolitonKind::Expanding => {
            let report = blank(model, "volume:expander-lower");
            let beta = (-s_min).max(0.0);
            let p = n - 2.0 * beta;
            let shift = model.geometry(&o)?.f + mu_invariant(model)? + beta;
            let a = 2.0 * shift.max(0.0).sqrt();
            let balls = BallVolumes::new(model, &o)?;
            let radii = geometric_radii(r0, r, BOUND_POINTS);
            let vols = volumes(&balls, &radii)?;
            let v0 = vols[0];
            let factor = |s: f64| ((s + a) / (r0 + a)).powf(p);
            let mut worst = f64::INFINITY;
            let mut violated = 0;
            let mut equality = 0.0f64;
            for (s, v) in radii.iter().zip(&vols).skip(1) {
                worst = worst.min(v.lower / (v0.upper * factor(*s)));
                equality = equality.max((v.estimate() / (v0.estimate() * factor(*s)) - 1.0).abs());
                if v.upper < v0.lower * factor(*s) * (1.0 - GROWTH_TOLERANCE) {
                    violated += 1;
                }
            }
            let case = if beta == 0.0 { "S ≥ 0" } else { "S ≥ -β" };
            let mut report = report.decide(worst, 1.0, GROWTH_TOLERANCE).with_note(format!(
                "{case}: β = {beta}, exponent {p}, a = {a:.6}; max |V(r)/bound - 1| = {equality:.3e}"
            ));
            if report.status == Status::Fail && violated == 0 {
                report.status = Status::Inconclusive;
                report.pass = None;
            }
            Ok(report)
        }
        SolitonKind::Steady => Ok(blank(model, "volume:growth").not_applicable("no volume growth bound for steady solitons")),
    }
}

/// The fitted exponent of an expander scan against `n - 2β`, one-sided; the
/// note says whether the power is also attained to within the tolerance.
pub fn expander_exponent_check(model: &SolitonModel, scan: &VolumeScan) -> FunctionalReport {
    let report = blank(model, "volume:expander-exponent");
    if model.kind != SolitonKind::Expanding {
        return report.not_applicable(format!("{} is not an expander", model.kind.label()));
    }
    let beta = (-model.scalar_bounds().0).max(0.0);
    let p = model.total_dim as f64 - 2.0 * beta;
    let fit = scan.fit;
    let sharp = (fit.exponent - p).abs() <= EXPONENT_TOLERANCE;
    report.decide(fit.exponent, p, EXPONENT_TOLERANCE).with_note(format!(
        "fitted exponent {:.5} in [{:.5}, {:.5}] from r = {:.3}; n - 2β = {p}{}",
        fit.exponent,
        fit.ci_low,
        fit.ci_high,
        fit.from_radius,
        if sharp { ", attained" } else { "" }
    ))
}

/// Points along rays from `centre` on one factor, out to distance `r_max`.
fn rays(factor: &GeometryFactor, centre: &FactorPoint, r_max: f64) -> Vec<FactorPoint> {
    let steps = (0..=RAY_STEPS).map(|j| r_max * j as f64 / RAY_STEPS as f64);
    match (factor, centre) {
        (GeometryFactor::FlatGaussian { dim, .. }, FactorPoint::Flat(c)) => {
            let diagonal = 1.0 / (*dim as f64).sqrt();
            steps
                .flat_map(|t| {
                    let axis: Vec<f64> = c.iter().enumerate().map(|(i, x)| if i == 0 { x + t } else { *x }).collect();
                    let diag: Vec<f64> = c.iter().map(|x| x - t * diagonal).collect();
                    [FactorPoint::Flat(axis), FactorPoint::Flat(diag)]
                })
                .collect()
        }
        (GeometryFactor::RoundSphere { dim, radius }, _) => {
            let top = (r_max / radius).min(std::f64::consts::PI);
            (0..=RAY_STEPS)
                .map(|j| {
                    let mut angles = vec![0.0; *dim];
                    angles[0] = top * j as f64 / RAY_STEPS as f64;
                    FactorPoint::Sphere(angles)
                })
                .collect()
        }
        (GeometryFactor::Cigar, _) => steps
            .flat_map(|s| {
                let x = s.sinh();
                let d = x * std::f64::consts::FRAC_1_SQRT_2;
                [FactorPoint::Cigar([x, 0.0]), FactorPoint::Cigar([-d, d])]
            })
            .collect(),
        _ => vec![centre.clone()],
    }
}

/// `(r(x), f(x))` over products of rays, with `f` taken without its
/// normalising constant.
fn potential_samples(model: &SolitonModel, r_max: f64) -> Result<Vec<(f64, f64)>> {
    let o = model.base_point();
    let mut points: Vec<Vec<FactorPoint>> = vec![Vec::new()];
    for (factor, c) in model.factors.iter().zip(&o.factors) {
        let ray = rays(factor, c, r_max);
        points = points
            .into_iter()
            .flat_map(|p| {
                ray.iter().map(move |q| {
                    let mut p = p.clone();
                    p.push(q.clone());
                    p
                })
            })
            .collect();
    }
    let mut out = points
        .into_par_iter()
        .map(|p| {
            let p = ChartPoint::new(p);
            Ok((geodesic_distance(model, &o, &p)?, model.potential(&p)? - model.potential_offset))
        })
        .collect::<Result<Vec<_>>>()?;
    out.retain(|(r, _)| *r <= r_max * (1.0 + 1e-12));
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(out)
}

/// Shrinkers: the smallest `C₁` with `(r - C₁)² ≤ 4τf ≤ (r + C₁)²` over the
/// samples within `r_max`, compared with the value within `2r_max`.
///
/// Steady solitons: the smallest secant slope `δ` of `f` against `r` beyond
/// `r_max/4` and the matching `C` in `f ≥ δr - C`, again under doubling.
pub fn potential_growth_check(model: &SolitonModel, r_max: f64) -> Result<FunctionalReport> {
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("sample radius {r_max}")));
    }
    let report = blank(model, "volume:potential-growth");
    if model.has_abstract_factor() {
        return Ok(report.not_applicable("the model has no pointwise chart"));
    }
    match model.kind {
        SolitonKind::Shrinking => {
            let samples = potential_samples(model, 2.0 * r_max)?;
            let four_tau = 4.0 * model.tau;
            let c1 = |limit: f64| {
                samples
                    .iter()
                    .filter(|(r, _)| *r <= limit * (1.0 + 1e-12))
                    .map(|(r, f)| {
                        let q = (four_tau * f.max(0.0)).sqrt();
                        (r - q).abs()
                    })
                    .fold(0.0, f64::max)
            };
            let (base, doubled) = (c1(r_max), c1(2.0 * r_max));
            Ok(report
                .decide_below(doubled, base + 1e-9 * (1.0 + base))
                .with_note(format!("C1 = {base:.6} within r = {r_max}, {doubled:.6} within {}", 2.0 * r_max)))
        }
        SolitonKind::Steady => {
            let samples = potential_samples(model, 2.0 * r_max)?;
            let cut = 0.25 * r_max;
            let fit = |limit: f64| {
                let tail: Vec<&(f64, f64)> = samples
                    .iter()
                    .filter(|(r, _)| *r >= cut && *r <= limit * (1.0 + 1e-12))
                    .collect();
                let delta = tail
                    .windows(2)
                    .filter(|w| w[1].0 - w[0].0 > 1e-9)
                    .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
                    .fold(f64::INFINITY, f64::min);
                let c = samples
                    .iter()
                    .filter(|(r, _)| *r <= limit * (1.0 + 1e-12))
                    .map(|(r, f)| delta * r - f)
                    .fold(0.0, f64::max);
                (delta, c)
            };
            let ((delta, c), (delta2, c2)) = (fit(r_max), fit(2.0 * r_max));
            let mut report = report.decide(delta, 0.0, 0.0).with_note(format!(
                "δ = {delta:.6}, C = {c:.6} beyond r = {cut} within {r_max}; δ = {delta2:.6}, C = {c2:.6} within {}",
                2.0 * r_max
            ));
            let stable = delta.is_finite() && (delta - delta2).abs() <= 1e-6 && c2 <= c + 1e-6 * (1.0 + c);
            if !stable {
                report.status = Status::Fail;
                report.pass = Some(false);
            }
            Ok(report)
        }
        SolitonKind::Expanding => Ok(report.not_applicable("no potential growth statement is checked for expanders")),
    }
}
