use super::*;
use crate::catalog::parse_model_id;
use crate::report::Status;
use approx::{assert_abs_diff_eq, assert_relative_eq};
use proptest::prelude::*;

fn model(id: &str) -> SolitonModel {
    parse_model_id(id).unwrap()
}

fn at(id: &str, r: f64) -> VolumeBracket {
    let m = model(id);
    ball_volume(&m, &m.base_point(), r).unwrap()
}

/// `∫_{|y|<r} V_S(√(r²-|y|²)) dy` for `S²(R) × R²` with `V_S(s) = 2πR²(1 - cos(s/R))`
/// capped at `4πR²`, integrated by hand.
fn cylinder_22(r: f64) -> f64 {
    let big_r = 2f64.sqrt();
    let inner = |u: f64| 4.0 * PI * PI * big_r * big_r * (u * u / 2.0 - big_r * u * (u / big_r).sin() - big_r * big_r * (u / big_r).cos() + big_r * big_r);
    let cap = PI * big_r;
    if r <= cap {
        inner(r)
    } else {
        inner(cap) + 2.0 * PI * 4.0 * PI * big_r * big_r * (r * r - cap * cap) / 2.0
    }
}

/// Simpson's rule on `2∫_0^r V_{S³}(√(r²-y²)) dy`, `V_{S³}(s) = 2πR³(θ - sinθ cosθ)`.
fn cylinder_31(r: f64) -> f64 {
    let radius = 2.0;
    let sphere = |s: f64| {
        let t = (s / radius).min(PI);
        2.0 * PI * radius.powi(3) * (t - t.sin() * t.cos())
    };
    let n = 200_000;
    let h = r / n as f64;
    let g = |y: f64| sphere((r * r - y * y).max(0.0).sqrt());
    let mut s = g(0.0) + g(r);
    for j in 1..n {
        s += if j % 2 == 1 { 4.0 } else { 2.0 } * g(h * j as f64);
    }
    2.0 * s * h / 3.0
}

#[test]
fn euclidean_balls() {
    assert_abs_diff_eq!(at("gaussian-shrinker:n=3", 2.0).lower, 33.510_321_638_291_124, epsilon = 1e-12);
    assert!(at("gaussian-shrinker:n=3", 2.0).is_exact());
    assert_eq!(at("gaussian-shrinker:n=2", 0.0).upper, 0.0);
    // Tilted centre: volumes do not depend on o.
    let m = model("gaussian-expander:n=2,b=0.3");
    let v = ball_volume(&m, &ChartPoint::flat(&[1.0, -4.0]), 3.0).unwrap();
    assert_relative_eq!(v.lower, 9.0 * PI, max_relative = 1e-14);
}

#[test]
fn spheres() {
    // 2πR²(1 - cos(r/R)) with R = √2 for the τ = 1 shrinking S².
    let big_r = 2f64.sqrt();
    for r in [0.3f64, 1.0, 3.0, 10.0] {
        let exact = 2.0 * PI * big_r * big_r * (1.0 - (r.min(PI * big_r) / big_r).cos());
        assert_relative_eq!(at("sphere:n=2", r).lower, exact, max_relative = 1e-13);
    }
    // S³ of radius 2: total volume 2π²R³.
    assert_relative_eq!(at("sphere:n=3", 100.0).lower, 16.0 * PI * PI, max_relative = 1e-13);
}

#[test]
fn cylinders() {
    for r in [0.5, 2.0, PI * 2f64.sqrt(), 7.0, 40.0, 1000.0] {
        assert_relative_eq!(at("cylinder:k=2,m=2", r).lower, cylinder_22(r), max_relative = 1e-12);
    }
    let big = 1e4;
    assert_relative_eq!(at("cylinder:k=2,m=2", big).lower / (8.0 * PI * PI * big * big), 1.0, max_relative = 1e-6);
    for r in [1.0, 5.0, 30.0] {
        assert_relative_eq!(at("cylinder:k=3,m=1", r).lower, cylinder_31(r), max_relative = 1e-9);
    }
}

#[test]
fn cigar_balls() {
    // The cigar ball about the tip has area 2π log cosh r.
    for r in [0.1f64, 1.0, 5.0, 40.0, 300.0] {
        let log_cosh = if r < 20.0 { r.cosh().ln() } else { r - 2f64.ln() + (-2.0 * r).exp().ln_1p() };
        let exact = 2.0 * PI * log_cosh;
        assert_relative_eq!(at("cigar", r).lower, exact, max_relative = 1e-13);
    }
    let v = at("cigar", 1e3).lower;
    assert_relative_eq!(v / (2.0 * PI * 1e3), 1.0, max_relative = 1e-3);
    let m = model("cigar");
    assert!(matches!(ball_volume(&m, &ChartPoint::cigar(1.0, 0.0), 1.0), Err(Error::Unsupported(_))));
}

#[test]
fn einstein_brackets() {
    let m = model("einstein-expander-product:k=2,m=2,vol=25");
    let balls = BallVolumes::new(&m, &m.base_point()).unwrap();
    assert!(!balls.is_exact());
    let mut last = VolumeBracket::exact(0.0);
    for r in [0.5, 2.0, 10.0, 50.0, 500.0] {
        let v = balls.at(r).unwrap();
        assert!(v.lower < v.upper, "{r}: {v:?}");
        assert!(v.lower >= last.lower && v.upper >= last.upper);
        // B(r) sits inside N × B²(r).
        assert!(v.upper <= 25.0 * PI * r * r * (1.0 + 1e-13));
        last = v;
    }
    // Relative width falls like r^-2.
    let w = |r: f64| {
        let v = balls.at(r).unwrap();
        (v.upper - v.lower) / v.lower
    };
    assert!(w(1000.0) < 1e-3 && w(1000.0) < w(100.0) / 50.0);
    // Bishop comparison for a hyperbolic surface of curvature -1/2 below
    // the cap: 4π(cosh(s/√2) - 1).
    let fibre = Fibre::of(&m.factors[0]).unwrap();
    let s: f64 = 1.5;
    assert_relative_eq!(fibre.volume(s).upper, 4.0 * PI * ((s / 2f64.sqrt()).cosh() - 1.0), max_relative = 1e-13);
    let cramped = GeometryFactor::AbstractEinstein {
        dim: 2,
        volume: 1e3,
        scalar_curv: -1.0,
        diameter: 1.0,
    };
    assert!(matches!(Fibre::of(&cramped), Err(Error::InvalidParameter(_))));
}

#[test]
fn cylinder_avr_decays() {
    let m = model("cylinder:k=2,m=2");
    let d = characteristic_length(&m);
    assert_abs_diff_eq!(d, PI * 2f64.sqrt(), epsilon = 1e-14);
    let scan = avr_scan(&m, 100.0 * d).unwrap();
    assert_eq!(scan.radii.len(), SCAN_POINTS);
    let q = scan.series(4.0);
    assert!(q.last().unwrap() / q[0] < 0.1);
    // V/r⁴ ~ 8π²/r² so the growth exponent is 2.
    assert_abs_diff_eq!(scan.fit.exponent, 2.0, epsilon = 0.01);
    let r = avr_check(&m, &scan);
    assert_eq!(r.status, Status::Pass, "{r:?}");
    let r = avr_check(&model("cylinder:k=3,m=1"), &avr_scan(&model("cylinder:k=3,m=1"), 100.0 * PI * 2.0).unwrap());
    assert_eq!(r.status, Status::Pass, "{r:?}");
    let r = avr_check(&model("sphere:n=2"), &avr_scan(&model("sphere:n=2"), 100.0 * PI * 2f64.sqrt()).unwrap());
    assert_eq!(r.status, Status::Pass, "{r:?}");
}

#[test]
fn flat_avr_is_not_applicable() {
    let m = model("gaussian-shrinker:n=3");
    let scan = avr_scan(&m, 100.0).unwrap();
    for q in scan.series(3.0) {
        assert_relative_eq!(q, 4.0 * PI / 3.0, max_relative = 1e-14);
    }
    let r = avr_check(&m, &scan);
    assert_eq!(r.status, Status::NotApplicable);
    assert_eq!(r.note.as_deref(), Some("flat case: AVR positive"));
    assert_eq!(avr_check(&model("cigar"), &avr_scan(&model("cigar"), 100.0).unwrap()).status, Status::NotApplicable);
}

#[test]
fn expander_equality_case() {
    let m = model("gaussian-expander:n=3");
    let r = growth_bound_check(&m, 1.0, 50.0).unwrap();
    assert_eq!(r.status, Status::Pass, "{r:?}");
    assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-12);
    let scan = avr_scan(&m, 100.0).unwrap();
    assert_abs_diff_eq!(scan.fit.exponent, 3.0, epsilon = 1e-12);
    assert_eq!(expander_exponent_check(&m, &scan).status, Status::Pass);
}

#[test]
fn expander_product_exponent() {
    let m = model("einstein-expander-product:k=2,m=2,vol=25");
    let d = characteristic_length(&m);
    let scan = avr_scan(&m, 100.0 * d).unwrap();
    assert!((scan.fit.exponent - 2.0).abs() <= 0.05, "{:?}", scan.fit);
    assert!(scan.fit.ci_low <= scan.fit.exponent && scan.fit.exponent <= scan.fit.ci_high);
    let r = expander_exponent_check(&m, &scan);
    assert_eq!(r.status, Status::Pass, "{r:?}");
    // The bracket straddles the bound next to r0, but nothing is violated.
    let r = growth_bound_check(&m, d, 100.0 * d).unwrap();
    assert_ne!(r.status, Status::Fail, "{r:?}");
}

#[test]
fn shrinker_upper_bound() {
    let m = model("cylinder:k=2,m=2");
    let d = characteristic_length(&m);
    let r = growth_bound_check(&m, d, 20.0 * d).unwrap();
    assert_eq!(r.status, Status::Pass, "{r:?}");
    assert!(r.note.as_ref().unwrap().contains("exponent n - δ = 3"));
    for id in ["sphere:n=2", "sphere:n=3", "cylinder:k=3,m=1"] {
        let m = model(id);
        let d = characteristic_length(&m);
        let r = growth_bound_check(&m, d, 20.0 * d).unwrap();
        assert_eq!(r.status, Status::Pass, "{id}: {r:?}");
    }
    let flat = growth_bound_check(&model("gaussian-shrinker:n=2"), 1.0, 10.0).unwrap();
    assert_eq!(flat.status, Status::NotApplicable);
    assert_eq!(growth_bound_check(&model("cigar"), 1.0, 10.0).unwrap().status, Status::NotApplicable);
    assert!(growth_bound_check(&m, 2.0, 1.0).is_err());
}

#[test]
fn shrinker_fit_detects_fast_growth() {
    // R^3 grows like r^3, faster than r^{3-δ} for any δ > 0: the fitted shift
    // creeps towards r0 as the range doubles.
    let m = model("gaussian-shrinker:n=3");
    let balls = BallVolumes::new(&m, &m.base_point()).unwrap();
    let radii = geometric_radii(1.0, 40.0, 64);
    let vols: Vec<_> = radii.iter().map(|r| balls.at(*r).unwrap()).collect();
    let a = checks_fit(&radii[..32], &vols[..32]);
    let b = checks_fit(&radii, &vols);
    assert!(b > a + 1e-3, "{a} {b}");
}

fn checks_fit(radii: &[f64], vols: &[VolumeBracket]) -> f64 {
    // Same bisection as the shrinker check with exponent 2.
    let r0 = radii[0];
    let holds = |a: f64| {
        radii
            .iter()
            .zip(vols)
            .all(|(s, v)| v.upper <= vols[0].lower * ((s - a) / (r0 - a)).powi(2) * (1.0 + GROWTH_TOLERANCE))
    };
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

#[test]
fn potential_growth() {
    let r = potential_growth_check(&model("gaussian-shrinker:n=3"), 10.0).unwrap();
    assert_eq!(r.status, Status::Pass, "{r:?}");
    assert!(r.value <= 1e-12, "{r:?}");
    let r = potential_growth_check(&model("cylinder:k=2,m=2"), 10.0).unwrap();
    assert_eq!(r.status, Status::Pass, "{r:?}");
    assert!(r.value <= PI * 2f64.sqrt() + 1e-12, "{r:?}");
    assert!(r.value >= PI * 2f64.sqrt() - 1e-9, "{r:?}");
    let r = potential_growth_check(&model("gaussian-shrinker:n=2,b=0.4"), 10.0).unwrap();
    assert_eq!(r.status, Status::Pass, "{r:?}");
    let r = potential_growth_check(&model("cigar"), 20.0).unwrap();
    assert_eq!(r.status, Status::Pass, "{r:?}");
    assert!(r.value >= 1.9, "{r:?}");
    assert_eq!(
        potential_growth_check(&model("einstein-expander-product:k=2,m=2,vol=25"), 10.0).unwrap().status,
        Status::NotApplicable
    );
}

#[test]
fn scan_csv() {
    let m = model("gaussian-shrinker:n=2");
    let scan = avr_scan(&m, 10.0).unwrap();
    let csv = scan.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "r,V,V_over_r_n");
    assert_eq!(lines.len(), SCAN_POINTS + 1);
    assert!(lines[SCAN_POINTS].starts_with("1e1,"));
    assert!(avr_scan(&m, -1.0).is_err());
    assert!(ball_volume(&m, &m.base_point(), f64::NAN).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn volumes_are_monotone(
        pick in 0usize..6,
        r1 in 0.0f64..60.0,
        step in 0.0f64..20.0,
    ) {
        let ids = ["gaussian-shrinker:n=2", "sphere:n=3", "cylinder:k=2,m=2", "cylinder:k=3,m=1", "cigar", "einstein-expander-product:k=2,m=2,vol=25"];
        let a = at(ids[pick], r1);
        let b = at(ids[pick], r1 + step);
        prop_assert!(a.lower <= b.lower * (1.0 + 1e-13) + 1e-300);
        prop_assert!(a.upper <= b.upper * (1.0 + 1e-13) + 1e-300);
        prop_assert!(a.lower <= a.upper);
    }

    #[test]
    fn bishop_gromov_beyond_the_diameter(
        pick in 0usize..4,
        t1 in 1.0f64..50.0,
        t2 in 1.0f64..50.0,
    ) {
        let ids = ["sphere:n=2", "sphere:n=3", "cylinder:k=2,m=2", "cylinder:k=3,m=1"];
        let m = model(ids[pick]);
        let d = characteristic_length(&m);
        let (r1, r2) = (d * t1.min(t2), d * t1.max(t2));
        let n = m.total_dim as i32;
        let q1 = at(ids[pick], r1).lower / r1.powi(n);
        let q2 = at(ids[pick], r2).upper / r2.powi(n);
        prop_assert!(q2 <= q1 * (1.0 + 1e-12));
    }
}
