use super::*;
use approx::assert_abs_diff_eq;
use proptest::prelude::*;

fn sphere_mu_closed_form(k: u32) -> f64 {
    // log(e^k (2k-1)! / ((2(2k-1))^k (k-1)!)), summed in logs.
    let kf = k as f64;
    let ln_fact = |m: u32| (1..=m).map(|i| (i as f64).ln()).sum::<f64>();
    kf + ln_fact(2 * k - 1) - kf * (2.0 * (2.0 * kf - 1.0)).ln() - ln_fact(k - 1)
}

#[test]
fn gaussian_offsets_and_potential_values() {
    let g2 = SolitonModel::gaussian_shrinker(2, None, 1.0).unwrap();
    assert_abs_diff_eq!(g2.potential(&ChartPoint::flat(&[0.0, 0.0])).unwrap(), 0.0, epsilon = 1e-14);

    let g1 = parse_model_id("gaussian-shrinker:n=1,b=1").unwrap();
    assert_abs_diff_eq!(g1.potential_offset, 1.0, epsilon = 1e-14);
    assert_abs_diff_eq!(g1.potential(&ChartPoint::flat(&[0.0])).unwrap(), 1.0, epsilon = 1e-14);

    let cigar = SolitonModel::cigar().unwrap();
    assert_abs_diff_eq!(
        cigar.potential(&ChartPoint::cigar(0.0, 0.0)).unwrap(),
        std::f64::consts::PI.ln(),
        epsilon = 1e-14
    );
}

#[test]
fn curvature_and_potential_derivatives() {
    let s2 = SolitonModel::sphere(2, 1.0).unwrap();
    for p in s2.sample_points(10) {
        assert_abs_diff_eq!(s2.scalar_curvature(&p).unwrap(), 1.0, epsilon = 1e-14);
    }
    let g3 = SolitonModel::gaussian_shrinker(3, None, 1.0).unwrap();
    let p = ChartPoint::flat(&[0.0, 2.0, 0.0]);
    assert_eq!(g3.scalar_curvature(&p).unwrap(), 0.0);
    assert_abs_diff_eq!(g3.grad_potential_normsq(&p).unwrap(), 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(g3.laplacian_potential(&p).unwrap(), 1.5, epsilon = 1e-15);

    let cigar = SolitonModel::cigar().unwrap();
    assert_abs_diff_eq!(cigar.scalar_curvature(&ChartPoint::cigar(0.0, 0.0)).unwrap(), 4.0);
    let p = ChartPoint::cigar(0.6, 0.8);
    assert_abs_diff_eq!(cigar.grad_potential_normsq(&p).unwrap(), 2.0, epsilon = 1e-14);
    assert_abs_diff_eq!(cigar.laplacian_potential(&p).unwrap(), 2.0, epsilon = 1e-14);

    let cyl = SolitonModel::cylinder(2, 2, 1.0).unwrap();
    let p = ChartPoint::new(vec![
        FactorPoint::Sphere(vec![0.3, 1.0]),
        FactorPoint::Flat(vec![0.0, 0.0]),
    ]);
    assert_abs_diff_eq!(cyl.grad_potential_normsq(&p).unwrap(), 0.0);
    assert_abs_diff_eq!(cyl.laplacian_potential(&p).unwrap(), 1.0, epsilon = 1e-15);
}

#[test]
fn residuals_flag_wrong_radius() {
    let g = SolitonModel::gaussian_shrinker(3, None, 1.0).unwrap();
    assert!(soliton_residual(&g, &g.sample_points(100)).unwrap() < 1e-13);

    let cigar = SolitonModel::cigar().unwrap();
    assert!(soliton_residual(&cigar, &cigar.sample_points(100)).unwrap() <= 1e-12);

    let bad = SolitonModel::from_factors(
        "cylinder:k=2,m=2,r2=2.1",
        SolitonKind::Shrinking,
        vec![
            GeometryFactor::RoundSphere {
                dim: 2,
                radius: 2.1f64.sqrt(),
            },
            GeometryFactor::flat(2, 1.0),
        ],
        1.0,
    )
    .unwrap();
    let r = soliton_residual(&bad, &bad.sample_points(20)).unwrap();
    assert!(r > 0.01, "residual {r}");
    assert!(matches!(mu_invariant(&bad), Err(Error::InconsistentModel { .. })));
    assert!(bad.clone().checked().is_err());
}

#[test]
fn residual_needs_two_points() {
    let g = SolitonModel::gaussian_shrinker(1, None, 1.0).unwrap();
    assert!(matches!(
        soliton_residual(&g, &g.sample_points(1)),
        Err(Error::TooFewSamples { .. })
    ));
}

#[test]
fn invariants_of_basic_models() {
    assert_abs_diff_eq!(mu_invariant(&SolitonModel::gaussian_shrinker(4, None, 1.0).unwrap()).unwrap(), 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(
        mu_invariant(&SolitonModel::sphere(2, 1.0).unwrap()).unwrap(),
        1.0 - 2f64.ln(),
        epsilon = 1e-12
    );
    assert_abs_diff_eq!(mu_invariant(&SolitonModel::cigar().unwrap()).unwrap(), 4.0, epsilon = 1e-12);
    assert_abs_diff_eq!(mu_invariant(&SolitonModel::gaussian_expander(3, None).unwrap()).unwrap(), 0.0, epsilon = 1e-12);
}

#[test]
fn even_sphere_sequence_matches_closed_form() {
    let mut prev = f64::INFINITY;
    for k in 1..=5u32 {
        let n = 2 * k as usize;
        let mu = mu_invariant(&SolitonModel::sphere(n, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(mu, sphere_mu_closed_form(k), epsilon = 1e-10);
        assert!(mu < prev);
        prev = mu;
    }
    assert_abs_diff_eq!(sphere_mu_closed_form(2), 2.0 - 6f64.ln(), epsilon = 1e-14);
    assert!((prev - 0.5 * (std::f64::consts::E / 2.0).ln()).abs() < 0.02);
}

#[test]
fn einstein_formula_for_spheres() {
    for n in 2..=7 {
        let m = SolitonModel::sphere(n, 1.0).unwrap();
        let vol = m.factors[0].volume().unwrap();
        let nf = n as f64;
        let expected = nf / 2.0 - vol.ln() + nf / 2.0 * (4.0 * std::f64::consts::PI).ln();
        assert_abs_diff_eq!(mu_invariant(&m).unwrap(), expected, epsilon = 1e-10);
    }
}

#[test]
fn product_additivity_and_tilt_invariance() {
    let s2 = mu_invariant(&SolitonModel::sphere(2, 1.0).unwrap()).unwrap();
    let s3 = mu_invariant(&SolitonModel::sphere(3, 1.0).unwrap()).unwrap();
    let cyl22 = mu_invariant(&SolitonModel::cylinder(2, 2, 1.0).unwrap()).unwrap();
    let cyl31 = mu_invariant(&SolitonModel::cylinder(3, 1, 1.0).unwrap()).unwrap();
    assert_abs_diff_eq!(cyl22, s2, epsilon = 1e-12);
    assert_abs_diff_eq!(cyl31, s3, epsilon = 1e-12);
    for b in [0.5, 1.0, 2.0] {
        for n in 1..=3 {
            let g = parse_model_id(&format!("gaussian-shrinker:n={n},b={b}")).unwrap();
            assert_abs_diff_eq!(mu_invariant(&g).unwrap(), 0.0, epsilon = 1e-12);
            let e = parse_model_id(&format!("gaussian-expander:n={n},b={b}")).unwrap();
            assert_abs_diff_eq!(mu_invariant(&e).unwrap(), 0.0, epsilon = 1e-12);
        }
    }
}

#[test]
fn expander_product_invariant() {
    let (k, vol) = (2.0, 25.0);
    let m = parse_model_id("einstein-expander-product:k=2,m=2,vol=25").unwrap();
    let expected = -k / 2.0 - f64::ln(vol) + k / 2.0 * (4.0 * std::f64::consts::PI).ln();
    assert_abs_diff_eq!(mu_invariant(&m).unwrap(), expected, epsilon = 1e-12);
    assert!(matches!(
        m.potential(&m.base_point()),
        Err(Error::UnsupportedChart(_))
    ));
    assert!(geodesic_distance(&m, &m.base_point(), &m.base_point()).is_err());
}

#[test]
fn tau_independence() {
    for id in ["sphere:n=2", "sphere:n=3", "cylinder:k=2,m=2", "gaussian-shrinker:n=2,b=1"] {
        let base = mu_invariant(&parse_model_id(id).unwrap()).unwrap();
        for tau in [0.5, 2.0] {
            let m = parse_model_id(&format!("{id},tau={tau}")).unwrap();
            assert_abs_diff_eq!(mu_invariant(&m).unwrap(), base, epsilon = 1e-10);
        }
    }
}

#[test]
fn curvature_dimension_bounds() {
    let g = SolitonModel::gaussian_shrinker(2, None, 1.0).unwrap();
    let pts = g.sample_points(5);
    let dirs: Vec<_> = (0..5).map(|i| TangentVector::new(vec![vec![1.0, i as f64]])).collect();
    assert_eq!(cd_lower_bound(&g, &pts, &dirs).unwrap().value, 0.5);

    let cyl = SolitonModel::cylinder(2, 2, 1.0).unwrap();
    let pts = cyl.sample_points(5);
    let dirs: Vec<_> = pts
        .iter()
        .map(|_| TangentVector::new(vec![vec![0.2, -1.0, 0.5], vec![1.0, 0.3]]))
        .collect();
    assert_abs_diff_eq!(cd_lower_bound(&cyl, &pts, &dirs).unwrap().value, 0.5, epsilon = 1e-15);

    let cigar = SolitonModel::cigar().unwrap();
    let pts: Vec<_> = (0..=10).map(|i| ChartPoint::cigar(i as f64, 0.0)).collect();
    let k = cd_lower_bound_isotropic(&cigar, &pts).unwrap().value;
    assert_abs_diff_eq!(k, 4.0 / 101.0, epsilon = 1e-15);

    let e = parse_model_id("einstein-expander-product:k=2,m=2,vol=25").unwrap();
    let b = cd_lower_bound_isotropic(&e, &e.sample_points(3)).unwrap();
    assert!(b.from_einstein_constants);
    assert_abs_diff_eq!(b.value, -0.5 + 0.0, epsilon = 1e-15);
}

#[test]
fn distances() {
    let s2 = SolitonModel::sphere(2, 1.0).unwrap();
    let d = geodesic_distance(&s2, &ChartPoint::sphere(&[0.0, 0.0]), &ChartPoint::sphere(&[std::f64::consts::PI, 0.0])).unwrap();
    assert_abs_diff_eq!(d, std::f64::consts::PI * 2f64.sqrt(), epsilon = 1e-12);

    let g = SolitonModel::gaussian_shrinker(2, None, 1.0).unwrap();
    assert_abs_diff_eq!(geodesic_distance(&g, &ChartPoint::flat(&[0.0, 0.0]), &ChartPoint::flat(&[3.0, 4.0])).unwrap(), 5.0);

    let cigar = SolitonModel::cigar().unwrap();
    let e = std::f64::consts::E;
    let d = geodesic_distance(&cigar, &ChartPoint::cigar(0.0, 0.0), &ChartPoint::cigar(e, 0.0)).unwrap();
    // Composite Simpson on ∫_0^e ds/√(1+s²).
    let m = 2000;
    let h = e / m as f64;
    let g = |s: f64| 1.0 / (1.0 + s * s).sqrt();
    let simpson: f64 = (0..=m)
        .map(|i| {
            let w = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            w * g(i as f64 * h)
        })
        .sum::<f64>()
        * h
        / 3.0;
    assert_abs_diff_eq!(d, simpson, epsilon = 1e-12);
    assert_abs_diff_eq!(d, 1.7254, epsilon = 1e-4);
    assert!(geodesic_distance(&cigar, &ChartPoint::cigar(1.0, 0.0), &ChartPoint::cigar(0.0, 1.0)).is_err());
}

#[test]
fn id_parsing() {
    for id in default_catalog_ids() {
        let m = parse_model_id(id).unwrap();
        assert_eq!(m.id, id);
    }
    assert!(default_catalog_ids().len() >= 8);
    for bad in ["", "torus:n=2", "sphere", "sphere:n=1", "sphere:n=x", "cylinder:k=2", "sphere:n=2,foo=1", "cigar:n=2"] {
        assert!(parse_model_id(bad).is_err(), "{bad}");
    }
    assert_eq!(parse_model_id("sphere:n=2,tau=0.5").unwrap().id, "sphere:n=2,tau=0.5");
}

#[test]
fn mismatched_chart_is_rejected() {
    let s2 = SolitonModel::sphere(2, 1.0).unwrap();
    assert!(s2.potential(&ChartPoint::flat(&[0.0, 0.0])).is_err());
    assert!(s2.potential(&ChartPoint::sphere(&[4.0, 0.0])).is_err());
}

proptest! {
    #[test]
    fn flat_identities_hold_pointwise(x in prop::collection::vec(-20.0f64..20.0, 3), b in -2.0f64..2.0, tau in 0.25f64..4.0) {
        let m = SolitonModel::gaussian_shrinker(3, Some(vec![b, 0.0, 0.0]), tau).unwrap();
        let g = m.geometry(&ChartPoint::flat(&x)).unwrap();
        prop_assert!((m.identity_value(&g)).abs() < 1e-9 * (1.0 + g.f.abs()));
        prop_assert!(m.trace_value(&g).abs() < 1e-12);
        prop_assert!((m.minimizer_identity(&g) + 0.0).abs() < 1e-9 * (1.0 + g.f.abs()));
    }

    #[test]
    fn cigar_identities_hold_pointwise(x in -1e3f64..1e3, y in -1e3f64..1e3) {
        let m = SolitonModel::cigar().unwrap();
        let g = m.geometry(&ChartPoint::cigar(x, y)).unwrap();
        prop_assert!((m.identity_value(&g) - 4.0).abs() < 1e-12);
        prop_assert!(m.trace_value(&g).abs() < 1e-12);
    }

    #[test]
    fn sphere_distance_is_symmetric_and_bounded(a in 0.0f64..3.1, b in 0.0f64..6.2, c in 0.0f64..3.1, d in 0.0f64..6.2) {
        let m = SolitonModel::sphere(2, 1.0).unwrap();
        let p = ChartPoint::sphere(&[a, b]);
        let q = ChartPoint::sphere(&[c, d]);
        let pq = geodesic_distance(&m, &p, &q).unwrap();
        let qp = geodesic_distance(&m, &q, &p).unwrap();
        prop_assert!((pq - qp).abs() < 1e-14);
        prop_assert!(pq <= std::f64::consts::PI * 2f64.sqrt() + 1e-12);
    }
}
