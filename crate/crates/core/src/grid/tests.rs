use super::*;
use crate::catalog::{parse_model_id, SolitonModel};
use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use std::f64::consts::PI;

fn grid_for(model: &SolitonModel) -> QuadratureGrid {
    build_grid(model, Resolution::default(), Cutoff::default()).unwrap()
}

/// `∫ g · e^{-f} (4πτ)^{-n/2} dΓ` on the full product grid.
fn reference_integral(model: &SolitonModel, grid: &QuadratureGrid, g: impl Fn(&ChartPoint) -> f64 + Sync) -> f64 {
    let pre = reference_log_prefactor(model);
    integrate_fn(grid, |p| {
        let geo = model.geometry(p)?;
        Ok((-geo.f - pre).exp() * g(p))
    })
    .unwrap()
}

#[test]
fn sphere_area() {
    let model = parse_model_id("sphere:n=2").unwrap();
    let grid = build_grid(&model, Resolution::new(64, 64), Cutoff::default()).unwrap();
    let area = integrate_fn(&grid, |_| Ok(1.0)).unwrap();
    assert_abs_diff_eq!(area, 8.0 * PI, epsilon = 1e-10);
    assert!(grid.factors[0].weights.iter().all(|w| *w > 0.0));
}

#[test]
fn gaussian_mass_and_moments() {
    let m2 = parse_model_id("gaussian-shrinker:n=2").unwrap();
    let g2 = grid_for(&m2);
    assert_abs_diff_eq!(reference_integral(&m2, &g2, |_| 1.0), 1.0, epsilon = 1e-12);
    let x1 = |p: &ChartPoint| match &p.factors[0] {
        FactorPoint::Flat(x) => x[0],
        _ => unreachable!(),
    };
    assert_abs_diff_eq!(reference_integral(&m2, &g2, x1), 0.0, epsilon = 1e-12);

    let m3 = parse_model_id("gaussian-shrinker:n=3").unwrap();
    let g3 = grid_for(&m3);
    let r2 = |p: &ChartPoint| match &p.factors[0] {
        FactorPoint::Flat(x) => x.iter().map(|v| v * v).sum(),
        _ => unreachable!(),
    };
    assert_abs_diff_eq!(reference_integral(&m3, &g3, r2), 6.0, epsilon = 1e-10);
    let ef = reference_integral(&m3, &g3, |p| m3.potential(p).unwrap());
    assert_abs_diff_eq!(ef, 1.5, epsilon = 1e-10);
}

#[test]
fn tilted_gaussian_is_normalised() {
    let model = parse_model_id("gaussian-shrinker:n=2,b=1.5").unwrap();
    let grid = grid_for(&model);
    assert_abs_diff_eq!(reference_integral(&model, &grid, |_| 1.0), 1.0, epsilon = 1e-12);
}

#[test]
fn cigar_mass() {
    let model = parse_model_id("cigar").unwrap();
    let grid = grid_for(&model);
    assert_abs_diff_eq!(reference_integral(&model, &grid, |_| 1.0), 1.0, epsilon = 1e-8);
    let area = reference_integral(&model, &grid, |p| match &p.factors[0] {
        FactorPoint::Cigar([x, y]) => (x * x + y * y).ln_1p(),
        _ => unreachable!(),
    });
    // ∫ log(1+r²) dx dy / (π(1+r²)²) = 1.
    assert_abs_diff_eq!(area, 1.0, epsilon = 1e-8);
}

#[test]
fn product_and_abstract_masses() {
    for id in ["cylinder:k=2,m=2", "cylinder:k=3,m=1", "sphere:n=3", "einstein-expander-product:k=2,m=2,vol=25"] {
        let model = parse_model_id(id).unwrap();
        let grid = grid_for(&model);
        assert_abs_diff_eq!(reference_integral(&model, &grid, |_| 1.0), 1.0, epsilon = 1e-11);
    }
}

#[test]
fn non_finite_values_name_the_node() {
    let model = parse_model_id("sphere:n=2").unwrap();
    let grid = build_grid(&model, Resolution::new(8, 8), Cutoff::default()).unwrap();
    let mut v = vec![1.0; grid.node_count()];
    v[5] = f64::NAN;
    match integrate(&grid, &v) {
        Err(Error::NonFinite { node, .. }) => assert_eq!(node, 5),
        other => panic!("{other:?}"),
    }
}

#[test]
fn normalize_gridded_divides_by_mass() {
    let model = parse_model_id("gaussian-shrinker:n=1").unwrap();
    let grid = grid_for(&model);
    let pre = reference_log_prefactor(&model);
    let vals: Vec<f64> = (0..grid.node_count())
        .map(|k| 2.0 * (-model.potential(&grid.node(k).0).unwrap() - pre).exp())
        .collect();
    let d = normalize(&model, &grid, &Density::gridded(vals.clone())).unwrap();
    let got = d.gridded_values().unwrap();
    for (a, b) in got.iter().zip(&vals) {
        assert_abs_diff_eq!(*a, b / 2.0, epsilon = 1e-14);
    }
    assert!(normalize(&model, &grid, &Density::gridded(vec![0.0; grid.node_count()])).is_err());
}

#[test]
fn parametric_density_pointwise() {
    let model = parse_model_id("gaussian-shrinker:n=1").unwrap();
    let grid = grid_for(&model);
    let d = normalize(&model, &grid, &Density::param_gaussian(2.0, vec![])).unwrap();
    let g = d.grad_log_density(&model, &ChartPoint::flat(&[2.0])).unwrap();
    assert_abs_diff_eq!(g[0][0], -0.5, epsilon = 1e-14);
    // log ρ(0) = -(1/2) log(4π s) for N(0, 2s).
    let l0 = d.log_density(&model, &ChartPoint::flat(&[0.0])).unwrap();
    assert_abs_diff_eq!(l0, -0.5 * (8.0 * PI).ln(), epsilon = 1e-12);

    let reference = normalize(&model, &grid, &Density::reference()).unwrap();
    for x in [-3.0, 0.0, 0.7, 5.0] {
        let p = ChartPoint::flat(&[x]);
        assert_abs_diff_eq!(reference.psi(&model, &p).unwrap(), model.potential(&p).unwrap(), epsilon = 1e-12);
    }
}

#[test]
fn sphere_and_cigar_gradients_match_differences() {
    let h = 1e-6;
    let sphere = parse_model_id("sphere:n=2").unwrap();
    let grid = grid_for(&sphere);
    let d = normalize(&sphere, &grid, &Density::param_gaussian(0.5, vec![0.3, -0.2])).unwrap();
    let (th, ph) = (1.1, 0.4);
    let g = d.grad_log_density(&sphere, &ChartPoint::sphere(&[th, ph])).unwrap();
    let r = (2.0f64).sqrt();
    let l = |a: f64, b: f64| d.log_density(&sphere, &ChartPoint::sphere(&[a, b])).unwrap();
    // e_θ = (-sin θ, cos θ cos φ, cos θ sin φ), e_φ = (0, -sin φ, cos φ) for x̂ = (cos θ, sin θ cos φ, sin θ sin φ).
    let dth = (l(th + h, ph) - l(th - h, ph)) / (2.0 * h) / r;
    let dph = (l(th, ph + h) - l(th, ph - h)) / (2.0 * h) / (r * th.sin());
    let e_th = [-th.sin(), th.cos() * ph.cos(), th.cos() * ph.sin()];
    let e_ph = [0.0, -ph.sin(), ph.cos()];
    let proj = |e: &[f64; 3]| e.iter().zip(&g[0]).map(|(a, b)| a * b).sum::<f64>();
    assert_abs_diff_eq!(proj(&e_th), dth, epsilon = 1e-7);
    assert_abs_diff_eq!(proj(&e_ph), dph, epsilon = 1e-7);

    let cigar = parse_model_id("cigar").unwrap();
    let grid = grid_for(&cigar);
    for density in [
        Density::param_gaussian(0.7, vec![0.4, 0.1]),
        Density::tilted(0.3, TiltProfile::Height),
    ] {
        let d = normalize(&cigar, &grid, &density).unwrap();
        let (x, y) = (0.8, -1.3);
        let g = d.grad_log_density(&cigar, &ChartPoint::cigar(x, y)).unwrap();
        let l = |a: f64, b: f64| d.log_density(&cigar, &ChartPoint::cigar(a, b)).unwrap();
        let om = 1.0 + x * x + y * y;
        let gx = (l(x + h, y) - l(x - h, y)) / (2.0 * h) * om;
        let gy = (l(x, y + h) - l(x, y - h)) / (2.0 * h) * om;
        assert_abs_diff_eq!(g[0][0], gx, epsilon = 1e-7);
        assert_abs_diff_eq!(g[0][1], gy, epsilon = 1e-7);
    }
}

#[test]
fn gridded_gradient_is_unsupported() {
    let model = parse_model_id("gaussian-shrinker:n=1").unwrap();
    let d = Density::gridded(vec![1.0; 4]);
    assert!(matches!(
        d.grad_log_density(&model, &ChartPoint::flat(&[0.0])),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn separable_and_product_routes_agree() {
    let model = parse_model_id("cylinder:k=2,m=2").unwrap();
    let grid = build_grid(&model, Resolution::new(64, 16), Cutoff::default()).unwrap();
    let density = Density::param_gaussian(1.7, vec![0.2, -0.1, 0.3, 0.2]);
    let fs = factor_samples(&model, &grid, &density).unwrap();
    let sep: f64 = fs.iter().map(|s| s.expect(|p| p.ell + p.geom.f + p.grad_ell_sq)).sum::<f64>()
        + model.potential_offset;
    let full = product_expectation(&model, &grid, &density, |t| t.ell + t.f + t.grad_ell_sq).unwrap();
    assert_abs_diff_eq!(sep, full, epsilon = 1e-11);
    let mass = product_expectation(&model, &grid, &density, |_| 1.0).unwrap();
    assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-13);
}

#[test]
fn shell_reduction_is_exact() {
    let model = parse_model_id("gaussian-shrinker:n=3").unwrap();
    let grid = grid_for(&model);
    let density = Density::param_gaussian(0.6, vec![]);
    let reduced = factor_samples(&model, &grid, &density).unwrap();
    assert_eq!(reduced[0].len(), grid.factors[0].shells.as_ref().unwrap().radii.len());
    let a = reduced[0].expect(|p| p.grad_ell_sq);
    let b = product_expectation(&model, &grid, &density, |t| t.grad_ell_sq).unwrap();
    assert_abs_diff_eq!(a, b, epsilon = 1e-11);
}

#[test]
fn integrability_converges_with_cutoff() {
    for id in crate::catalog::default_catalog_ids() {
        let model = parse_model_id(id).unwrap();
        let integrals = |cutoff: f64| {
            let grid = build_grid(&model, Resolution::new(128, 8), Cutoff::Fixed(cutoff)).unwrap();
            let fs = factor_samples(&model, &grid, &Density::reference()).unwrap();
            // The four integrands are sums of factor terms plus constants.
            let e = |g: &dyn Fn(&PointSample) -> f64| fs.iter().map(|s| s.expect(g)).sum::<f64>();
            [
                e(&|p| p.geom.lap_f.abs()),
                e(&|p| p.geom.grad_f_sq),
                e(&|p| p.geom.f) + model.potential_offset,
                e(&|p| p.geom.scalar),
            ]
        };
        let base = match model.kind {
            crate::catalog::SolitonKind::Steady => 40.0,
            _ => 30.0,
        };
        let (a, b) = (integrals(base), integrals(2.0 * base));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10, "{id}: {x} vs {y}");
        }
    }
}

#[test]
fn csv_export() {
    let model = parse_model_id("sphere:n=2").unwrap();
    let grid = build_grid(&model, Resolution::new(4, 4), Cutoff::default()).unwrap();
    let csv = grid.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("f0_c0,f0_c1,weight"));
    assert_eq!(lines.count(), grid.node_count());
}

#[test]
fn cutoff_grows_with_dimension() {
    let r = |n: usize| {
        let m = SolitonModel::gaussian_shrinker(n, None, 1.0).unwrap();
        grid_for(&m).cutoff_radius()
    };
    assert!(r(1) < r(2) && r(2) < r(4));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weights_positive_and_param_mass_one(n in 1usize..5, s in 0.125f64..8.0, res in 8usize..16) {
        let model = SolitonModel::gaussian_shrinker(n, None, 1.0).unwrap();
        let grid = build_grid(&model, Resolution::new(16 * res, 8), Cutoff::default()).unwrap();
        prop_assert!(grid.factors.iter().all(|g| g.weights.iter().all(|w| *w > 0.0)));
        let d = normalize(&model, &grid, &Density::param_gaussian(s, vec![])).unwrap();
        let z = d.log_normalizers().unwrap()[0];
        // Closed form: log ∫ e^{-|x|²/(4s)} dx = (n/2) log(4πs).
        prop_assert!((z - 0.5 * n as f64 * (4.0 * PI * s).ln()).abs() < 1e-10);
    }

    #[test]
    fn pairwise_sum_matches_naive(v in proptest::collection::vec(-1.0f64..1.0, 0..2000)) {
        let naive: f64 = v.iter().sum();
        prop_assert!((pairwise_sum(&v) - naive).abs() < 1e-10);
    }
}
