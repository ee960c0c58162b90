//! One-dimensional Gauss rules.

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

/// Nodes and weights of a one-dimensional rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

/// Jacobi polynomial `P_n^{(a,a)}(x)` and its derivative via the three-term recurrence.
fn jacobi_symmetric(n: usize, a: f64, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut d0 = 0.0;
    if n == 0 {
        return (p0, d0);
    }
    let mut p1 = (a + 1.0) * x;
    let mut d1 = a + 1.0;
    for k in 2..=n {
        let k = k as f64;
        let c = 2.0 * k + 2.0 * a;
        let lhs = 2.0 * k * (k + 2.0 * a) * (c - 2.0);
        let b = (c - 1.0) * c * (c - 2.0);
        let e = 2.0 * (k + a - 1.0) * (k + a - 1.0) * c;
        let p2 = (b * x * p1 - e * p0) / lhs;
        let d2 = (b * (p1 + x * d1) - e * d0) / lhs;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
    }
    (p1, d1)
}

/// Gauss rule for the weight `(1 - x²)^a` on `[-1, 1]`, `a > -1`.
///
/// Nodes come from the Golub-Welsch eigenproblem and are polished by Newton
/// steps on the Jacobi polynomial; weights are the eigenvector weights
/// rescaled to the exact moment `∫(1-x²)^a`.
pub fn gauss_jacobi_symmetric(n: usize, a: f64) -> Rule {
    assert!(n >= 1, "rule needs at least one node");
    assert!(a > -1.0, "weight exponent must exceed -1");
    let mu0 = (2.0 * a + 1.0) * 2f64.ln() + 2.0 * ln_gamma(a + 1.0) - ln_gamma(2.0 * a + 2.0);
    let mu0 = mu0.exp();
    if n == 1 {
        return Rule {
            nodes: vec![0.0],
            weights: vec![mu0],
        };
    }
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let kf = k as f64;
        let b2 = kf * (kf + 2.0 * a) / ((2.0 * kf + 2.0 * a + 1.0) * (2.0 * kf + 2.0 * a - 1.0));
        let b = b2.sqrt();
        jm[(k - 1, k)] = b;
        jm[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jm);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    for p in pairs.iter_mut() {
        let mut x = p.0;
        for _ in 0..3 {
            let (val, der) = jacobi_symmetric(n, a, x);
            if der == 0.0 {
                break;
            }
            let step = val / der;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        p.0 = x;
    }
    // Symmetrise exactly: the weight is even.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[i].1 + pairs[j].1);
        pairs[i] = (-x, w);
        pairs[j] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1 * mu0 / total).collect(),
    }
}

pub fn gauss_legendre(n: usize) -> Rule {
    gauss_jacobi_symmetric(n, 0.0)
}

/// Gauss-Legendre rule with `per_panel` nodes on each panel `[edges[i], edges[i+1]]`.
pub fn composite_legendre(edges: &[f64], per_panel: usize) -> Rule {
    let base = gauss_legendre(per_panel);
    let mut nodes = Vec::with_capacity(per_panel * (edges.len() - 1));
    let mut weights = Vec::with_capacity(nodes.capacity());
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let h = 0.5 * (b - a);
        let m = 0.5 * (a + b);
        for (x, wt) in base.nodes.iter().zip(&base.weights) {
            nodes.push(m + h * x);
            weights.push(h * wt);
        }
    }
    Rule { nodes, weights }
}

/// Panel edges: uniform on `[0, r]`, or geometrically graded from a first width `h0`.
pub fn panel_edges(r: f64, panels: usize, h0: Option<f64>) -> Vec<f64> {
    let uniform = r / panels as f64;
    match h0 {
        Some(h0) if h0 < uniform && panels > 1 => {
            // Solve h0 (q^P - 1)/(q - 1) = r for the ratio q > 1 by bisection.
            let total = |q: f64| h0 * (q.powi(panels as i32) - 1.0) / (q - 1.0);
            let (mut lo, mut hi) = (1.0 + 1e-12, 2.0);
            while total(hi) < r {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if total(mid) < r {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let q = 0.5 * (lo + hi);
            let mut edges = vec![0.0];
            let mut h = h0;
            for _ in 0..panels {
                let next = edges.last().unwrap() + h;
                edges.push(next);
                h *= q;
            }
            *edges.last_mut().unwrap() = r;
            edges
        }
        _ => (0..=panels).map(|i| r * i as f64 / panels as f64).collect(),
    }
}

/// Direction rule on the unit sphere `S^k ⊂ R^{k+1}`: returns hyperspherical
/// angles `(θ_1, …, θ_{k-1}, φ)` and weights summing to `|S^k|`.
///
/// `polar` Gauss-Jacobi nodes per polar angle, `longitude` equispaced nodes.
/// For `k = 0` the rule is the two points `±1` (returned as angle `0` and `π`).
pub fn sphere_rule(k: usize, polar: usize, longitude: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    if k == 0 {
        return (vec![vec![0.0], vec![PI]], vec![1.0, 1.0]);
    }
    let mut angles: Vec<Vec<f64>> = vec![Vec::new()];
    let mut weights = vec![1.0];
    for j in 1..k {
        // θ_j carries the weight sin^{k-j} θ_j, i.e. (1-u²)^{(k-j-1)/2} in u = cos θ_j.
        let rule = gauss_jacobi_symmetric(polar, 0.5 * (k - j) as f64 - 0.5);
        let mut next_a = Vec::with_capacity(angles.len() * rule.len());
        let mut next_w = Vec::with_capacity(next_a.capacity());
        for (a, w) in angles.iter().zip(&weights) {
            for (u, wu) in rule.nodes.iter().zip(&rule.weights) {
                let mut a2 = a.clone();
                a2.push(u.clamp(-1.0, 1.0).acos());
                next_a.push(a2);
                next_w.push(w * wu);
            }
        }
        angles = next_a;
        weights = next_w;
    }
    let dphi = 2.0 * PI / longitude as f64;
    let mut out_a = Vec::with_capacity(angles.len() * longitude);
    let mut out_w = Vec::with_capacity(out_a.capacity());
    for (a, w) in angles.iter().zip(&weights) {
        for m in 0..longitude {
            let mut a2 = a.clone();
            a2.push(dphi * m as f64);
            out_a.push(a2);
            out_w.push(w * dphi);
        }
    }
    (out_a, out_w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_is_exact_to_degree_2n_minus_1() {
        for n in [1usize, 2, 5, 16, 40] {
            let r = gauss_legendre(n);
            for d in 0..2 * n {
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                let got = r.integrate(|x| x.powi(d as i32));
                assert_abs_diff_eq!(got, exact, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn legendre_five_point_nodes() {
        // Tabulated: 0, ±0.5384693101056831, ±0.9061798459386640.
        let r = gauss_legendre(5);
        assert_abs_diff_eq!(r.nodes[3], 0.538_469_310_105_683_1, epsilon = 1e-15);
        assert_abs_diff_eq!(r.nodes[4], 0.906_179_845_938_664, epsilon = 1e-15);
        assert_abs_diff_eq!(r.weights[2], 128.0 / 225.0, epsilon = 1e-15);
    }

    #[test]
    fn jacobi_moments() {
        // ∫(1-x²)^a x^{2m} dx = B(m + 1/2, a + 1).
        for a in [0.5, 1.0, 1.5, 3.0] {
            let r = gauss_jacobi_symmetric(12, a);
            for m in 0..12 {
                let mf = m as f64;
                let exact = (ln_gamma(mf + 0.5) + ln_gamma(a + 1.0) - ln_gamma(mf + a + 1.5)).exp();
                assert_abs_diff_eq!(r.integrate(|x| x.powi(2 * m)), exact, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn sphere_rule_reproduces_areas_and_moments() {
        for k in 1..=4usize {
            let (angles, w) = sphere_rule(k, 8, 16);
            let area: f64 = w.iter().sum();
            let exact = (2f64.ln() + 0.5 * (k as f64 + 1.0) * PI.ln() - ln_gamma(0.5 * (k as f64 + 1.0))).exp();
            assert_abs_diff_eq!(area, exact, epsilon = 1e-12);
            // ∫ x_i² dσ = |S^k|/(k+1) for every ambient coordinate.
            for i in 0..=k {
                let m: f64 = angles
                    .iter()
                    .zip(&w)
                    .map(|(a, wt)| wt * crate::catalog::sphere_unit_vector(a)[i].powi(2))
                    .sum();
                assert_abs_diff_eq!(m, exact / (k as f64 + 1.0), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn graded_edges_cover_interval() {
        let e = panel_edges(100.0, 12, Some(0.5));
        assert_eq!(e.len(), 13);
        assert_abs_diff_eq!(e[1], 0.5, epsilon = 1e-12);
        assert_eq!(*e.last().unwrap(), 100.0);
        assert!(e.windows(2).all(|w| w[1] > w[0]));
        let u = panel_edges(4.0, 4, None);
        assert_eq!(u, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn composite_rule_integrates_gaussian_tail() {
        let r = composite_legendre(&panel_edges(12.0, 8, None), 16);
        let got = r.integrate(|x| (-x * x).exp());
        assert_abs_diff_eq!(got, 0.5 * PI.sqrt(), epsilon = 1e-14);
    }
}
