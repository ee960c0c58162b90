//! Finite differences on non-uniform one-dimensional nodes.

/// Fornberg weights: `w[k][j]` multiplies `u(x_j)` in the `k`-th derivative at `z`.
pub fn fornberg_weights(z: f64, x: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// First and second derivatives of `u` sampled at increasing nodes `x`, from
/// five-point stencils (fourth order in the first derivative on smooth data).
///
/// With `even` the data are treated as an even function of `x` and mirrored
/// through the origin, which keeps the stencils centred near `x = 0`.
pub fn radial_derivatives(x: &[f64], u: &[f64], even: bool) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(x.len(), u.len());
    let n = x.len();
    let (xs, us, off) = if even {
        let m = n.min(3);
        let mut xs: Vec<f64> = x[..m].iter().rev().map(|v| -v).collect();
        let mut us: Vec<f64> = u[..m].iter().rev().copied().collect();
        xs.extend_from_slice(x);
        us.extend_from_slice(u);
        (xs, us, m)
    } else {
        (x.to_vec(), u.to_vec(), 0)
    };
    let total = xs.len();
    let width = 5.min(total);
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    for i in 0..n {
        let centre = i + off;
        let start = centre.saturating_sub(width / 2).min(total - width);
        let nodes = &xs[start..start + width];
        let w = fornberg_weights(xs[centre], nodes, 2);
        let vals = &us[start..start + width];
        d1.push(w[1].iter().zip(vals).map(|(a, b)| a * b).sum());
        d2.push(w[2].iter().zip(vals).map(|(a, b)| a * b).sum());
    }
    (d1, d2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn weights_reproduce_polynomials() {
        let x = [0.0, 0.3, 0.7, 1.2, 2.0];
        let w = fornberg_weights(0.5, &x, 2);
        for d in 0..5 {
            let u: Vec<f64> = x.iter().map(|v| v.powi(d)).collect();
            let d1: f64 = w[1].iter().zip(&u).map(|(a, b)| a * b).sum();
            let d2: f64 = w[2].iter().zip(&u).map(|(a, b)| a * b).sum();
            let df = if d >= 1 { d as f64 * 0.5f64.powi(d - 1) } else { 0.0 };
            let ddf = if d >= 2 { (d * (d - 1)) as f64 * 0.5f64.powi(d - 2) } else { 0.0 };
            assert_abs_diff_eq!(d1, df, epsilon = 1e-12);
            assert_abs_diff_eq!(d2, ddf, epsilon = 1e-11);
        }
    }

    #[test]
    fn derivative_error_shrinks_with_refinement() {
        let err = |n: usize| {
            let x: Vec<f64> = (0..n).map(|i| 4.0 * (i as f64 + 0.5) / n as f64).collect();
            let u: Vec<f64> = x.iter().map(|v| (-v * v / 4.0).exp()).collect();
            let (d1, _) = radial_derivatives(&x, &u, true);
            x.iter()
                .zip(&d1)
                .map(|(v, d)| (d + 0.5 * v * (-v * v / 4.0).exp()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(40), err(80));
        assert!(e1 < 1e-4, "{e1}");
        assert!(e1 / e2 > 12.0, "ratio {}", e1 / e2);
    }
}
