//! Probability laws on an interval, given by an unnormalised log density,
//! with distribution and quantile functions accurate to rounding in both tails.

use crate::error::{Error, Result};
use crate::grid::rules::{gauss_legendre, Rule};
use crate::grid::PANEL_NODES;

const MAX_SPLITS: usize = 30;
const MAX_PANELS: usize = 1 << 16;

pub(crate) struct Law<'a> {
    log_pdf: Box<dyn Fn(f64) -> f64 + Sync + 'a>,
    rule: Rule,
    edges: Vec<f64>,
    /// Normalised mass left of each edge.
    below: Vec<f64>,
    /// Normalised mass right of each edge.
    above: Vec<f64>,
    offset: f64,
    mass: f64,
    nodes: Vec<f64>,
    probs: Vec<f64>,
}

fn panel_integral(rule: &Rule, f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    half * rule.integrate(|x| f(mid + half * x))
}

impl<'a> Law<'a> {
    /// Law on `[lo, hi]` with `panels` uniform panels, each split in half
    /// until a panel and its halves agree to rounding.
    pub fn new(log_pdf: impl Fn(f64) -> f64 + Sync + 'a, lo: f64, hi: f64, panels: usize) -> Result<Self> {
        if !(lo < hi) || panels == 0 {
            return Err(Error::InvalidParameter(format!("empty interval [{lo}, {hi}]")));
        }
        let rule = gauss_legendre(PANEL_NODES);
        let h = (hi - lo) / panels as f64;
        let coarse: Vec<f64> = (0..=panels).map(|j| if j == panels { hi } else { lo + h * j as f64 }).collect();
        let mut offset = f64::NEG_INFINITY;
        for w in coarse.windows(2) {
            let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            for x in &rule.nodes {
                offset = offset.max(log_pdf(mid + half * x));
            }
        }
        if !offset.is_finite() {
            return Err(Error::InvalidParameter("density vanishes on the interval".into()));
        }
        let pdf = |x: f64| (log_pdf(x) - offset).exp();
        let total: f64 = coarse.windows(2).map(|w| panel_integral(&rule, &pdf, w[0], w[1])).sum();
        let tol = 1e-14 * total;

        let mut edges = vec![lo];
        for w in coarse.windows(2) {
            let mut stack = vec![(w[0], w[1], 0usize)];
            while let Some((a, b, depth)) = stack.pop() {
                let m = 0.5 * (a + b);
                let whole = panel_integral(&rule, &pdf, a, b);
                let halves = panel_integral(&rule, &pdf, a, m) + panel_integral(&rule, &pdf, m, b);
                if (whole - halves).abs() > tol && depth < MAX_SPLITS && edges.len() + stack.len() < MAX_PANELS {
                    // Right half first so that panels come off the stack in order.
                    stack.push((m, b, depth + 1));
                    stack.push((a, m, depth + 1));
                } else {
                    edges.push(b);
                }
            }
        }

        let count = edges.len() - 1;
        let mut nodes = Vec::with_capacity(count * PANEL_NODES);
        let mut raw = Vec::with_capacity(count * PANEL_NODES);
        for w in edges.windows(2) {
            let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            for (x, wx) in rule.nodes.iter().zip(&rule.weights) {
                let t = mid + half * x;
                nodes.push(t);
                raw.push(half * wx * pdf(t));
            }
        }
        let panel_mass: Vec<f64> = raw.chunks(PANEL_NODES).map(|c| c.iter().sum()).collect();
        let mut below = vec![0.0; count + 1];
        let mut above = vec![0.0; count + 1];
        for j in 0..count {
            below[j + 1] = below[j] + panel_mass[j];
            above[count - 1 - j] = above[count - j] + panel_mass[count - 1 - j];
        }
        let mass = below[count];
        below.iter_mut().chain(above.iter_mut()).for_each(|c| *c /= mass);
        let probs = raw.iter().map(|r| r / mass).collect();
        Ok(Law {
            log_pdf: Box::new(log_pdf),
            rule,
            edges,
            below,
            above,
            offset,
            mass,
            nodes,
            probs,
        })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        ((self.log_pdf)(x) - self.offset).exp() / self.mass
    }

    fn partial(&self, a: f64, b: f64) -> f64 {
        panel_integral(&self.rule, &|x| self.pdf(x), a, b)
    }

    /// `(F(x), 1 - F(x))` for `x` inside panel `j`.
    fn tails(&self, j: usize, x: f64) -> (f64, f64) {
        (
            self.below[j] + self.partial(self.edges[j], x),
            self.above[j + 1] + self.partial(x, self.edges[j + 1]),
        )
    }

    /// Solves `F(t) = u` when `upper` is false and `1 - F(t) = u` otherwise.
    fn invert(&self, u: f64, upper: bool) -> f64 {
        let last = self.edges.len() - 1;
        if u <= 0.0 {
            return if upper { self.edges[last] } else { self.edges[0] };
        }
        if u >= 1.0 {
            return if upper { self.edges[0] } else { self.edges[last] };
        }
        let j = if upper {
            // `above` decreases; first edge whose upper mass drops to u or below.
            self.above.partition_point(|c| *c > u).saturating_sub(1).min(last - 1)
        } else {
            self.below.partition_point(|c| *c <= u).saturating_sub(1).min(last - 1)
        };
        let (mut a, mut b) = (self.edges[j], self.edges[j + 1]);
        let (lo_mass, span) = if upper {
            (self.above[j + 1], self.above[j] - self.above[j + 1])
        } else {
            (self.below[j], self.below[j + 1] - self.below[j])
        };
        let frac = if span > 0.0 { ((u - lo_mass) / span).clamp(0.0, 1.0) } else { 0.0 };
        let mut t = if upper { b - (b - a) * frac } else { a + (b - a) * frac };
        for _ in 0..200 {
            let g = if upper {
                u - (self.above[j + 1] + self.partial(t, self.edges[j + 1]))
            } else {
                self.below[j] + self.partial(self.edges[j], t) - u
            };
            if g > 0.0 {
                b = t;
            } else {
                a = t;
            }
            let d = self.pdf(t);
            let newton = t - g / d;
            let next = if d > 0.0 && newton > a && newton < b {
                newton
            } else {
                0.5 * (a + b)
            };
            let done = (next - t).abs() <= 1e-15 * (1.0 + t.abs()) || b - a <= 1e-15 * (1.0 + t.abs());
            t = next;
            if done {
                break;
            }
        }
        t
    }
}

/// `∫ |x - Q_b(F_a(x))|² dμ_a(x)` on the nodes of `a`, working with the
/// smaller of the two tail masses.
fn one_sided(a: &Law, b: &Law) -> f64 {
    let mut total = 0.0;
    for j in 0..a.edges.len() - 1 {
        for k in j * PANEL_NODES..(j + 1) * PANEL_NODES {
            let (x, p) = (a.nodes[k], a.probs[k]);
            if p == 0.0 {
                continue;
            }
            let (lower, upper) = a.tails(j, x);
            let t = if lower <= upper {
                b.invert(lower, false)
            } else {
                b.invert(upper, true)
            };
            total += p * (x - t).powi(2);
        }
    }
    total
}

/// Squared 1-D Wasserstein distance `∫₀¹ |Q_a - Q_b|²`, evaluated on both
/// node sets and averaged so that it is symmetric in its arguments.
pub(crate) fn w2_sq(a: &Law, b: &Law) -> f64 {
    0.5 * (one_sided(a, b) + one_sided(b, a))
}
