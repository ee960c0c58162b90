//! Primal network simplex for the transportation problem.
//!
//! Sources `0..m`, sinks `m..m+n` and an artificial root `m+n`.  The start
//! basis joins every node to the root through an artificial arc of large
//! cost.  Zero-flow tree arcs always point away from the root (a strongly
//! feasible tree) and the leaving arc is the last blocking arc met when the
//! cycle is walked from its apex, which rules out cycling.  Entering arcs are
//! chosen by block search in a fixed arc order, so runs are deterministic.

use crate::error::{Error, Result};
use std::collections::VecDeque;

pub(crate) struct Solution {
    /// `(source, sink, flow)` for every basic arc with positive flow.
    pub flows: Vec<(usize, usize, f64)>,
}

struct Network<'a> {
    m: usize,
    n: usize,
    cost: &'a [f64],
    art_cost: f64,
    /// Artificial arc of node `u` points from `u` to the root.
    art_up: Vec<bool>,
    flow: Vec<f64>,
    /// Basic arcs at each node.
    adj: Vec<Vec<usize>>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    /// Whether the tree arc to the parent is directed child → parent.
    up: Vec<bool>,
    depth: Vec<usize>,
    pi: Vec<f64>,
}

impl Network<'_> {
    fn root(&self) -> usize {
        self.m + self.n
    }

    fn real_arcs(&self) -> usize {
        self.m * self.n
    }

    fn ends(&self, arc: usize) -> (usize, usize) {
        if arc < self.real_arcs() {
            (arc / self.n, self.m + arc % self.n)
        } else {
            let u = arc - self.real_arcs();
            if self.art_up[u] {
                (u, self.root())
            } else {
                (self.root(), u)
            }
        }
    }

    fn arc_cost(&self, arc: usize) -> f64 {
        if arc < self.real_arcs() {
            self.cost[arc]
        } else {
            self.art_cost
        }
    }

    fn reduced(&self, arc: usize) -> f64 {
        let (t, h) = self.ends(arc);
        self.arc_cost(arc) + self.pi[t] - self.pi[h]
    }

    /// Hang the part of the tree reached from `start` without passing
    /// through `from` below `from`, joined by the basic arc `via`.
    fn hang(&mut self, start: usize, from: usize, via: usize) {
        let mut queue = VecDeque::from([(start, from, via)]);
        while let Some((v, u, a)) = queue.pop_front() {
            let (t, _) = self.ends(a);
            self.parent[v] = u;
            self.pred[v] = a;
            self.up[v] = t == v;
            self.depth[v] = self.depth[u] + 1;
            // Tree arcs have zero reduced cost.
            self.pi[v] = if t == v {
                self.pi[u] - self.arc_cost(a)
            } else {
                self.pi[u] + self.arc_cost(a)
            };
            for &b in &self.adj[v] {
                if b == a {
                    continue;
                }
                let (t, h) = self.ends(b);
                queue.push_back((if t == v { h } else { t }, v, b));
            }
        }
    }

    fn entering(&self, next: &mut usize, block: usize, eps: f64) -> Option<usize> {
        let total = self.real_arcs();
        let mut best = None;
        let mut best_val = -eps;
        let mut count = 0;
        for k in 0..total {
            let a = (*next + k) % total;
            let r = self.reduced(a);
            if r < best_val {
                best_val = r;
                best = Some(a);
            }
            count += 1;
            if count == block {
                if best.is_some() {
                    *next = (a + 1) % total;
                    return best;
                }
                count = 0;
            }
        }
        if best.is_some() {
            *next = 0;
        }
        best
    }

    fn pivot(&mut self, entering: usize) -> Result<()> {
        let (first, second) = self.ends(entering);
        let (mut a, mut b) = (first, second);
        while a != b {
            if self.depth[a] >= self.depth[b] {
                a = self.parent[a];
            } else {
                b = self.parent[b];
            }
        }
        let join = a;

        let mut delta = f64::INFINITY;
        let mut leaving_node = None;
        let mut u = first;
        while u != join {
            if self.up[u] {
                let d = self.flow[self.pred[u]];
                if d < delta {
                    delta = d;
                    leaving_node = Some(u);
                }
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != join {
            if !self.up[u] {
                let d = self.flow[self.pred[u]];
                if d <= delta {
                    delta = d;
                    leaving_node = Some(u);
                }
            }
            u = self.parent[u];
        }
        let leaving_node = leaving_node.ok_or_else(|| Error::Infeasible("unbounded cycle".into()))?;
        let leaving = self.pred[leaving_node];

        if delta > 0.0 {
            self.flow[entering] += delta;
            for (start, increase_when_up) in [(first, false), (second, true)] {
                let mut u = start;
                while u != join {
                    let e = self.pred[u];
                    if self.up[u] == increase_when_up {
                        self.flow[e] += delta;
                    } else {
                        self.flow[e] = (self.flow[e] - delta).max(0.0);
                    }
                    u = self.parent[u];
                }
            }
        }
        self.flow[leaving] = 0.0;
        let (lt, lh) = self.ends(leaving);
        self.adj[lt].retain(|&x| x != leaving);
        self.adj[lh].retain(|&x| x != leaving);
        self.adj[first].push(entering);
        self.adj[second].push(entering);
        // The subtree cut off below the leaving arc contains exactly one end
        // of the entering arc.
        let mut u = first;
        let mut first_side = false;
        while u != join {
            if u == leaving_node {
                first_side = true;
                break;
            }
            u = self.parent[u];
        }
        if first_side {
            self.hang(first, second, entering);
        } else {
            self.hang(second, first, entering);
        }
        Ok(())
    }
}

/// Optimal coupling of `supply` and `demand` for the row-major `m × n` cost.
pub(crate) fn solve(cost: &[f64], supply: &[f64], demand: &[f64]) -> Result<Solution> {
    let (m, n) = (supply.len(), demand.len());
    debug_assert_eq!(cost.len(), m * n);
    let nodes = m + n;
    let cmax = cost.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
    let art_cost = (cmax + 1.0) * (nodes + 1) as f64;
    let mut art_up = vec![false; nodes];
    let mut flow = vec![0.0; m * n + nodes];
    for (u, s) in supply.iter().enumerate() {
        if *s > 0.0 {
            art_up[u] = true;
        }
        flow[m * n + u] = *s;
    }
    for (j, d) in demand.iter().enumerate() {
        flow[m * n + m + j] = *d;
    }
    let mut net = Network {
        m,
        n,
        cost,
        art_cost,
        art_up,
        flow,
        adj: (0..=nodes)
            .map(|u| if u < nodes { vec![m * n + u] } else { (m * n..m * n + nodes).collect() })
            .collect(),
        parent: vec![0; nodes + 1],
        pred: vec![0; nodes + 1],
        up: vec![false; nodes + 1],
        depth: vec![0; nodes + 1],
        pi: vec![0.0; nodes + 1],
    };
    let root = net.root();
    net.parent[root] = root;
    for u in 0..nodes {
        net.hang(u, root, m * n + u);
    }

    let eps = 1e-13 * art_cost;
    let block = ((m * n) as f64).sqrt().ceil().max(10.0) as usize;
    let mut next = 0;
    while let Some(e) = net.entering(&mut next, block, eps) {
        net.pivot(e)?;
    }

    let mut flows = Vec::new();
    for &a in &net.pred[..nodes] {
        if a < m * n && net.flow[a] > 0.0 {
            flows.push((a / n, a % n, net.flow[a]));
        }
    }
    flows.sort_by_key(|f| (f.0, f.1));
    Ok(Solution { flows })
}
