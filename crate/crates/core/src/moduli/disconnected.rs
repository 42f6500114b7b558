use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{FiniteMetricSpace, Flavor};

/// Minimum spanning tree of the complete graph, as a parent array rooted at 0
/// (Prim, dense `O(n^2)`; ties go to the lower index).
pub fn minimum_spanning_tree(space: &FiniteMetricSpace) -> Vec<Option<usize>> {
    let n = space.len();
    let mut parent = vec![None; n];
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut link = vec![0usize; n];
    best[0] = 0.0;
    for _ in 0..n {
        let mut u = usize::MAX;
        for v in 0..n {
            if !in_tree[v] && (u == usize::MAX || best[v] < best[u]) {
                u = v;
            }
        }
        in_tree[u] = true;
        if u != 0 {
            parent[u] = Some(link[u]);
        }
        let row = space.row(u);
        for v in 0..n {
            if !in_tree[v] && row[v] < best[v] {
                best[v] = row[v];
                link[v] = u;
            }
        }
    }
    parent
}

fn tree_adjacency(space: &FiniteMetricSpace, parent: &[Option<usize>]) -> Vec<Vec<(usize, f64)>> {
    let mut adj = vec![Vec::new(); space.len()];
    for (v, p) in parent.iter().enumerate() {
        if let Some(p) = *p {
            let w = space.d(v, p);
            adj[v].push((p, w));
            adj[p].push((v, w));
        }
    }
    adj
}

/// Row-major minimax chain costs: entry `(x, y)` is the least possible
/// largest step over chains from `x` to `y`.
///
/// Computed along the minimum spanning tree, whose unique paths are minimax
/// paths of the complete graph.
pub(crate) fn bottleneck_flat(space: &FiniteMetricSpace) -> Vec<f64> {
    let n = space.len();
    let adj = tree_adjacency(space, &minimum_spanning_tree(space));
    let mut out = vec![0.0; n * n];
    let mut stack = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for root in 0..n {
        seen.iter_mut().for_each(|s| *s = false);
        seen[root] = true;
        stack.push((root, 0.0f64));
        while let Some((u, worst)) = stack.pop() {
            out[root * n + u] = worst;
            for &(v, w) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push((v, worst.max(w)));
                }
            }
        }
    }
    out
}

pub fn bottleneck_matrix(space: &FiniteMetricSpace) -> Vec<Vec<f64>> {
    let n = space.len();
    bottleneck_flat(space)
        .chunks(n)
        .map(|r| r.to_vec())
        .collect()
}

/// The bottleneck matrix as a space: the largest ultrametric below `d`.
pub fn subdominant_ultrametric(space: &FiniteMetricSpace) -> Result<FiniteMetricSpace> {
    FiniteMetricSpace::from_flat(
        space.labels().to_vec(),
        bottleneck_flat(space),
        Flavor::Ultrametric,
        0.0,
    )
}

/// The chain from `x` to `y` along the minimum spanning tree; its largest
/// step equals the bottleneck cost of the pair.
pub fn bottleneck_chain(space: &FiniteMetricSpace, x: usize, y: usize) -> Result<Vec<usize>> {
    let n = space.len();
    for i in [x, y] {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
    }
    let adj = tree_adjacency(space, &minimum_spanning_tree(space));
    let mut prev = vec![usize::MAX; n];
    prev[x] = x;
    let mut stack = vec![x];
    while let Some(u) = stack.pop() {
        for &(v, _) in &adj[u] {
            if prev[v] == usize::MAX {
                prev[v] = u;
                stack.push(v);
            }
        }
    }
    let mut chain = vec![y];
    let mut cur = y;
    while cur != x {
        cur = prev[cur];
        chain.push(cur);
    }
    chain.reverse();
    Ok(chain)
}

/// Uniform-disconnectedness modulus of a finite space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UDReport {
    /// `min over x != y of bottleneck(x, y) / d(x, y)`.
    pub delta_star: f64,
    pub witness_pair: (usize, usize),
    /// Tree chain realizing the bottleneck of the witness pair.
    pub witness_chain: Vec<usize>,
    pub bottleneck_matrix: Vec<Vec<f64>>,
}

/// The largest `delta` with `delta d(z_1, z_N) <= max_i d(z_i, z_{i+1})` for
/// every chain.
pub fn ud_modulus(space: &FiniteMetricSpace) -> Result<UDReport> {
    let n = space.len();
    if n < 2 {
        return Err(Error::DegenerateSpace);
    }
    let b = bottleneck_flat(space);
    let mut best = (f64::INFINITY, (0, 1));
    for x in 0..n {
        for y in x + 1..n {
            let r = b[x * n + y] / space.d(x, y);
            if r < best.0 {
                best = (r, (x, y));
            }
        }
    }
    let (delta_star, witness_pair) = best;
    Ok(UDReport {
        delta_star,
        witness_pair,
        witness_chain: bottleneck_chain(space, witness_pair.0, witness_pair.1)?,
        bottleneck_matrix: b.chunks(n).map(|r| r.to_vec()).collect(),
    })
}
