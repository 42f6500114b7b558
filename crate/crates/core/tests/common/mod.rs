// Independent reference implementations used by the integration suites.
// Each one follows the definition directly and trades speed for obviousness.
#![allow(dead_code)]

use metric_dense::FiniteMetricSpace;

/// Minimax over every simple chain from `x` to `y`, by depth-first search.
pub fn chain_minimax_brute(space: &FiniteMetricSpace, x: usize, y: usize) -> f64 {
    fn walk(
        space: &FiniteMetricSpace,
        at: usize,
        y: usize,
        seen: &mut Vec<bool>,
        worst: f64,
        best: &mut f64,
    ) {
        if worst >= *best {
            return;
        }
        if at == y {
            *best = worst;
            return;
        }
        for next in 0..space.len() {
            if !seen[next] {
                seen[next] = true;
                walk(space, next, y, seen, worst.max(space.d(at, next)), best);
                seen[next] = false;
            }
        }
    }
    if x == y {
        return 0.0;
    }
    let mut seen = vec![false; space.len()];
    seen[x] = true;
    let mut best = f64::INFINITY;
    walk(space, x, y, &mut seen, 0.0, &mut best);
    best
}

/// All-pairs minimax path values by the Floyd-Warshall recurrence.
pub fn minimax_floyd(space: &FiniteMetricSpace) -> Vec<Vec<f64>> {
    let n = space.len();
    let mut m = space.to_matrix();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let through = m[i][k].max(m[k][j]);
                if through < m[i][j] {
                    m[i][j] = through;
                }
            }
        }
    }
    m
}

/// `min over x != y of minimax(x, y) / d(x, y)` from the Floyd table.
pub fn delta_star_floyd(space: &FiniteMetricSpace) -> f64 {
    let m = minimax_floyd(space);
    let n = space.len();
    let mut best = f64::INFINITY;
    for x in 0..n {
        for y in x + 1..n {
            best = best.min(m[x][y] / space.d(x, y));
        }
    }
    best
}

/// Whether every radius in `[lo, hi)` is covered by some `[t, t / c]`.
fn covered(ts: &[f64], c: f64, lo: f64, hi: f64) -> bool {
    let mut reach = lo;
    let mut progress = true;
    while reach < hi && progress {
        progress = false;
        for &t in ts {
            if t <= reach && t / c > reach {
                reach = t / c;
                progress = true;
            }
        }
    }
    reach >= hi
}

/// Uniform-perfectness constant by bisection on `c`: `c` is feasible when
/// every annulus `[c r, r]`, `r in [r_min, diam)`, around every point holds
/// another point.
pub fn up_bisection(space: &FiniteMetricSpace, r_min: f64) -> f64 {
    let n = space.len();
    let diam = space.diameter();
    let mut worst = 1.0f64;
    for x in 0..n {
        let ts: Vec<f64> = (0..n).filter(|&y| y != x).map(|y| space.d(x, y)).collect();
        let (mut lo, mut hi) = (0.0, 1.0);
        if !covered(&ts, 1e-300, r_min, diam) {
            return 0.0;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if covered(&ts, mid, r_min, diam) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        worst = worst.min(lo);
    }
    worst
}

/// Least `eps` among `0`, the members of `S` and `+inf` with
/// `d <= max(e, eps)` and `e <= max(d, eps)` on every pair.
pub fn ultra_distance_brute(d: &FiniteMetricSpace, e: &FiniteMetricSpace, members: &[f64]) -> f64 {
    let mut candidates = members.to_vec();
    candidates.push(0.0);
    candidates.sort_by(f64::total_cmp);
    candidates.push(f64::INFINITY);
    let n = d.len();
    for eps in candidates {
        let ok = (0..n).all(|i| {
            (0..n).all(|j| d.d(i, j) <= e.d(i, j).max(eps) && e.d(i, j) <= d.d(i, j).max(eps))
        });
        if ok {
            return eps;
        }
    }
    unreachable!("+inf always works")
}

/// Which axiom a raw matrix breaks first, scanning in the documented order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Broken {
    NonFinite(usize, usize),
    Diagonal(usize),
    Asymmetric(usize, usize),
    Nonpositive(usize, usize),
    Triangle(usize, usize, usize),
    Strong(usize, usize, usize),
}

pub fn first_broken(m: &[Vec<f64>], ultra: bool, tolerance: f64) -> Option<Broken> {
    let n = m.len();
    for i in 0..n {
        for j in 0..n {
            if !m[i][j].is_finite() {
                return Some(Broken::NonFinite(i, j));
            }
        }
    }
    for i in 0..n {
        if m[i][i] != 0.0 {
            return Some(Broken::Diagonal(i));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if m[i][j] != m[j][i] {
                return Some(Broken::Asymmetric(i, j));
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if !(m[i][j] > 0.0) {
                return Some(Broken::Nonpositive(i, j));
            }
        }
    }
    let slack = tolerance * m.iter().flatten().copied().fold(0.0, f64::max);
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                if m[i][j] > m[i][k] + m[k][j] + slack {
                    return Some(Broken::Triangle(i, j, k));
                }
                if ultra && m[i][j] > m[i][k].max(m[k][j]) + slack {
                    return Some(Broken::Strong(i, j, k));
                }
            }
        }
    }
    None
}

/// `max |d - e|` over all pairs, computed entrywise.
pub fn sup_brute(d: &FiniteMetricSpace, e: &FiniteMetricSpace) -> f64 {
    let n = d.len();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((d.d(i, j) - e.d(i, j)).abs());
        }
    }
    worst
}

/// Diameter and separation of a subset, or `None` below two points.
pub fn diam_sep(space: &FiniteMetricSpace, subset: &[usize]) -> Option<(f64, f64)> {
    if subset.len() < 2 {
        return None;
    }
    let mut diam = 0.0f64;
    let mut sep = f64::INFINITY;
    for (a, &i) in subset.iter().enumerate() {
        for &j in &subset[a + 1..] {
            diam = diam.max(space.d(i, j));
            sep = sep.min(space.d(i, j));
        }
    }
    Some((diam, sep))
}
