use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::FiniteMetricSpace;

/// Uniform-perfectness constant above a scale cutoff.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UPReport {
    /// Supremum of the `c` for which every annulus `[c r, r]` with
    /// `r in [r_min, diam)` around every point holds another point.
    pub c_star: f64,
    pub r_min: f64,
    /// Point and radius where the constant binds. The radius is the right end
    /// of the binding interval of radii, approached from below (or `r_min`
    /// when the point has no neighbour within `r_min`).
    pub witness: (usize, f64),
}

/// Per-point infimum over `r in [r_min, diameter)` of
/// `max{d(x, y) <= r} / r`, with the radius that realizes it.
fn point_constant(row: &[f64], x: usize, r_min: f64, diameter: f64) -> (f64, f64) {
    let mut dists: Vec<f64> = row
        .iter()
        .enumerate()
        .filter(|&(y, _)| y != x)
        .map(|(_, &v)| v)
        .collect();
    dists.sort_by(f64::total_cmp);
    dists.dedup();
    if r_min < dists[0] {
        // nothing at distance <= r for r just above r_min
        return (0.0, r_min);
    }
    let mut best = (f64::INFINITY, diameter);
    for (k, &a) in dists.iter().enumerate() {
        let next = dists.get(k + 1).copied().unwrap_or(f64::INFINITY);
        let right = next.min(diameter);
        // radii in [max(a, r_min), right) see `a` as the farthest point within r
        if a.max(r_min) < right {
            let c = a / right;
            if c < best.0 {
                best = (c, right);
            }
        }
    }
    best
}

/// The uniform-perfectness constant of a finite space for scales in
/// `[r_min, diam)`.
pub fn up_constant(space: &FiniteMetricSpace, r_min: f64) -> Result<UPReport> {
    if space.len() < 2 {
        return Err(Error::DegenerateSpace);
    }
    let diameter = space.diameter();
    if !(r_min > 0.0 && r_min < diameter) {
        return Err(Error::BadScaleCutoff { r_min, diameter });
    }
    let per_point: Vec<(f64, f64)> = (0..space.len())
        .into_par_iter()
        .map(|x| point_constant(space.row(x), x, r_min, diameter))
        .collect();
    let (x, &(c_star, r)) = per_point
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(a.0.cmp(&b.0)))
        .expect("at least two points");
    Ok(UPReport {
        c_star,
        r_min,
        witness: (x, r),
    })
}
