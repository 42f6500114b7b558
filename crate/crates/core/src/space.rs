//! Finite metric and ultrametric spaces backed by a validated distance matrix,
//! subset statistics, and the two distances between metrics on a common
//! point set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cantor::RangeSet;
use crate::error::{Error, Result};

/// Relative slack used by default when checking the triangle inequalities.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Metric,
    Ultrametric,
}

/// A labeled finite point set with a validated distance matrix.
///
/// Instances only come out of [`validate`] (or constructions that preserve
/// the axioms exactly, such as restriction), so every value of this type has
/// a zero diagonal, exact symmetry, positive off-diagonal entries and the
/// (strong) triangle inequality up to the tolerance it was validated with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceFile", into = "SpaceFile")]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    dist: Vec<f64>,
    flavor: Flavor,
}

/// On-disk JSON shape of a space.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceFile {
    pub labels: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    pub flavor: Flavor,
}

impl TryFrom<SpaceFile> for FiniteMetricSpace {
    type Error = Error;

    fn try_from(file: SpaceFile) -> Result<Self> {
        validate(file.labels, file.matrix, file.flavor, DEFAULT_TOLERANCE)
    }
}

impl From<FiniteMetricSpace> for SpaceFile {
    fn from(space: FiniteMetricSpace) -> Self {
        SpaceFile {
            matrix: space.to_matrix(),
            labels: space.labels,
            flavor: space.flavor,
        }
    }
}

impl FiniteMetricSpace {
    /// Validates a row-major `n * n` distance array.
    pub fn from_flat(
        labels: Vec<String>,
        dist: Vec<f64>,
        flavor: Flavor,
        tolerance: f64,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        if dist.len() != n * n {
            return Err(Error::LabelCount {
                labels: n,
                side: (dist.len() as f64).sqrt() as usize,
            });
        }
        check_axioms(n, &dist, flavor, tolerance)?;
        Ok(FiniteMetricSpace {
            labels,
            dist,
            flavor,
        })
    }

    /// Restricted constructor for callers that already guarantee the axioms.
    pub(crate) fn from_parts_unchecked(
        labels: Vec<String>,
        dist: Vec<f64>,
        flavor: Flavor,
    ) -> Self {
        debug_assert_eq!(labels.len() * labels.len(), dist.len());
        FiniteMetricSpace {
            labels,
            dist,
            flavor,
        }
    }

    /// A space where every pair of distinct points is at distance `value`.
    pub fn uniform(labels: Vec<String>, value: f64) -> Result<Self> {
        let n = labels.len();
        let dist = (0..n * n)
            .map(|k| if k / n == k % n { 0.0 } else { value })
            .collect();
        Self::from_flat(labels, dist, Flavor::Ultrametric, 0.0)
    }

    /// Points `0, step, 2 step, ...` on the real line.
    pub fn arithmetic_progression(count: usize, step: f64) -> Result<Self> {
        let values: Vec<f64> = (0..count).map(|i| i as f64 * step).collect();
        Self::on_line(default_labels(count), &values)
    }

    /// Points of the real line with the absolute-difference metric.
    pub fn on_line(labels: Vec<String>, values: &[f64]) -> Result<Self> {
        let n = values.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                dist[i * n + j] = (values[i] - values[j]).abs();
            }
        }
        Self::from_flat(labels, dist, Flavor::Metric, DEFAULT_TOLERANCE)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.dist[i * n..(i + 1) * n]
    }

    /// Row-major distances.
    pub fn as_flat(&self) -> &[f64] {
        &self.dist
    }

    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest distance between distinct points, `None` for a single point.
    pub fn min_positive_distance(&self) -> Option<f64> {
        let n = self.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| self.d(i, j))
            .reduce(f64::min)
    }

    /// All pairwise distances `d(i, j)` with `i < j`.
    pub fn pair_distances(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.len();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| self.d(i, j)))
    }

    /// The subspace on `indices` (in the given order).
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        let n = self.len();
        if indices.is_empty() {
            return Err(Error::EmptySubset);
        }
        let mut seen = vec![false; n];
        for &i in indices {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, len: n });
            }
            if seen[i] {
                return Err(Error::InvalidParameter(format!("duplicate index {i}")));
            }
            seen[i] = true;
        }
        let k = indices.len();
        let mut dist = vec![0.0; k * k];
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                dist[a * k + b] = self.d(i, j);
            }
        }
        let labels = indices.iter().map(|&i| self.labels[i].clone()).collect();
        Ok(Self::from_parts_unchecked(labels, dist, self.flavor))
    }

    /// `factor * d`, revalidated.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale factor {factor}")));
        }
        let dist = self.dist.iter().map(|&v| v * factor).collect();
        Self::from_flat(self.labels.clone(), dist, self.flavor, DEFAULT_TOLERANCE)
    }

    pub fn relabeled(&self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::LabelCount {
                labels: labels.len(),
                side: self.len(),
            });
        }
        Ok(Self::from_parts_unchecked(
            labels,
            self.dist.clone(),
            self.flavor,
        ))
    }

    /// Same matrix, metric flavor.
    pub fn as_metric(&self) -> Self {
        Self::from_parts_unchecked(self.labels.clone(), self.dist.clone(), Flavor::Metric)
    }

    /// Reinterprets the matrix as an ultrametric, checking the strong triangle
    /// inequality.
    pub fn as_ultrametric(&self, tolerance: f64) -> Result<Self> {
        Self::from_flat(
            self.labels.clone(),
            self.dist.clone(),
            Flavor::Ultrametric,
            tolerance,
        )
    }

    /// Re-runs the axiom checks on this matrix.
    pub fn revalidate(&self, flavor: Flavor, tolerance: f64) -> Result<()> {
        check_axioms(self.len(), &self.dist, flavor, tolerance)
    }

    pub fn read_json(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// `"p0", "p1", ...`
pub fn default_labels(count: usize) -> Vec<String> {
    (0..count).map(|i| format!("p{i}")).collect()
}

/// Checks the metric (or ultrametric) axioms and builds a space.
///
/// Axioms are checked in this order: shape, finiteness, zero diagonal,
/// symmetry, positivity, then the triangle inequalities over triples
/// `(i, j, k)` in lexicographic order with `i < j`. The tolerance is relative
/// to the largest entry; `0.0` requests exact checking.
pub fn validate(
    labels: Vec<String>,
    matrix: Vec<Vec<f64>>,
    flavor: Flavor,
    tolerance: f64,
) -> Result<FiniteMetricSpace> {
    let n = matrix.len();
    if n == 0 {
        return Err(Error::EmptySpace);
    }
    for (row, r) in matrix.iter().enumerate() {
        if r.len() != n {
            return Err(Error::NotSquare {
                row,
                len: r.len(),
                expected: n,
            });
        }
    }
    if labels.len() != n {
        return Err(Error::LabelCount {
            labels: labels.len(),
            side: n,
        });
    }
    let dist: Vec<f64> = matrix.into_iter().flatten().collect();
    FiniteMetricSpace::from_flat(labels, dist, flavor, tolerance)
}

fn check_axioms(n: usize, dist: &[f64], flavor: Flavor, tolerance: f64) -> Result<()> {
    if !(tolerance >= 0.0) {
        return Err(Error::NegativeTolerance(tolerance));
    }
    let at = |i: usize, j: usize| dist[i * n + j];
    for i in 0..n {
        for j in 0..n {
            if !at(i, j).is_finite() {
                return Err(Error::NonFiniteEntry { i, j });
            }
        }
    }
    for i in 0..n {
        if at(i, i) != 0.0 {
            return Err(Error::NonzeroDiagonal { i, value: at(i, i) });
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if at(i, j) != at(j, i) {
                return Err(Error::AsymmetricMatrix {
                    i,
                    j,
                    a: at(i, j),
                    b: at(j, i),
                });
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if !(at(i, j) > 0.0) {
                return Err(Error::NonpositiveOffDiagonal {
                    i,
                    j,
                    value: at(i, j),
                });
            }
        }
    }
    let scale = dist.iter().copied().fold(0.0, f64::max);
    let slack = tolerance * scale;
    let first = (0..n).into_par_iter().find_map_first(|i| {
        for j in i + 1..n {
            let dij = at(i, j);
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let (dik, dkj) = (at(i, k), at(k, j));
                if dij > dik + dkj + slack {
                    return Some(Error::TriangleViolation {
                        i,
                        j,
                        k,
                        dij,
                        bound: dik + dkj,
                    });
                }
                if flavor == Flavor::Ultrametric && dij > dik.max(dkj) + slack {
                    return Some(Error::StrongTriangleViolation {
                        i,
                        j,
                        k,
                        dij,
                        bound: dik.max(dkj),
                    });
                }
            }
        }
        None
    });
    match first {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Diameter, separation and size of a subset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetStats {
    pub diameter: f64,
    /// Minimum distance between distinct members; absent for one point.
    pub separation: Option<f64>,
    pub cardinality: usize,
}

impl SubsetStats {
    pub fn separation(&self) -> Result<f64> {
        self.separation.ok_or(Error::SeparationUndefined)
    }
}

/// Diameter and separation of the subset `indices` (duplicates ignored).
pub fn subset_stats(space: &FiniteMetricSpace, indices: &[usize]) -> Result<SubsetStats> {
    if indices.is_empty() {
        return Err(Error::EmptySubset);
    }
    let n = space.len();
    let mut members = indices.to_vec();
    members.sort_unstable();
    members.dedup();
    if let Some(&bad) = members.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: bad, len: n });
    }
    Ok(stats_of_sorted(space, &members))
}

pub(crate) fn stats_of_sorted(space: &FiniteMetricSpace, members: &[usize]) -> SubsetStats {
    let mut diameter = 0.0f64;
    let mut separation = f64::INFINITY;
    for (a, &i) in members.iter().enumerate() {
        let row = space.row(i);
        for &j in &members[a + 1..] {
            let v = row[j];
            diameter = diameter.max(v);
            separation = separation.min(v);
        }
    }
    SubsetStats {
        diameter,
        separation: (members.len() >= 2).then_some(separation),
        cardinality: members.len(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    SupMetric,
    UltraMetricOverS,
}

/// A distance between two metrics on the same labels; may be `+inf` for the
/// ultrametric kind.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricDistance {
    pub value: f64,
    pub kind: DistanceKind,
}

fn same_labels(d: &FiniteMetricSpace, e: &FiniteMetricSpace) -> Result<()> {
    if d.labels != e.labels {
        return Err(Error::LabelMismatch);
    }
    Ok(())
}

/// Largest absolute difference of the two metrics over all pairs.
pub fn sup_distance(d: &FiniteMetricSpace, e: &FiniteMetricSpace) -> Result<MetricDistance> {
    same_labels(d, e)?;
    let value = d
        .dist
        .iter()
        .zip(&e.dist)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(MetricDistance {
        value,
        kind: DistanceKind::SupMetric,
    })
}

/// The least `eps` in `S` (or `+inf`) with `d <= max(e, eps)` and
/// `e <= max(d, eps)` everywhere, for `S`-valued ultrametrics.
pub fn ultra_distance(
    d: &FiniteMetricSpace,
    e: &FiniteMetricSpace,
    range: &RangeSet,
) -> Result<MetricDistance> {
    ultra_distance_with_tolerance(d, e, range, DEFAULT_TOLERANCE)
}

/// [`ultra_distance`] with an explicit relative tolerance for the
/// `S`-membership check of the inputs.
pub fn ultra_distance_with_tolerance(
    d: &FiniteMetricSpace,
    e: &FiniteMetricSpace,
    range: &RangeSet,
    tolerance: f64,
) -> Result<MetricDistance> {
    same_labels(d, e)?;
    if d.flavor != Flavor::Ultrametric || e.flavor != Flavor::Ultrametric {
        return Err(Error::NotUltrametric);
    }
    for &v in d.dist.iter().chain(&e.dist) {
        if range.snap(v, tolerance).is_none() {
            return Err(Error::ValueOutsideRangeSet { value: v });
        }
    }
    // Off the diagonal, a differing pair forces eps >= max of the two values.
    let worst = d
        .dist
        .iter()
        .zip(&e.dist)
        .filter(|(a, b)| a != b)
        .map(|(a, b)| a.max(*b))
        .fold(0.0, f64::max);
    let value = if worst == 0.0 {
        0.0
    } else {
        range
            .snap(worst, tolerance)
            .unwrap_or_else(|| range.least_geq(worst))
    };
    Ok(MetricDistance {
        value,
        kind: DistanceKind::UltraMetricOverS,
    })
}

/// Shortest-path closure of a symmetric, positive, zero-diagonal matrix.
pub fn metric_closure(labels: Vec<String>, raw: Vec<Vec<f64>>) -> Result<FiniteMetricSpace> {
    let n = raw.len();
    if n == 0 {
        return Err(Error::EmptySpace);
    }
    for (row, r) in raw.iter().enumerate() {
        if r.len() != n {
            return Err(Error::NotSquare {
                row,
                len: r.len(),
                expected: n,
            });
        }
    }
    if labels.len() != n {
        return Err(Error::LabelCount {
            labels: labels.len(),
            side: n,
        });
    }
    for i in 0..n {
        if raw[i][i] != 0.0 {
            return Err(Error::NonzeroDiagonal {
                i,
                value: raw[i][i],
            });
        }
        for j in 0..n {
            let v = raw[i][j];
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry { i, j });
            }
            if v != raw[j][i] {
                return Err(Error::AsymmetricMatrix {
                    i,
                    j,
                    a: v,
                    b: raw[j][i],
                });
            }
            if i != j && v == 0.0 {
                return Err(Error::ZeroOffDiagonal { i, j });
            }
            if v < 0.0 {
                return Err(Error::NonpositiveOffDiagonal { i, j, value: v });
            }
        }
    }
    let mut dist: Vec<f64> = raw.into_iter().flatten().collect();
    for k in 0..n {
        for i in 0..n {
            let dik = dist[i * n + k];
            for j in 0..n {
                let via = dik + dist[k * n + j];
                if via < dist[i * n + j] {
                    dist[i * n + j] = via;
                }
            }
        }
    }
    // Rounding can leave the two orientations one ulp apart.
    for i in 0..n {
        for j in i + 1..n {
            let v = dist[i * n + j].min(dist[j * n + i]);
            dist[i * n + j] = v;
            dist[j * n + i] = v;
        }
    }
    FiniteMetricSpace::from_flat(labels, dist, Flavor::Metric, DEFAULT_TOLERANCE)
}
