use std::cmp::Ordering;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{stats_of_sorted, FiniteMetricSpace};

/// Spaces with at most this many points are scanned over every subset.
pub const EXHAUSTIVE_LIMIT: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DoublingMode {
    Exhaustive,
    /// The constant is a lower bound for the true maximum.
    Sampled,
}

/// Largest `card(A) / (diam(A) / sep(A))^beta` found, with its subset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub beta: f64,
    pub constant: f64,
    pub witness: Vec<usize>,
    pub mode: DoublingMode,
}

#[derive(Clone, Debug)]
struct Candidate {
    ratio: f64,
    members: Vec<usize>,
}

impl Candidate {
    // Larger ratio wins; ties go to the lexicographically smaller index set.
    fn beats(&self, other: &Candidate) -> bool {
        match self.ratio.total_cmp(&other.ratio) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => self.members < other.members,
        }
    }

    fn better(self, other: Candidate) -> Candidate {
        if other.beats(&self) {
            other
        } else {
            self
        }
    }
}

fn ratio(cardinality: usize, diameter: f64, separation: f64, beta: f64) -> f64 {
    cardinality as f64 / (diameter / separation).powf(beta)
}

fn evaluate(space: &FiniteMetricSpace, members: Vec<usize>, beta: f64) -> Candidate {
    let stats = stats_of_sorted(space, &members);
    let sep = stats.separation.expect("at least two members");
    Candidate {
        ratio: ratio(stats.cardinality, stats.diameter, sep, beta),
        members,
    }
}

/// Doubling constant at exponent `beta` over subsets of size at least two.
///
/// Exhaustive for at most [`EXHAUSTIVE_LIMIT`] points. Larger spaces are
/// sampled: `budget` random subsets drawn from `rng`, every pair, every
/// closed ball, and the whole space; the result is then a lower bound.
pub fn doubling_constant<R: Rng + ?Sized>(
    space: &FiniteMetricSpace,
    beta: f64,
    budget: usize,
    rng: &mut R,
) -> Result<DoublingReport> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::BadExponent(beta));
    }
    let n = space.len();
    if n < 2 {
        return Err(Error::DegenerateSpace);
    }
    let (best, mode) = if n <= EXHAUSTIVE_LIMIT {
        (exhaustive(space, beta), DoublingMode::Exhaustive)
    } else {
        (sampled(space, beta, budget, rng), DoublingMode::Sampled)
    };
    Ok(DoublingReport {
        beta,
        constant: best.ratio,
        witness: best.members,
        mode,
    })
}

fn exhaustive(space: &FiniteMetricSpace, beta: f64) -> Candidate {
    let n = space.len();
    (3u32..(1u32 << n))
        .into_par_iter()
        .filter(|mask| mask.count_ones() >= 2)
        .map(|mask| {
            let members = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            evaluate(space, members, beta)
        })
        .reduce_with(Candidate::better)
        .expect("n >= 2 gives at least one pair")
}

fn sampled<R: Rng + ?Sized>(
    space: &FiniteMetricSpace,
    beta: f64,
    budget: usize,
    rng: &mut R,
) -> Candidate {
    let n = space.len();
    // every pair has ratio 2; the smallest one is (0, 1)
    let mut best = Candidate {
        ratio: 2.0,
        members: vec![0, 1],
    };
    best = best.better(evaluate(space, (0..n).collect(), beta));

    let balls = (0..n)
        .into_par_iter()
        .filter_map(|center| best_ball(space, center, beta))
        .reduce_with(Candidate::better);
    if let Some(b) = balls {
        best = best.better(b);
    }

    // draw all subsets first so the stream of random numbers is fixed
    let draws: Vec<Vec<usize>> = (0..budget)
        .map(|_| {
            let size = rng.gen_range(2..=n);
            let mut members = sample(rng, n, size).into_vec();
            members.sort_unstable();
            members
        })
        .collect();
    if let Some(r) = draws
        .into_par_iter()
        .map(|m| evaluate(space, m, beta))
        .reduce_with(Candidate::better)
    {
        best = best.better(r);
    }
    best
}

/// Best closed ball around `center`, grown one distance level at a time.
fn best_ball(space: &FiniteMetricSpace, center: usize, beta: f64) -> Option<Candidate> {
    let n = space.len();
    let row = space.row(center);
    let mut order: Vec<usize> = (0..n).filter(|&j| j != center).collect();
    order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));

    let mut members = vec![center];
    let mut diameter = 0.0f64;
    let mut separation = f64::INFINITY;
    let mut best: Option<(f64, usize)> = None;
    for (pos, &p) in order.iter().enumerate() {
        let prow = space.row(p);
        for &q in &members {
            diameter = diameter.max(prow[q]);
            separation = separation.min(prow[q]);
        }
        members.push(p);
        let closes_level = order.get(pos + 1).is_none_or(|&next| row[next] != row[p]);
        if closes_level {
            let r = ratio(members.len(), diameter, separation, beta);
            if best.is_none_or(|(b, _)| r > b) {
                best = Some((r, members.len()));
            }
        }
    }
    best.map(|(r, size)| {
        let mut m = members[..size].to_vec();
        m.sort_unstable();
        // recompute from scratch so the reported value matches the witness exactly
        let c = evaluate(space, m, beta);
        debug_assert!((c.ratio - r).abs() <= 1e-12 * r.max(1.0));
        c
    })
}
