//! Recipes for truncated Cantor spaces of each type `(u1, u2, u3)`.
//!
//! Every recipe is accepted only by measurement: [`generate_type`] classifies
//! its output at the default thresholds and fails if the bits disagree.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{sequential_metric, BinaryPointSet, ShrinkingSequence};
use crate::build::{amalgamate_metric, ClopenPartition};
use crate::error::{Error, Result};
use crate::moduli::{classify, Thresholds};
use crate::space::FiniteMetricSpace;

/// Gap factor used to break perfectness: one consecutive ratio of 1/64.
const GAP: f64 = 1.0 / 64.0;
/// Slow decay `1 / (1 + k / SLOW)` used to break doubling.
const SLOW: f64 = 32.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    /// `s(k) = 2^-k`. Type (1,1,1).
    GeometricSequential,
    /// `s(k) = 1 / (1 + k/32)`: nearly equilateral, so large subsets have
    /// bounded diameter-to-separation ratio. Type (0,1,1).
    SlowSequential,
    /// `s(0) = 1`, then `2^-(k-1) / 64`: one scale gap. Type (1,1,0).
    GappedSequential,
    /// `s(0) = 1`, then the slow decay scaled by 1/64. Type (0,1,0).
    GappedSlowSequential,
    /// Two unit-step progressions on the halves, joined at their first points
    /// by a bridge of half a block length. Type (1,0,1).
    ProgressionBlocks,
    /// The same with a bridge of 64 block lengths. Type (1,0,0).
    DistantProgressionBlocks,
    /// Slow sequential ultrametric (min distance 1) on the first half, a
    /// unit-step progression on the second, bridge 8. Type (0,0,1).
    EquilateralChain,
    /// The same with bridge `64 * 64`. Type (0,0,0).
    DistantEquilateralChain,
}

impl Recipe {
    pub const ALL: [Recipe; 8] = [
        Recipe::GeometricSequential,
        Recipe::SlowSequential,
        Recipe::GappedSequential,
        Recipe::GappedSlowSequential,
        Recipe::ProgressionBlocks,
        Recipe::DistantProgressionBlocks,
        Recipe::EquilateralChain,
        Recipe::DistantEquilateralChain,
    ];

    pub fn for_target(target: [bool; 3]) -> Recipe {
        match target {
            [true, true, true] => Recipe::GeometricSequential,
            [false, true, true] => Recipe::SlowSequential,
            [true, true, false] => Recipe::GappedSequential,
            [false, true, false] => Recipe::GappedSlowSequential,
            [true, false, true] => Recipe::ProgressionBlocks,
            [true, false, false] => Recipe::DistantProgressionBlocks,
            [false, false, true] => Recipe::EquilateralChain,
            [false, false, false] => Recipe::DistantEquilateralChain,
        }
    }

    pub fn target(self) -> [bool; 3] {
        Recipe::ALL
            .iter()
            .copied()
            .zip(all_targets())
            .find(|&(r, _)| r == self)
            .map(|(_, t)| t)
            .expect("every recipe has a target")
    }

    /// The shrinking sequence of the sequential recipes.
    pub fn sequence(self, depth: usize) -> Option<ShrinkingSequence> {
        let slow = |k: usize| 1.0 / (1.0 + k as f64 / SLOW);
        let values: Vec<f64> = match self {
            Recipe::GeometricSequential => {
                return ShrinkingSequence::geometric(1.0, 0.5, depth).ok();
            }
            Recipe::SlowSequential => (0..depth).map(slow).collect(),
            Recipe::GappedSequential => (0..depth)
                .map(|k| {
                    if k == 0 {
                        1.0
                    } else {
                        GAP * 0.5f64.powi(k as i32 - 1)
                    }
                })
                .collect(),
            Recipe::GappedSlowSequential => (0..depth)
                .map(|k| if k == 0 { 1.0 } else { GAP * slow(k - 1) })
                .collect(),
            _ => return None,
        };
        ShrinkingSequence::new(values).ok()
    }
}

/// All eight bit patterns in the order of [`Recipe::ALL`].
pub fn all_targets() -> [[bool; 3]; 8] {
    [
        [true, true, true],
        [false, true, true],
        [true, true, false],
        [false, true, false],
        [true, false, true],
        [true, false, false],
        [false, false, true],
        [false, false, false],
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeTarget {
    pub target: [bool; 3],
    pub recipe: Recipe,
}

/// `count` points on a line with unit steps, as a metric on `labels`.
fn progression(labels: Vec<String>) -> Result<FiniteMetricSpace> {
    let values: Vec<f64> = (0..labels.len()).map(|i| i as f64).collect();
    FiniteMetricSpace::on_line(labels, &values)
}

/// Two halves (first digit 0 / 1) glued at their first points.
fn two_halves(
    depth: usize,
    bridge: f64,
    left: impl FnOnce(Vec<String>) -> Result<FiniteMetricSpace>,
) -> Result<FiniteMetricSpace> {
    let points = BinaryPointSet::new(depth)?;
    let n = points.len();
    let labels = points.labels();
    let half = n / 2;
    // only the distance between the two basepoints enters the amalgam
    let host = FiniteMetricSpace::uniform(labels.clone(), bridge)?;
    let partition = ClopenPartition::new(
        vec![(0..half).collect(), (half..n).collect()],
        vec![0, half],
        n,
    )?;
    let pieces = [
        left(labels[..half].to_vec())?,
        progression(labels[half..].to_vec())?,
    ];
    amalgamate_metric(&host, &partition, &pieces)
}

fn build(recipe: Recipe, depth: usize) -> Result<FiniteMetricSpace> {
    if let Some(s) = recipe.sequence(depth) {
        return sequential_metric(&s, depth);
    }
    let block = (1usize << depth) as f64 / 2.0;
    let slow_piece = |labels: Vec<String>| -> Result<FiniteMetricSpace> {
        let inner = depth - 1;
        let s = Recipe::SlowSequential
            .sequence(inner)
            .ok_or(Error::BadDepth(depth))?;
        // scale so the smallest distance is 1, matching the progression step
        let s = s.scaled(1.0 / s.get(inner - 1))?;
        Ok(sequential_metric(&s, inner)?.relabeled(labels)?.as_metric())
    };
    match recipe {
        Recipe::ProgressionBlocks => two_halves(depth, block / 2.0, progression),
        Recipe::DistantProgressionBlocks => two_halves(depth, 64.0 * block, progression),
        Recipe::EquilateralChain => two_halves(depth, 8.0, slow_piece),
        Recipe::DistantEquilateralChain => two_halves(depth, 64.0 * 64.0, slow_piece),
        _ => unreachable!("sequential recipes handled above"),
    }
}

/// Relabels by `x -> x xor mask` on the digit strings. This is an isometry of
/// every sequential metric, so only the non-sequential recipes move.
fn flip_digits(space: &FiniteMetricSpace, mask: usize) -> Result<FiniteMetricSpace> {
    let n = space.len();
    let order: Vec<usize> = (0..n).map(|i| i ^ mask).collect();
    space.restrict(&order)?.relabeled(space.labels().to_vec())
}

/// A depth-`depth` Cantor space of type `target` at the default thresholds.
///
/// `seed` picks a digit-flip relabelling. Recipes need enough points to
/// reach their bands (depth 7 works for all eight); a miss is reported as
/// [`Error::GenerationFailed`] with the measured bits.
pub fn generate_type(
    target: [bool; 3],
    depth: usize,
    seed: u64,
) -> Result<(FiniteMetricSpace, TypeTarget)> {
    if depth < 4 {
        return Err(Error::BadDepth(depth));
    }
    let recipe = Recipe::for_target(target);
    let base = build(recipe, depth)?;
    let mask = ChaCha8Rng::seed_from_u64(seed).gen_range(0..base.len());
    let space = flip_digits(&base, mask)?;
    let measured = classify(&space, &Thresholds::default(), None)?.bits();
    if measured != target {
        return Err(Error::GenerationFailed {
            recipe: format!("{recipe:?}"),
            depth,
            measured,
        });
    }
    Ok((space, TypeTarget { target, recipe }))
}
