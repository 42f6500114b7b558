//! Quantitative stand-ins for doubling, uniform disconnectedness and uniform
//! perfectness on finite spaces, plus a threshold classifier.

mod disconnected;
mod doubling;
mod perfect;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::space::FiniteMetricSpace;

pub use disconnected::{
    bottleneck_chain, bottleneck_matrix, minimum_spanning_tree, subdominant_ultrametric,
    ud_modulus, UDReport,
};
pub use doubling::{doubling_constant, DoublingMode, DoublingReport, EXHAUSTIVE_LIMIT};
pub use perfect::{up_constant, UPReport};

/// Classification config. Sampling fields only matter above
/// [`EXHAUSTIVE_LIMIT`] points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub beta: f64,
    pub c_max: f64,
    pub delta_min: f64,
    pub c_min: f64,
    pub budget: usize,
    pub seed: u64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            beta: 2.0,
            c_max: 32.0,
            delta_min: 0.05,
            c_min: 0.05,
            budget: 2000,
            seed: 0,
        }
    }
}

/// Raw values behind a [`TypeVector`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub doubling_constant: f64,
    pub doubling_mode: DoublingMode,
    pub delta_star: f64,
    pub c_star: f64,
    pub r_min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeVector {
    pub u1: bool,
    pub u2: bool,
    pub u3: bool,
    pub thresholds: Thresholds,
    pub measured: Measured,
}

impl TypeVector {
    pub fn bits(&self) -> [bool; 3] {
        [self.u1, self.u2, self.u3]
    }

    /// `"(1,0,1)"` style rendering.
    pub fn label(&self) -> String {
        type_label(self.bits())
    }
}

pub fn type_label(bits: [bool; 3]) -> String {
    let b = |x: bool| if x { '1' } else { '0' };
    format!("({},{},{})", b(bits[0]), b(bits[1]), b(bits[2]))
}

/// Full estimator output for one space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuliReport {
    pub doubling: DoublingReport,
    pub ud: UDReport,
    /// Absent when the cutoff leaves no scales below the diameter.
    pub up: Option<UPReport>,
    pub types: TypeVector,
}

/// Cutoff used when none is given: the smallest positive distance.
pub fn default_r_min(space: &FiniteMetricSpace) -> Option<f64> {
    space.min_positive_distance()
}

/// UP constant, reading an empty scale range `[r_min, diam)` as "no
/// perfectness" rather than an error.
fn up_or_zero(space: &FiniteMetricSpace, r_min: f64) -> Result<Option<UPReport>> {
    if r_min >= space.diameter() {
        Ok(None)
    } else {
        up_constant(space, r_min).map(Some)
    }
}

/// Runs all three estimators and thresholds them.
pub fn moduli_report(
    space: &FiniteMetricSpace,
    thresholds: &Thresholds,
    r_min: Option<f64>,
) -> Result<ModuliReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(thresholds.seed);
    let doubling = doubling_constant(space, thresholds.beta, thresholds.budget, &mut rng)?;
    let ud = ud_modulus(space)?;
    let r_min = match r_min {
        Some(r) => r,
        None => default_r_min(space).ok_or(crate::error::Error::DegenerateSpace)?,
    };
    let up = up_or_zero(space, r_min)?;
    let c_star = up.as_ref().map_or(0.0, |u| u.c_star);
    let types = TypeVector {
        u1: doubling.constant <= thresholds.c_max,
        u2: ud.delta_star >= thresholds.delta_min,
        u3: c_star >= thresholds.c_min,
        thresholds: thresholds.clone(),
        measured: Measured {
            doubling_constant: doubling.constant,
            doubling_mode: doubling.mode,
            delta_star: ud.delta_star,
            c_star,
            r_min,
        },
    };
    Ok(ModuliReport {
        doubling,
        ud,
        up,
        types,
    })
}

/// Type bits of `space` at the given thresholds. `r_min` defaults to the
/// smallest positive distance.
pub fn classify(
    space: &FiniteMetricSpace,
    thresholds: &Thresholds,
    r_min: Option<f64>,
) -> Result<TypeVector> {
    moduli_report(space, thresholds, r_min).map(|r| r.types)
}
