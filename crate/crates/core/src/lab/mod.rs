//! Seeded instances, the approximation and perturbation experiments, the
//! type grid, and report rendering.

mod experiments;
mod report;

pub use experiments::{
    run, run_dense, run_perturb, run_type_grid, type_grid_host, TrialRecord, TypeGridRow,
    GRID_CELL_BITS,
};
pub use report::{write_report, Report, DENSENESS_NOTE};

use std::path::PathBuf;

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cantor::{depth_for, sequential_on_prefix, RangeSet, ShrinkingSequence};
use crate::error::{Error, Result};
use crate::moduli::{subdominant_ultrametric, Thresholds};
use crate::space::{default_labels, metric_closure, FiniteMetricSpace, Flavor, DEFAULT_TOLERANCE};

/// Dimension of the cube used by [`RandomMode::PointsLinf`].
pub const LINF_DIMENSION: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomMode {
    /// Symmetric uniform(0.5, 2.0) entries, then shortest-path closure.
    Closure,
    /// Uniform points in `[0, 1]^3` under the max norm.
    PointsLinf,
    /// Sequential ultrametric of a random shrinking sequence.
    Sequential,
}

pub(crate) fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent sub-seed for trial `index` of a run seeded with `master`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

/// A random finite space, deterministic in `seed`.
pub fn random_space(mode: RandomMode, size: usize, seed: u64) -> Result<FiniteMetricSpace> {
    if size < 2 {
        return Err(Error::TooFewPoints(size));
    }
    let mut rng = rng_for(seed);
    match mode {
        RandomMode::Closure => {
            let noise = Uniform::new_inclusive(0.5, 2.0);
            let mut raw = vec![vec![0.0; size]; size];
            for i in 0..size {
                for j in i + 1..size {
                    let v = noise.sample(&mut rng);
                    raw[i][j] = v;
                    raw[j][i] = v;
                }
            }
            metric_closure(default_labels(size), raw)
        }
        RandomMode::PointsLinf => {
            let coords: Vec<Vec<f64>> = (0..size)
                .map(|_| (0..LINF_DIMENSION).map(|_| rng.gen::<f64>()).collect())
                .collect();
            let mut dist = vec![0.0; size * size];
            for i in 0..size {
                for j in 0..size {
                    dist[i * size + j] = coords[i]
                        .iter()
                        .zip(&coords[j])
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                }
            }
            FiniteMetricSpace::from_flat(
                default_labels(size),
                dist,
                Flavor::Metric,
                DEFAULT_TOLERANCE,
            )
        }
        RandomMode::Sequential => {
            let ratio = Uniform::new_inclusive(0.2, 0.8);
            let mut values = vec![1.0];
            for _ in 1..depth_for(size) {
                let last = *values.last().expect("nonempty");
                values.push(last * ratio.sample(&mut rng));
            }
            sequential_on_prefix(&ShrinkingSequence::new(values)?, default_labels(size))
        }
    }
}

/// A random `S`-valued ultrametric: the subdominant ultrametric of a random
/// closure metric, with every value rounded up into `S`.
pub fn random_ultrametric(range: &RangeSet, size: usize, seed: u64) -> Result<FiniteMetricSpace> {
    let base = subdominant_ultrametric(&random_space(RandomMode::Closure, size, seed)?)?;
    // rounding up is monotone, so the strong triangle inequality survives
    let dist: Vec<f64> = base.as_flat().iter().map(|&v| range.least_geq(v)).collect();
    if dist.iter().any(|v| v.is_infinite()) {
        return Err(Error::InvalidParameter(
            "range set has no member above the instance distances".into(),
        ));
    }
    FiniteMetricSpace::from_flat(base.labels().to_vec(), dist, Flavor::Ultrametric, 0.0)
}

/// First 16 hex digits of the SHA-256 of labels and distance bits.
pub fn digest(space: &FiniteMetricSpace) -> String {
    let mut h = Sha256::new();
    for l in space.labels() {
        h.update(l.as_bytes());
        h.update([0u8]);
    }
    for v in space.as_flat() {
        h.update(v.to_bits().to_le_bytes());
    }
    h.finalize()[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    DenseDoubling,
    DenseUd,
    DenseUp,
    DenseUltDoubling,
    DenseUltUp,
    PerturbUniform,
    PerturbChain,
    TypeGrid,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsilonMode {
    /// `epsilon` is a fraction of the instance diameter.
    #[default]
    Fraction,
    Absolute,
}

fn default_epsilon() -> f64 {
    0.125
}

fn default_trials() -> usize {
    100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Point count for dense and perturbation runs (default 64, or 32 and 33
    /// for the perturbation runs).
    #[serde(default)]
    pub n: Option<usize>,
    /// Cantor depth for the type grid (default 7).
    #[serde(default)]
    pub depth: Option<usize>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub epsilon_mode: EpsilonMode,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub thresholds: Thresholds,
    /// Instance family for the metric dense runs (default closure).
    #[serde(default)]
    pub mode: Option<RandomMode>,
    /// Range set for the ultrametric runs (default geometric, ratio 1/2).
    #[serde(default)]
    pub range: Option<RangeSet>,
    /// `(b, M)` exponential window of the range set, for `dense_ult_up`.
    /// Derived automatically for geometric range sets.
    #[serde(default)]
    pub window: Option<(f64, f64)>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment,
            n: None,
            depth: None,
            epsilon: default_epsilon(),
            epsilon_mode: EpsilonMode::Fraction,
            trials: default_trials(),
            seed: 0,
            thresholds: Thresholds::default(),
            mode: None,
            range: None,
            window: None,
            output: None,
            format: Format::Json,
        }
    }

    pub fn read_json(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn size(&self) -> usize {
        self.n.unwrap_or(match self.experiment {
            ExperimentKind::PerturbUniform => 32,
            ExperimentKind::PerturbChain => 33,
            _ => 64,
        })
    }

    pub fn cantor_depth(&self) -> usize {
        self.depth.unwrap_or(7)
    }

    pub fn range_set(&self) -> RangeSet {
        self.range
            .clone()
            .unwrap_or_else(|| RangeSet::geometric(1.0, 0.5).expect("valid"))
    }

    /// Absolute epsilon for an instance of the given diameter.
    pub fn epsilon_for(&self, diameter: f64) -> f64 {
        match self.epsilon_mode {
            EpsilonMode::Fraction => self.epsilon * diameter,
            EpsilonMode::Absolute => self.epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::BadEpsilon(self.epsilon));
        }
        let n = self.size();
        let least = match self.experiment {
            ExperimentKind::DenseUp | ExperimentKind::DenseUltUp => 3,
            ExperimentKind::PerturbChain => 3,
            _ => 2,
        };
        if self.experiment != ExperimentKind::TypeGrid && n < least {
            return Err(Error::TooFewPoints(n));
        }
        if self.experiment == ExperimentKind::TypeGrid && self.cantor_depth() < 6 {
            return Err(Error::BadDepth(self.cantor_depth()));
        }
        Ok(())
    }
}
