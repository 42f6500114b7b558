use rand::distributions::{Distribution, Uniform};
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    digest, random_space, random_ultrametric, rng_for, trial_seed, ExperimentConfig,
    ExperimentKind, RandomMode, Report,
};
use crate::build::{
    amalgamate_metric, approximate_doubling, approximate_ud, approximate_ultrametric,
    approximate_up, sequence_below, ClopenPartition, SequentialPieces,
};
use crate::cantor::{
    all_targets, depth_for, exponential_sequence, generate_type, shift, BinaryPointSet, RangeSet,
    Recipe, ShrinkingSequence,
};
use crate::error::{Error, Result};
use crate::moduli::{classify, moduli_report, type_label, ud_modulus, Measured, Thresholds};
use crate::space::{
    default_labels, metric_closure, stats_of_sorted, sup_distance, ultra_distance, DistanceKind,
    FiniteMetricSpace, Flavor, DEFAULT_TOLERANCE,
};

/// One trial of a dense or perturbation experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub digest: String,
    pub epsilon: f64,
    pub distance_kind: DistanceKind,
    pub achieved: f64,
    pub bound: f64,
    pub before: Option<Measured>,
    pub after: Option<Measured>,
    /// Subset inequalities checked (perturbation runs only).
    pub subset_checks: usize,
    pub pass: bool,
    pub error: Option<String>,
}

impl TrialRecord {
    fn failed(trial: usize, seed: u64, kind: DistanceKind, err: Error) -> Self {
        TrialRecord {
            trial,
            seed,
            digest: String::new(),
            epsilon: 0.0,
            distance_kind: kind,
            achieved: f64::NAN,
            bound: f64::NAN,
            before: None,
            after: None,
            subset_checks: 0,
            pass: false,
            error: Some(err.to_string()),
        }
    }
}

fn measure(
    space: &FiniteMetricSpace,
    thresholds: &Thresholds,
    r_min: Option<f64>,
) -> Option<Measured> {
    moduli_report(space, thresholds, r_min)
        .ok()
        .map(|r| r.types.measured)
}

/// Runs whichever experiment the config names.
pub fn run(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    Ok(match config.experiment {
        ExperimentKind::TypeGrid => Report::from_grid(config, run_type_grid(config)?),
        ExperimentKind::PerturbUniform | ExperimentKind::PerturbChain => {
            Report::from_trials(config, run_perturb(config)?)
        }
        _ => Report::from_trials(config, run_dense(config)?),
    })
}

fn trials<F>(config: &ExperimentConfig, kind: DistanceKind, one: F) -> Vec<TrialRecord>
where
    F: Fn(usize, u64) -> Result<TrialRecord> + Sync,
{
    (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(config.seed, t as u64);
            one(t, seed).unwrap_or_else(|e| TrialRecord::failed(t, seed, kind, e))
        })
        .collect()
}

/// Approximation runs: each trial draws an instance, runs the matching
/// pipeline and checks its proven distance bound.
pub fn run_dense(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let n = config.size();
    let th = &config.thresholds;
    let kind = match config.experiment {
        ExperimentKind::DenseUltDoubling | ExperimentKind::DenseUltUp => {
            DistanceKind::UltraMetricOverS
        }
        ExperimentKind::DenseDoubling | ExperimentKind::DenseUd | ExperimentKind::DenseUp => {
            DistanceKind::SupMetric
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "{other:?} is not a dense experiment"
            )))
        }
    };
    let range = config.range_set();
    let up_sequence = if config.experiment == ExperimentKind::DenseUltUp {
        Some(window_sequence(config, &range, n)?)
    } else {
        None
    };
    Ok(trials(config, kind, |t, seed| {
        let mode = config.mode.unwrap_or(RandomMode::Closure);
        let d = match kind {
            DistanceKind::SupMetric => random_space(mode, n, seed)?,
            DistanceKind::UltraMetricOverS => random_ultrametric(&range, n, seed)?,
        };
        let eps = config.epsilon_for(d.diameter());
        let before = measure(&d, th, None);
        let (out, bound, r_min, extra_pass) = match config.experiment {
            ExperimentKind::DenseDoubling => {
                let a = approximate_doubling(&d, eps)?;
                (a.space, a.bound, None, true)
            }
            ExperimentKind::DenseUd => {
                let (a, ud) = approximate_ud(&d, eps, &SequentialPieces::default())?;
                (a.space, a.bound, None, ud.delta_star > 0.0)
            }
            ExperimentKind::DenseUp => {
                let a = approximate_up(&d, eps)?;
                let ok = a.up.as_ref().is_none_or(|u| u.c_star >= a.lower_bound);
                (
                    a.approximation.space,
                    a.approximation.bound,
                    Some(a.r_min),
                    ok,
                )
            }
            ExperimentKind::DenseUltDoubling => {
                let seq = sequence_below(&range, eps, depth_for(n))?;
                let a = approximate_ultrametric(&d, &range, eps, &seq)?;
                (a.space, a.bound, None, true)
            }
            ExperimentKind::DenseUltUp => {
                let full = up_sequence.as_ref().expect("built above");
                let m = full
                    .values()
                    .iter()
                    .position(|&v| v <= eps)
                    .ok_or(Error::BadEpsilon(eps))?;
                let seq = shift(full, m)?;
                let a = approximate_ultrametric(&d, &range, eps, &seq)?;
                (a.space, a.bound, None, true)
            }
            _ => unreachable!(),
        };
        let achieved = match kind {
            DistanceKind::SupMetric => sup_distance(&out, &d)?.value,
            DistanceKind::UltraMetricOverS => ultra_distance(&d, &out, &range)?.value,
        };
        Ok(TrialRecord {
            trial: t,
            seed,
            digest: digest(&d),
            epsilon: eps,
            distance_kind: kind,
            achieved,
            bound,
            before,
            after: measure(&out, th, r_min),
            subset_checks: 0,
            pass: achieved <= bound && extra_pass,
            error: None,
        })
    }))
}

/// Exponential sequence of the configured range set, long enough to shift
/// below any epsilon of the instances.
fn window_sequence(
    config: &ExperimentConfig,
    range: &RangeSet,
    n: usize,
) -> Result<ShrinkingSequence> {
    let (b, m) = match (config.window, range) {
        (Some(w), _) => w,
        (None, RangeSet::Geometric { scale, ratio }) => (*ratio, scale.max(1.0 / scale)),
        (None, _) => {
            return Err(Error::InvalidParameter(
                "dense_ult_up needs a window (b, M) for non-geometric range sets".into(),
            ))
        }
    };
    exponential_sequence(range, b, m, depth_for(n) + 64)
}

/// Symmetric uniform noise of half-width `eta` off the diagonal, repaired by
/// closure when the triangle inequality fails; redrawn when the repair leaves
/// the `1/2` ball. After 20 misses the noise is halved.
fn perturb<R: Rng>(base: &FiniteMetricSpace, eta: f64, rng: &mut R) -> Result<FiniteMetricSpace> {
    let n = base.len();
    let mut eta = eta;
    let mut misses = 0;
    loop {
        let noise = Uniform::new_inclusive(-eta, eta);
        let mut raw = base.to_matrix();
        for i in 0..n {
            for j in i + 1..n {
                let v = raw[i][j] + noise.sample(rng);
                raw[i][j] = v;
                raw[j][i] = v;
            }
        }
        let candidate = crate::space::validate(
            base.labels().to_vec(),
            raw.clone(),
            Flavor::Metric,
            DEFAULT_TOLERANCE,
        )
        .or_else(|_| metric_closure(base.labels().to_vec(), raw))?;
        if sup_distance(&candidate, base)?.value < 0.5 {
            return Ok(candidate);
        }
        misses += 1;
        if misses % 20 == 0 {
            eta /= 2.0;
        }
    }
}

/// Subsets for the uniform perturbation check: all of them for `n <= 12`,
/// else `10^4` random ones plus all pairs.
fn perturbation_subsets<R: Rng>(n: usize, rng: &mut R) -> Vec<Vec<usize>> {
    if n <= 12 {
        return (0u32..1 << n)
            .filter(|m| m.count_ones() >= 2)
            .map(|m| (0..n).filter(|&i| m >> i & 1 == 1).collect())
            .collect();
    }
    let mut out: Vec<Vec<usize>> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| vec![i, j]))
        .collect();
    for _ in 0..10_000 {
        let size = rng.gen_range(2..=n);
        let mut s = sample(rng, n, size).into_vec();
        s.sort_unstable();
        out.push(s);
    }
    out
}

/// Perturbation runs around the uniform metric and the integer progression.
pub fn run_perturb(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let n = config.size();
    let th = &config.thresholds;
    let base = match config.experiment {
        ExperimentKind::PerturbUniform => FiniteMetricSpace::uniform(default_labels(n), 1.0)?,
        ExperimentKind::PerturbChain => {
            let values: Vec<f64> = (1..=n).map(|i| i as f64).collect();
            FiniteMetricSpace::on_line(default_labels(n), &values)?
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "{other:?} is not a perturbation experiment"
            )))
        }
    };
    let base_delta = ud_modulus(&base)?.delta_star;
    Ok(trials(config, DistanceKind::SupMetric, |t, seed| {
        let mut rng = rng_for(seed);
        let e = perturb(&base, 0.49, &mut rng)?;
        let achieved = sup_distance(&e, &base)?.value;
        let (checks, holds) = match config.experiment {
            ExperimentKind::PerturbUniform => {
                let subsets = perturbation_subsets(n, &mut rng);
                let holds = subsets.par_iter().all(|a| {
                    let sd = stats_of_sorted(&base, a);
                    let se = stats_of_sorted(&e, a);
                    let (ad, ae) = (sd.separation.expect("2+"), se.separation.expect("2+"));
                    sd.diameter / 2.0 <= se.diameter && ae <= 2.0 * ad
                });
                (subsets.len(), holds)
            }
            _ => (1, ud_modulus(&e)?.delta_star <= 4.0 * base_delta),
        };
        Ok(TrialRecord {
            trial: t,
            seed,
            digest: digest(&e),
            epsilon: 0.5,
            distance_kind: DistanceKind::SupMetric,
            achieved,
            bound: 0.5,
            before: measure(&base, th, None),
            after: measure(&e, th, None),
            subset_checks: checks,
            pass: achieved < 0.5 && holds,
            error: None,
        })
    }))
}

/// Cells of the type-grid host: the first `cell_bits` digits.
pub const GRID_CELL_BITS: usize = 2;

/// Random host on `2^(depth + cell_bits)` Cantor points whose top-level cells
/// are tight clusters: cell-to-cell distances come from a random closure
/// metric, distances inside a cell from a random sequential ultrametric of
/// diameter `0.05` times the smallest cell distance.
pub fn type_grid_host(
    depth: usize,
    cell_bits: usize,
    seed: u64,
) -> Result<(FiniteMetricSpace, ClopenPartition)> {
    let points = BinaryPointSet::new(depth + cell_bits)?;
    let cells = 1usize << cell_bits;
    let per = 1usize << depth;
    let n = points.len();
    let cell_metric = random_space(RandomMode::Closure, cells, trial_seed(seed, 0))?;
    let tight = 0.05 * cell_metric.min_positive_distance().expect("2+ cells");
    let inner: Vec<FiniteMetricSpace> = (0..cells)
        .map(|c| random_space(RandomMode::Sequential, per, trial_seed(seed, 1 + c as u64)))
        .collect::<Result<_>>()?;
    let mut dist = vec![0.0; n * n];
    for x in 0..n {
        let (i, a) = (x / per, x % per);
        for y in 0..n {
            let (j, b) = (y / per, y % per);
            dist[x * n + y] = if i == j {
                tight * inner[i].d(a, b)
            } else {
                (tight * inner[i].d(a, 0) + tight * inner[j].d(0, b)) + cell_metric.d(i, j)
            };
        }
    }
    let host =
        FiniteMetricSpace::from_flat(points.labels(), dist, Flavor::Metric, DEFAULT_TOLERANCE)?;
    let partition = ClopenPartition::new(
        (0..cells)
            .map(|c| (c * per..(c + 1) * per).collect())
            .collect(),
        (0..cells).map(|c| c * per).collect(),
        n,
    )?;
    Ok((host, partition))
}

/// One row of the type grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeGridRow {
    pub target: String,
    pub recipe: Recipe,
    pub digest: String,
    pub before_type: Option<String>,
    pub before: Option<Measured>,
    pub after_type: Option<String>,
    pub after: Option<Measured>,
    pub epsilon: f64,
    pub achieved: f64,
    pub bound: f64,
    pub pass: bool,
    pub error: Option<String>,
}

fn grid_row(target: [bool; 3], depth: usize, seed: u64, th: &Thresholds) -> TypeGridRow {
    let mut row = TypeGridRow {
        target: type_label(target),
        recipe: Recipe::for_target(target),
        digest: String::new(),
        before_type: None,
        before: None,
        after_type: None,
        after: None,
        epsilon: f64::NAN,
        achieved: f64::NAN,
        bound: f64::NAN,
        pass: false,
        error: None,
    };
    let outcome = (|| -> Result<()> {
        let (piece, _) = generate_type(target, depth, seed)?;
        let before = classify(&piece, th, None)?;
        row.before_type = Some(before.label());
        row.before = Some(before.measured.clone());
        let (host, partition) = type_grid_host(depth, GRID_CELL_BITS, seed)?;
        row.digest = digest(&host);
        let eps = host.diameter() / 8.0;
        let factor = eps / piece.diameter();
        let pieces = partition
            .pieces
            .iter()
            .map(|cell| {
                let labels = cell.iter().map(|&i| host.labels()[i].clone()).collect();
                piece.scaled(factor)?.relabeled(labels)
            })
            .collect::<Result<Vec<_>>>()?;
        let out = amalgamate_metric(&host, &partition, &pieces)?;
        let after = classify(&out, th, None)?;
        row.epsilon = eps;
        row.achieved = sup_distance(&out, &host)?.value;
        row.bound = 4.0 * eps;
        row.pass = before.bits() == target
            && after.bits() == target
            && partition.max_diameter(&host) <= eps
            && row.achieved <= row.bound;
        row.after_type = Some(after.label());
        row.after = Some(after.measured);
        Ok(())
    })();
    if let Err(e) = outcome {
        row.error = Some(e.to_string());
    }
    row
}

/// For every type: generate a piece, put copies scaled to `eps = diam / 8`
/// on the cells of a random host, amalgamate, and classify before and after.
pub fn run_type_grid(config: &ExperimentConfig) -> Result<Vec<TypeGridRow>> {
    config.validate()?;
    let depth = config.cantor_depth();
    Ok(all_targets()
        .par_iter()
        .map(|&t| grid_row(t, depth, config.seed, &config.thresholds))
        .collect())
}
