//! Truncated Cantor space: binary strings of a fixed depth, the first-difference
//! valuation, sequentially metrized spaces, the middle-third Euclidean metric,
//! and the exponential-window tools for range sets.

mod generate;
mod range;

pub use generate::{all_targets, generate_type, Recipe, TypeTarget};
pub use range::RangeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{FiniteMetricSpace, Flavor};

/// Largest depth for which we materialize distance matrices (4096 points).
pub const MAX_DEPTH: usize = 12;

/// All `2^depth` binary strings of length `depth`, in lexicographic order.
///
/// Index `i` corresponds to the string whose digit `k` is bit `depth - 1 - k`
/// of `i`, so canonical order and binary counting agree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryPointSet {
    depth: usize,
}

impl BinaryPointSet {
    pub fn new(depth: usize) -> Result<Self> {
        if depth == 0 || depth > MAX_DEPTH {
            return Err(Error::BadDepth(depth));
        }
        Ok(BinaryPointSet { depth })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        1 << self.depth
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Digit `k` of point `index`.
    pub fn digit(&self, index: usize, k: usize) -> bool {
        (index >> (self.depth - 1 - k)) & 1 == 1
    }

    pub fn label(&self, index: usize) -> String {
        (0..self.depth)
            .map(|k| if self.digit(index, k) { '1' } else { '0' })
            .collect()
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.len()).map(|i| self.label(i)).collect()
    }

    /// First differing digit of points `i` and `j`; `None` when equal.
    pub fn valuation(&self, i: usize, j: usize) -> Option<usize> {
        let x = i ^ j;
        if x == 0 {
            None
        } else {
            Some(self.depth - 1 - (usize::BITS - 1 - x.leading_zeros()) as usize)
        }
    }
}

/// First index where `x` and `y` differ; `None` stands for `inf` (`x == y`).
pub fn valuation(x: &str, y: &str) -> Result<Option<usize>> {
    let (a, b) = (x.chars().count(), y.chars().count());
    if a != b {
        return Err(Error::LengthMismatch(a, b));
    }
    if let Some(c) = x.chars().chain(y.chars()).find(|c| *c != '0' && *c != '1') {
        return Err(Error::InvalidDigit(c));
    }
    Ok(x.chars().zip(y.chars()).position(|(p, q)| p != q))
}

/// `M^-1 a^n <= s(n) <= M a^n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub a: f64,
    #[serde(rename = "M")]
    pub m: f64,
}

impl Envelope {
    pub fn new(a: f64, m: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidEnvelope(format!("a = {a} not in (0, 1)")));
        }
        if !(m >= 1.0 && m.is_finite()) {
            return Err(Error::InvalidEnvelope(format!("M = {m} not in [1, inf)")));
        }
        Ok(Envelope { a, m })
    }

    /// The window `[M^-1 a^n, M a^n]`.
    pub fn window(&self, n: usize) -> (f64, f64) {
        exponential_window(self.a, self.m, n)
    }
}

/// `[M^-1 a^n, M a^n]`, computed the same way everywhere in the crate.
pub fn exponential_window(a: f64, m: f64, n: usize) -> (f64, f64) {
    let p = a.powi(n as i32);
    (p / m, m * p)
}

// Envelope checks on stored sequences allow for rounding in the window ends.
const ENVELOPE_SLACK: f64 = 1e-12;

/// A finite strictly decreasing positive sequence `s(0) > s(1) > ... > 0`,
/// optionally with an exponential envelope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SequenceFile", into = "SequenceFile")]
pub struct ShrinkingSequence {
    values: Vec<f64>,
    envelope: Option<Envelope>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SequenceFile {
    pub values: Vec<f64>,
    #[serde(default)]
    pub envelope: Option<Envelope>,
}

impl TryFrom<SequenceFile> for ShrinkingSequence {
    type Error = Error;

    fn try_from(f: SequenceFile) -> Result<Self> {
        match f.envelope {
            Some(env) => ShrinkingSequence::with_envelope(f.values, Envelope::new(env.a, env.m)?),
            None => ShrinkingSequence::new(f.values),
        }
    }
}

impl From<ShrinkingSequence> for SequenceFile {
    fn from(s: ShrinkingSequence) -> Self {
        SequenceFile {
            values: s.values,
            envelope: s.envelope,
        }
    }
}

impl ShrinkingSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("empty sequence".into()));
        }
        for (k, &v) in values.iter().enumerate() {
            if !(v > 0.0 && v.is_finite()) || (k > 0 && !(v < values[k - 1])) {
                return Err(Error::NotShrinking(k));
            }
        }
        Ok(ShrinkingSequence {
            values,
            envelope: None,
        })
    }

    pub fn with_envelope(values: Vec<f64>, envelope: Envelope) -> Result<Self> {
        let mut s = Self::new(values)?;
        for (k, &v) in s.values.iter().enumerate() {
            let (lo, hi) = envelope.window(k);
            if v < lo * (1.0 - ENVELOPE_SLACK) || v > hi * (1.0 + ENVELOPE_SLACK) {
                return Err(Error::EnvelopeViolation(k));
            }
        }
        s.envelope = Some(envelope);
        Ok(s)
    }

    /// `s(k) = scale * ratio^k` for `k < len`, with envelope `(ratio, 1)` when
    /// `scale == 1`.
    pub fn geometric(scale: f64, ratio: f64, len: usize) -> Result<Self> {
        let values = (0..len).map(|k| scale * ratio.powi(k as i32)).collect();
        if scale == 1.0 {
            Self::with_envelope(values, Envelope::new(ratio, 1.0)?)
        } else {
            Self::new(values)
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn envelope(&self) -> Option<Envelope> {
        self.envelope
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// Multiplies every value by `factor`; the envelope is dropped.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * factor).collect())
    }

    /// Smallest consecutive ratio `s(k + 1) / s(k)` over the first `depth`
    /// values (`1` when there is only one).
    pub fn min_consecutive_ratio(&self, depth: usize) -> f64 {
        self.values[..depth.min(self.len())]
            .windows(2)
            .map(|w| w[1] / w[0])
            .fold(1.0, f64::min)
    }
}

/// `s^{m}(n) = s(m + n)`. An envelope `(a, M)` becomes `(a, M a^-m)`.
pub fn shift(s: &ShrinkingSequence, m: usize) -> Result<ShrinkingSequence> {
    if m >= s.len() {
        return Err(Error::ShiftTooLarge {
            shift: m,
            len: s.len(),
        });
    }
    let values = s.values[m..].to_vec();
    match s.envelope {
        Some(env) => {
            let adjusted = Envelope::new(env.a, env.m / env.a.powi(m as i32))?;
            ShrinkingSequence::with_envelope(values, adjusted)
        }
        None => ShrinkingSequence::new(values),
    }
}

/// The depth-`depth` truncation of `(2^ω, d_s)`: `d(x, y) = s(v(x, y))`.
pub fn sequential_metric(s: &ShrinkingSequence, depth: usize) -> Result<FiniteMetricSpace> {
    if s.len() < depth {
        return Err(Error::SequenceTooShort {
            len: s.len(),
            depth,
        });
    }
    let points = BinaryPointSet::new(depth)?;
    let n = points.len();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if let Some(v) = points.valuation(i, j) {
                dist[i * n + j] = s.values[v];
            }
        }
    }
    FiniteMetricSpace::from_flat(points.labels(), dist, Flavor::Ultrametric, 0.0)
}

/// Sequential ultrametric on the first `count` binary strings of the
/// shallowest depth that holds them. Used to put an ultrametric on pieces of
/// arbitrary size; labels are supplied by the caller.
pub fn sequential_on_prefix(
    s: &ShrinkingSequence,
    labels: Vec<String>,
) -> Result<FiniteMetricSpace> {
    let count = labels.len();
    if count == 1 {
        return FiniteMetricSpace::from_flat(labels, vec![0.0], Flavor::Ultrametric, 0.0);
    }
    let depth = depth_for(count);
    if s.len() < depth {
        return Err(Error::SequenceTooShort {
            len: s.len(),
            depth,
        });
    }
    let points = BinaryPointSet::new(depth)?;
    let mut dist = vec![0.0; count * count];
    for i in 0..count {
        for j in 0..count {
            if let Some(v) = points.valuation(i, j) {
                dist[i * count + j] = s.values[v];
            }
        }
    }
    FiniteMetricSpace::from_flat(labels, dist, Flavor::Ultrametric, 0.0)
}

/// Smallest depth with `2^depth >= count` (at least 1).
pub fn depth_for(count: usize) -> usize {
    (count.max(2) - 1).ilog2() as usize + 1
}

fn cantor_values(depth: usize) -> Vec<f64> {
    let points = BinaryPointSet { depth };
    (0..points.len())
        .map(|i| {
            (0..depth)
                .filter(|&k| points.digit(i, k))
                .map(|k| 2.0 / 3f64.powi(k as i32 + 1))
                .sum()
        })
        .collect()
}

/// `x -> sum_i 2 x(i) / 3^(i+1)` with `scale * |x - y|`.
pub fn euclidean_cantor_metric(depth: usize, scale: f64) -> Result<FiniteMetricSpace> {
    let points = BinaryPointSet::new(depth)?;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale {scale}")));
    }
    let values: Vec<f64> = cantor_values(depth)
        .into_iter()
        .map(|v| v * scale)
        .collect();
    FiniteMetricSpace::on_line(points.labels(), &values)
}

/// The first `labels.len()` points (canonical order) of the middle-third set
/// at the shallowest depth that holds them, scaled by `scale`.
pub fn euclidean_cantor_on_prefix(labels: Vec<String>, scale: f64) -> Result<FiniteMetricSpace> {
    let count = labels.len();
    let depth = depth_for(count);
    if depth > MAX_DEPTH {
        return Err(Error::BadDepth(depth));
    }
    let values: Vec<f64> = cantor_values(depth)
        .into_iter()
        .take(count)
        .map(|v| v * scale)
        .collect();
    FiniteMetricSpace::on_line(labels, &values)
}

/// Outcome of a windowed exponentiality check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowCheck {
    pub holds: bool,
    /// `witnesses[n]` lies in `[M^-1 a^n, M a^n] ∩ S`, for every checked `n`
    /// before the first failure.
    pub witnesses: Vec<f64>,
    pub first_failure: Option<usize>,
}

/// Checks `[M^-1 a^n, M a^n] ∩ S ≠ ∅` for `n = 0..=max_n`.
///
/// Only finitely many windows are examined, so `true` is evidence, not a
/// proof, that `S` is exponential.
pub fn is_exponential_window(s: &RangeSet, a: f64, m: f64, max_n: usize) -> Result<WindowCheck> {
    Envelope::new(a, m)?;
    let mut witnesses = Vec::new();
    for n in 0..=max_n {
        let (lo, hi) = exponential_window(a, m, n);
        let w = s.least_geq(lo);
        if w <= hi && w > 0.0 {
            witnesses.push(w);
        } else {
            return Ok(WindowCheck {
                holds: false,
                witnesses,
                first_failure: Some(n),
            });
        }
    }
    Ok(WindowCheck {
        holds: true,
        witnesses,
        first_failure: None,
    })
}

/// A strictly decreasing sequence in `S` inside the windows of `a = b^k`,
/// where `k` is the least integer `>= 2p + 1` and `p = -log M / log b`.
///
/// The `a`-window at `n` is the `b`-window at `k n`, so the `b`-windows must
/// meet `S` up to `k (len - 1)`. Each value is the least element of `S` above
/// the lower end of its `a`-window; `k > 2p` gives `M a^(n+1) < M^-1 a^n`, so
/// the values strictly decrease.
pub fn exponential_sequence(s: &RangeSet, b: f64, m: f64, len: usize) -> Result<ShrinkingSequence> {
    if len == 0 {
        return Err(Error::InvalidParameter("empty sequence".into()));
    }
    let k = decay_exponent(b, m)?;
    let pre = is_exponential_window(s, b, m, k * (len - 1))?;
    if let Some(n) = pre.first_failure {
        return Err(Error::WindowMiss { n, base: b });
    }
    let a = b.powi(k as i32);
    let mut values = Vec::with_capacity(len);
    for n in 0..len {
        let (lo, hi) = exponential_window(a, m, n);
        let v = s.least_geq(lo);
        if !(v <= hi && v > 0.0) {
            return Err(Error::WindowMiss { n, base: a });
        }
        values.push(v);
    }
    ShrinkingSequence::with_envelope(values, Envelope::new(a, m)?)
}

/// The least integer `k >= 2p + 1`, `p = -log M / log b`.
fn decay_exponent(b: f64, m: f64) -> Result<usize> {
    Envelope::new(b, m)?;
    let p = -m.ln() / b.ln();
    // absorb rounding so that an integral 2p + 1 is not pushed up by one
    let k = (2.0 * p + 1.0 - 1e-9).ceil();
    if k > 64.0 {
        return Err(Error::InvalidParameter(format!(
            "window (b, M) = ({b}, {m}) needs decay b^{k}"
        )));
    }
    Ok(k as usize)
}

/// The decay `a = b^k` used by [`exponential_sequence`]. Taking
/// `a = b^(2p + 1)` literally only works when `2p + 1` is an integer:
/// otherwise the `a`-windows need not meet `S`.
pub fn decay_for(b: f64, m: f64) -> Result<f64> {
    Ok(b.powi(decay_exponent(b, m)? as i32))
}

/// Every `n <= max_n` with `[c^(n+1), c^(n-1)] ∩ S = ∅`, in increasing order.
pub fn up_obstructions(s: &RangeSet, c: f64, max_n: usize) -> Result<Vec<usize>> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidParameter(format!("c = {c} not in (0, 1)")));
    }
    Ok((0..=max_n)
        .filter(|&n| {
            let lo = c.powi(n as i32 + 1);
            let hi = c.powi(n as i32 - 1);
            !(s.least_geq(lo) <= hi)
        })
        .collect())
}

/// The least `n <= max_n` with `[c^(n+1), c^(n-1)] ∩ S = ∅`, if any.
///
/// At such an `n`, any `S`-valued ultrametric has no distance in
/// `[c r, r]` for `r = c^(n-1)`, so it is not `c`-uniformly perfect at that
/// radius.
pub fn up_obstruction(s: &RangeSet, c: f64, max_n: usize) -> Result<Option<usize>> {
    Ok(up_obstructions(s, c, max_n)?.first().copied())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::validate;

    #[test]
    fn valuation_examples() {
        assert_eq!(valuation("0101", "0101").unwrap(), None);
        assert_eq!(valuation("0111", "1111").unwrap(), Some(0));
        assert_eq!(valuation("0010", "0011").unwrap(), Some(3));
        assert_eq!(valuation("01", "011"), Err(Error::LengthMismatch(2, 3)));
        assert_eq!(valuation("02", "01"), Err(Error::InvalidDigit('2')));
    }

    #[test]
    fn point_set_valuation_matches_strings() {
        let p = BinaryPointSet::new(5).unwrap();
        assert_eq!(p.len(), 32);
        for i in 0..32 {
            for j in 0..32 {
                assert_eq!(
                    p.valuation(i, j),
                    valuation(&p.label(i), &p.label(j)).unwrap()
                );
            }
        }
        let labels = p.labels();
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted, labels);
        assert!(BinaryPointSet::new(0).is_err());
    }

    #[test]
    fn sequential_depth_one_and_three() {
        let s = ShrinkingSequence::geometric(1.0, 0.5, 4).unwrap();
        let one = sequential_metric(&s, 1).unwrap();
        assert_eq!(one.len(), 2);
        assert_eq!(one.d(0, 1), 1.0);

        let three = sequential_metric(&s, 3).unwrap();
        let mut values: Vec<f64> = three.pair_distances().collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        assert_eq!(values, vec![0.25, 0.5, 1.0]);
        validate(
            three.labels().to_vec(),
            three.to_matrix(),
            Flavor::Ultrametric,
            0.0,
        )
        .unwrap();
        assert!(sequential_metric(&s, 5).is_err());
    }

    #[test]
    fn every_level_is_realized_from_every_point() {
        let s = ShrinkingSequence::new(vec![1.0, 0.7, 0.3, 0.2, 0.05]).unwrap();
        let sp = sequential_metric(&s, 5).unwrap();
        for x in 0..sp.len() {
            for k in 0..5 {
                assert!((0..sp.len()).any(|y| sp.d(x, y) == s.get(k)));
            }
        }
    }

    #[test]
    fn shift_examples() {
        let s = ShrinkingSequence::geometric(1.0, 0.5, 4).unwrap();
        assert_eq!(shift(&s, 0).unwrap(), s);
        let t = shift(&s, 2).unwrap();
        assert_eq!(t.values(), &[0.25, 0.125]);
        let env = t.envelope().unwrap();
        assert_eq!(env.a, 0.5);
        assert_eq!(env.m, 4.0);
        assert!(matches!(shift(&s, 4), Err(Error::ShiftTooLarge { .. })));
    }

    #[test]
    fn shifted_geometric_keeps_ratio() {
        for &a in &[0.3, 0.5, 0.7] {
            let s = ShrinkingSequence::geometric(1.0, a, 10).unwrap();
            for m in 0..10 {
                let t = shift(&s, m).unwrap();
                assert_eq!(t.envelope().unwrap().a, a);
                assert_eq!(t.get(0), s.get(m));
            }
        }
    }

    #[test]
    fn envelope_is_enforced() {
        let env = Envelope::new(0.5, 1.0).unwrap();
        assert!(ShrinkingSequence::with_envelope(vec![1.0, 0.5, 0.2], env).is_err());
        assert!(ShrinkingSequence::new(vec![1.0, 1.0]).is_err());
        assert!(ShrinkingSequence::new(vec![1.0, -0.5]).is_err());
    }

    #[test]
    fn euclidean_cantor_basics() {
        let one = euclidean_cantor_metric(1, 3.0).unwrap();
        assert!((one.d(0, 1) - 2.0).abs() < 1e-15);
        for depth in 1..=6 {
            let sp = euclidean_cantor_metric(depth, 2.0).unwrap();
            let expected = 2.0 * (1.0 - 3f64.powi(-(depth as i32)));
            assert!((sp.diameter() - expected).abs() < 1e-12);
            assert_eq!(sp.flavor(), Flavor::Metric);
        }
    }

    #[test]
    fn window_examples() {
        let g = RangeSet::geometric(1.0, 0.5).unwrap();
        assert!(is_exponential_window(&g, 0.5, 1.0, 30).unwrap().holds);

        let de = RangeSet::double_exponential(0.5).unwrap();
        let check = is_exponential_window(&de, 0.5, 2.0, 6).unwrap();
        assert!(!check.holds);
        assert_eq!(check.first_failure, Some(6));
        assert_eq!(check.witnesses.len(), 6);

        let finite = RangeSet::explicit(vec![0.0, 1.0, 0.5]).unwrap();
        let check = is_exponential_window(&finite, 0.5, 1.0, 10).unwrap();
        assert_eq!(check.first_failure, Some(2));
    }

    #[test]
    fn exponential_sequence_collapses_for_unit_m() {
        let g = RangeSet::geometric(1.0, 0.5).unwrap();
        let s = exponential_sequence(&g, 0.5, 1.0, 8).unwrap();
        let expected: Vec<f64> = (0..8).map(|n| 0.5f64.powi(n)).collect();
        assert_eq!(s.values(), expected.as_slice());
        assert_eq!(s.envelope().unwrap().a, 0.5);
    }

    #[test]
    fn fractional_exponent_windows_can_miss() {
        // 2p + 1 is about 1.34 here: the literal a = b^(2p + 1) has a window
        // between consecutive powers of b, the integer exponent does not.
        let (b, m) = (0.324f64, 1.2144f64);
        let g = RangeSet::geometric(1.0, b).unwrap();
        let p = -m.ln() / b.ln();
        let literal = b.powf(2.0 * p + 1.0);
        let misses = (0..8).any(|n| {
            let (lo, hi) = exponential_window(literal, m, n);
            g.least_geq(lo) > hi
        });
        assert!(misses);
        assert_eq!(decay_for(b, m).unwrap(), b * b);
        let s = exponential_sequence(&g, b, m, 8).unwrap();
        for (n, &v) in s.values().iter().enumerate() {
            let (lo, hi) = exponential_window(b * b, m, n);
            assert!(lo <= v && v <= hi);
        }
    }

    #[test]
    fn exponential_sequence_with_m_two() {
        assert_eq!(decay_for(0.5, 2.0).unwrap(), 0.125);
        assert_eq!(decay_for(0.5, 1.0).unwrap(), 0.5);
        let a = 0.125f64;
        for n in 0..=20 {
            assert!(2.0 * a.powi(n + 1) < a.powi(n) / 2.0);
        }
        let g = RangeSet::geometric(1.0, 0.5).unwrap();
        let s = exponential_sequence(&g, 0.5, 2.0, 10).unwrap();
        let env = s.envelope().unwrap();
        for (n, &v) in s.values().iter().enumerate() {
            let (lo, hi) = env.window(n);
            assert!(lo <= v && v <= hi);
            assert!(g.contains(v));
        }
    }

    #[test]
    fn exponential_sequence_reports_window_miss() {
        let de = RangeSet::double_exponential(0.5).unwrap();
        assert!(matches!(
            exponential_sequence(&de, 0.5, 2.0, 10),
            Err(Error::WindowMiss { n: 6, .. })
        ));
    }

    #[test]
    fn obstruction_examples() {
        let g = RangeSet::geometric(1.0, 0.5).unwrap();
        assert_eq!(up_obstruction(&g, 0.5, 50).unwrap(), None);

        let two = RangeSet::explicit(vec![0.0, 1.0]).unwrap();
        assert_eq!(up_obstruction(&two, 0.5, 10).unwrap(), Some(2));

        let de = RangeSet::double_exponential(0.5).unwrap();
        assert_eq!(up_obstruction(&de, 0.5, 10).unwrap(), Some(6));
        assert_eq!(up_obstructions(&de, 0.7, 6).unwrap(), vec![0, 5, 6]);
    }

    #[test]
    fn depth_for_counts() {
        assert_eq!(depth_for(1), 1);
        assert_eq!(depth_for(2), 1);
        assert_eq!(depth_for(3), 2);
        assert_eq!(depth_for(4), 2);
        assert_eq!(depth_for(5), 3);
        assert_eq!(depth_for(64), 6);
        assert_eq!(depth_for(65), 7);
    }
}
