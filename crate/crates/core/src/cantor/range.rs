//! Range sets: subsets of `[0, inf)` containing `0`, in three closed-world
//! families that admit exact "least element >= x" queries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A subset `S` of `[0, inf)` with `0 in S`.
///
/// * `Explicit`: a finite sorted list.
/// * `Geometric`: `{0} ∪ {scale * ratio^n : n ∈ Z}` with `ratio ∈ (0, 1)`.
/// * `DoubleExponential`: `{0} ∪ {base^(2^n) : n >= 0}` with `base ∈ (0, 1)`.
///
/// Members of the parametric families are always produced by the same
/// arithmetic (`powi` for geometric, repeated squaring for double
/// exponential), so membership is exact for values that came out of this
/// type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "RawRangeSet")]
pub enum RangeSet {
    Explicit { values: Vec<f64> },
    Geometric { scale: f64, ratio: f64 },
    DoubleExponential { base: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawRangeSet {
    Explicit { values: Vec<f64> },
    Geometric { scale: f64, ratio: f64 },
    DoubleExponential { base: f64 },
}

impl TryFrom<RawRangeSet> for RangeSet {
    type Error = Error;

    fn try_from(raw: RawRangeSet) -> Result<Self> {
        match raw {
            RawRangeSet::Explicit { values } => RangeSet::explicit(values),
            RawRangeSet::Geometric { scale, ratio } => RangeSet::geometric(scale, ratio),
            RawRangeSet::DoubleExponential { base } => RangeSet::double_exponential(base),
        }
    }
}

// Geometric exponents are clamped here; beyond it every f64 ratio^n is 0 or inf.
const EXPONENT_LIMIT: i32 = 1 << 16;

impl RangeSet {
    pub fn explicit(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidRangeSet(
                "explicit values must be finite and nonnegative".into(),
            ));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        if values.first() != Some(&0.0) {
            return Err(Error::InvalidRangeSet("0 must belong to the set".into()));
        }
        Ok(RangeSet::Explicit { values })
    }

    pub fn geometric(scale: f64, ratio: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) || !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidRangeSet(format!(
                "geometric needs scale > 0 and ratio in (0, 1), got {scale}, {ratio}"
            )));
        }
        Ok(RangeSet::Geometric { scale, ratio })
    }

    pub fn double_exponential(base: f64) -> Result<Self> {
        if !(base > 0.0 && base < 1.0) {
            return Err(Error::InvalidRangeSet(format!(
                "double exponential base must lie in (0, 1), got {base}"
            )));
        }
        Ok(RangeSet::DoubleExponential { base })
    }

    /// `scale * ratio^n` for the geometric family.
    pub fn geometric_member(scale: f64, ratio: f64, n: i32) -> f64 {
        scale * ratio.powi(n)
    }

    /// Positive members `base, base^2, base^4, ...` until underflow.
    pub fn double_exponential_members(base: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut v = base;
        while v > 0.0 {
            out.push(v);
            v *= v;
        }
        out
    }

    /// Smallest element of `S ⊔ {inf}` that is `>= x`.
    pub fn least_geq(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x.is_infinite() {
            return f64::INFINITY;
        }
        match self {
            RangeSet::Explicit { values } => {
                let idx = values.partition_point(|&v| v < x);
                values.get(idx).copied().unwrap_or(f64::INFINITY)
            }
            &RangeSet::Geometric { scale, ratio } => {
                let member = |n: i32| Self::geometric_member(scale, ratio, n);
                // members decrease in n; look for the largest n with member(n) >= x
                let guess = ((x / scale).ln() / ratio.ln()).floor();
                let mut n = guess.clamp(-EXPONENT_LIMIT as f64, EXPONENT_LIMIT as f64) as i32;
                while member(n) < x && n > -EXPONENT_LIMIT {
                    n -= 1;
                }
                while n < EXPONENT_LIMIT && member(n + 1) >= x {
                    n += 1;
                }
                let v = member(n);
                if v >= x {
                    v
                } else {
                    f64::INFINITY
                }
            }
            &RangeSet::DoubleExponential { base } => Self::double_exponential_members(base)
                .into_iter()
                .rev()
                .find(|&v| v >= x)
                .unwrap_or(f64::INFINITY),
        }
    }

    /// Largest element of `S` that is `<= x` (`0` at worst).
    pub fn greatest_leq(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            RangeSet::Explicit { values } => {
                let idx = values.partition_point(|&v| v <= x);
                values[idx - 1]
            }
            &RangeSet::Geometric { scale, ratio } => {
                if x.is_infinite() {
                    return f64::INFINITY;
                }
                let member = |n: i32| Self::geometric_member(scale, ratio, n);
                let guess = ((x / scale).ln() / ratio.ln()).ceil();
                let mut n = guess.clamp(-EXPONENT_LIMIT as f64, EXPONENT_LIMIT as f64) as i32;
                while member(n) > x && n < EXPONENT_LIMIT {
                    n += 1;
                }
                while n > -EXPONENT_LIMIT && member(n - 1) <= x {
                    n -= 1;
                }
                let v = member(n);
                if v <= x {
                    v
                } else {
                    0.0
                }
            }
            &RangeSet::DoubleExponential { base } => Self::double_exponential_members(base)
                .into_iter()
                .find(|&v| v <= x)
                .unwrap_or(0.0),
        }
    }

    /// Largest element of `S` strictly below `x`.
    pub fn next_below(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let g = self.greatest_leq(x);
        if g < x {
            return g;
        }
        // g == x: step one member down
        match self {
            RangeSet::Explicit { values } => {
                let idx = values.partition_point(|&v| v < x);
                if idx == 0 {
                    0.0
                } else {
                    values[idx - 1]
                }
            }
            RangeSet::Geometric { .. } => self.greatest_leq(prev_float(x)),
            RangeSet::DoubleExponential { .. } => self.greatest_leq(prev_float(x)),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= 0.0 && self.least_geq(x) == x
    }

    /// The member within relative distance `tolerance` of `x`, if any.
    pub fn snap(&self, x: f64, tolerance: f64) -> Option<f64> {
        if x == 0.0 {
            return Some(0.0);
        }
        if !(x > 0.0) || x.is_infinite() {
            return None;
        }
        if self.contains(x) {
            return Some(x);
        }
        let lo = x * (1.0 - tolerance);
        let v = self.least_geq(lo);
        (v.is_finite() && v <= x * (1.0 + tolerance)).then_some(v)
    }

    /// Positive members in `[lo, hi]`, largest first, at most `limit` of them.
    pub fn members_between(&self, lo: f64, hi: f64, limit: usize) -> Vec<f64> {
        let mut out = Vec::new();
        let mut v = self.greatest_leq(hi);
        while v > 0.0 && v >= lo && out.len() < limit {
            out.push(v);
            v = self.next_below(v);
        }
        out
    }
}

fn prev_float(x: f64) -> f64 {
    debug_assert!(x > 0.0 && x.is_finite());
    f64::from_bits(x.to_bits() - 1)
}
