//! P-value vectors, rejection sets and the `alpha * r / m` threshold grid.

use std::fmt;
use std::ops::Deref;

use crate::error::{Error, Result};

/// A validated vector of p-values, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PValues(Vec<f64>);

impl PValues {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("p-value vector must be non-empty"));
        }
        for (index, &value) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidPValue { index, value });
            }
        }
        Ok(PValues(values))
    }

    /// Skips validation. Callers must guarantee every value lies in `[0, 1]`.
    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
        PValues(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Returns `1^A p`: a copy with the entries in `a` set to one.
    pub fn masked<I: IntoIterator<Item = usize>>(&self, a: I) -> PValues {
        let mut v = self.0.clone();
        for i in a {
            v[i] = 1.0;
        }
        PValues(v)
    }
}

impl Deref for PValues {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for PValues {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        PValues::new(v)
    }
}

/// `1^A p` as a free function.
pub fn mask<I: IntoIterator<Item = usize>>(p: &PValues, a: I) -> PValues {
    p.masked(a)
}

/// A sorted set of rejected hypotheses (0-based indices).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct RejectionSet(Vec<usize>);

impl RejectionSet {
    pub fn empty() -> Self {
        RejectionSet(Vec::new())
    }

    /// Builds a set from arbitrary indices, sorting and deduplicating.
    pub fn from_indices(mut v: Vec<usize>) -> Self {
        v.sort_unstable();
        v.dedup();
        RejectionSet(v)
    }

    pub(crate) fn from_sorted(v: Vec<usize>) -> Self {
        debug_assert!(v.windows(2).all(|w| w[0] < w[1]));
        RejectionSet(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn is_subset(&self, other: &RejectionSet) -> bool {
        self.iter().all(|i| other.contains(i))
    }

    pub fn union(&self, other: &RejectionSet) -> RejectionSet {
        let mut v = Vec::with_capacity(self.len() + other.len());
        let (a, b) = (&self.0, &other.0);
        let (mut x, mut y) = (0, 0);
        while x < a.len() && y < b.len() {
            match a[x].cmp(&b[y]) {
                std::cmp::Ordering::Less => {
                    v.push(a[x]);
                    x += 1;
                }
                std::cmp::Ordering::Greater => {
                    v.push(b[y]);
                    y += 1;
                }
                std::cmp::Ordering::Equal => {
                    v.push(a[x]);
                    x += 1;
                    y += 1;
                }
            }
        }
        v.extend_from_slice(&a[x..]);
        v.extend_from_slice(&b[y..]);
        RejectionSet(v)
    }

    pub fn intersection_len(&self, other: &RejectionSet) -> usize {
        self.iter().filter(|&i| other.contains(i)).count()
    }

    /// The members as 1-based ids, for display and file output.
    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }
}

impl fmt::Display for RejectionSet {
    /// Formats as `{1, 2, 3}` using 1-based ids.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (n, i) in self.0.iter().enumerate() {
            if n > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", i + 1)?;
        }
        f.write_str("}")
    }
}

impl FromIterator<usize> for RejectionSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        RejectionSet::from_indices(iter.into_iter().collect())
    }
}

/// Sentinel rank for values that clear no threshold in range.
pub const NO_RANK: u32 = u32::MAX;

/// The threshold grid `alpha * r / m` shared by every step-up procedure.
///
/// All comparisons go through [`Level::threshold`] so that a reduced problem
/// which keeps the original `alpha` and `m` reproduces the same floats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub alpha: f64,
    pub m: usize,
}

impl Level {
    pub fn new(alpha: f64, m: usize) -> Self {
        Level { alpha, m }
    }

    pub fn validate(alpha: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&alpha) || alpha.is_nan() {
            return Err(Error::param(format!(
                "alpha must lie in [0, 1], got {alpha}"
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn threshold(&self, r: usize) -> f64 {
        self.alpha * r as f64 / self.m as f64
    }

    /// Smallest `r` in `1..=cap` with `p <= threshold(r)`, or [`NO_RANK`].
    pub fn rank(&self, p: f64, cap: usize) -> u32 {
        if cap == 0 || p > self.threshold(cap) {
            return NO_RANK;
        }
        let guess = if self.alpha > 0.0 {
            (p * self.m as f64 / self.alpha).ceil()
        } else {
            1.0
        };
        let mut r = if guess.is_finite() {
            (guess.max(1.0) as usize).min(cap)
        } else {
            cap
        };
        while r > 1 && p <= self.threshold(r - 1) {
            r -= 1;
        }
        while p > self.threshold(r) {
            r += 1;
        }
        r as u32
    }
}

/// Harmonic number `H_n` with compensated summation.
pub fn harmonic(n: usize) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for j in (1..=n).rev() {
        let x = 1.0 / j as f64;
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}
