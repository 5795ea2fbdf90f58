//! Interval σ-algebras on `[0, 1]` represented by their breakpoints, and
//! nested sequences of them.
//!
//! Atoms are half-open `[t_i, t_{i+1})`, except the last one which is closed
//! at `1`. Breakpoints are stored exactly as they were created and refinement
//! is decided by exact equality of stored values.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default minimum atom length.
pub const DEFAULT_MIN_GAP: f64 = 1e-9;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum PartitionError {
    #[error("a partition needs at least the breakpoints 0 and 1, got {0} values")]
    TooFewBreakpoints(usize),

    #[error("partition must start at 0 and end at 1, got [{first}, {last}]")]
    WrongEndpoints { first: f64, last: f64 },

    #[error("breakpoints must be finite and strictly increasing (index {index}: {prev} then {next})")]
    NotIncreasing { index: usize, prev: f64, next: f64 },

    #[error("atom {index} has length {length:e}, below the minimum {min_gap:e}")]
    AtomTooSmall { index: usize, length: f64, min_gap: f64 },

    #[error("atom index {index} out of range for a partition with {atoms} atoms")]
    IndexOutOfRange { index: usize, atoms: usize },

    #[error("relative split position {0} must lie strictly inside (0, 1)")]
    InvalidSplitPosition(f64),

    #[error("level {level} does not refine level {}", level - 1)]
    NotARefinement { level: usize },

    #[error("level {level} is not an elementary refinement (expected exactly one new breakpoint)")]
    NotElementary { level: usize },

    #[error("a filtration needs at least one level")]
    EmptyFiltration,
}

/// A finite partition of `[0, 1]` into intervals of positive length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Partition {
    breakpoints: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Partition {
    type Error = PartitionError;

    fn try_from(value: Vec<f64>) -> Result<Self, Self::Error> {
        Partition::new(value)
    }
}

impl From<Partition> for Vec<f64> {
    fn from(p: Partition) -> Self {
        p.breakpoints
    }
}

impl Partition {
    /// Validates breakpoints with the default minimum gap.
    pub fn new(breakpoints: Vec<f64>) -> Result<Self, PartitionError> {
        Self::with_min_gap(breakpoints, DEFAULT_MIN_GAP)
    }

    pub fn with_min_gap(breakpoints: Vec<f64>, min_gap: f64) -> Result<Self, PartitionError> {
        if breakpoints.len() < 2 {
            return Err(PartitionError::TooFewBreakpoints(breakpoints.len()));
        }
        let first = breakpoints[0];
        let last = *breakpoints.last().unwrap();
        if first != 0.0 || last != 1.0 {
            return Err(PartitionError::WrongEndpoints { first, last });
        }
        for (index, w) in breakpoints.windows(2).enumerate() {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(PartitionError::NotIncreasing { index, prev: w[0], next: w[1] });
            }
            if w[1] - w[0] < min_gap {
                return Err(PartitionError::AtomTooSmall { index, length: w[1] - w[0], min_gap });
            }
        }
        Ok(Self { breakpoints })
    }

    /// Builds a partition from sorted breakpoints that only need to be strictly
    /// increasing (no minimum gap). Used for common refinements of grids.
    pub(crate) fn from_sorted_unchecked(breakpoints: Vec<f64>) -> Self {
        debug_assert!(breakpoints.len() >= 2);
        debug_assert!(breakpoints.windows(2).all(|w| w[1] > w[0]));
        Self { breakpoints }
    }

    /// The single-atom partition `{0, 1}`.
    pub fn trivial() -> Self {
        Self { breakpoints: vec![0.0, 1.0] }
    }

    /// `m` atoms of equal length.
    pub fn uniform(m: usize) -> Self {
        assert!(m >= 1, "uniform partition needs at least one atom");
        let mut bps: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
        bps[m] = 1.0;
        Self { breakpoints: bps }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn num_atoms(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn atom(&self, i: usize) -> (f64, f64) {
        (self.breakpoints[i], self.breakpoints[i + 1])
    }

    pub fn atom_len(&self, i: usize) -> f64 {
        self.breakpoints[i + 1] - self.breakpoints[i]
    }

    /// The atoms `[t_i, t_{i+1})` in order.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        self.breakpoints.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// Index of the atom containing `x`, using the half-open convention with
    /// the last atom closed at 1. Points outside `[0, 1]` are clamped.
    pub fn locate(&self, x: f64) -> usize {
        let m = self.num_atoms();
        if x <= self.breakpoints[0] {
            return 0;
        }
        if x >= self.breakpoints[m] {
            return m - 1;
        }
        // first breakpoint strictly greater than x
        let idx = self.breakpoints.partition_point(|&t| t <= x);
        idx - 1
    }

    /// True iff every breakpoint of `coarse` occurs in `self`.
    pub fn refines(&self, coarse: &Partition) -> bool {
        is_refinement(self, coarse)
    }

    /// Splits atom `index` at `t_i + rel_pos·(t_{i+1} − t_i)`.
    pub fn split_atom(&self, index: usize, rel_pos: f64) -> Result<Partition, PartitionError> {
        self.split_atom_with_min_gap(index, rel_pos, DEFAULT_MIN_GAP)
    }

    pub fn split_atom_with_min_gap(
        &self,
        index: usize,
        rel_pos: f64,
        min_gap: f64,
    ) -> Result<Partition, PartitionError> {
        let atoms = self.num_atoms();
        if index >= atoms {
            return Err(PartitionError::IndexOutOfRange { index, atoms });
        }
        if !(rel_pos > 0.0 && rel_pos < 1.0) {
            return Err(PartitionError::InvalidSplitPosition(rel_pos));
        }
        let (a, b) = self.atom(index);
        let t = a + rel_pos * (b - a);
        for (i, length) in [(index, t - a), (index + 1, b - t)] {
            if !(length >= min_gap) {
                return Err(PartitionError::AtomTooSmall { index: i, length, min_gap });
            }
        }
        let mut bps = Vec::with_capacity(self.breakpoints.len() + 1);
        bps.extend_from_slice(&self.breakpoints[..=index]);
        bps.push(t);
        bps.extend_from_slice(&self.breakpoints[index + 1..]);
        Ok(Partition { breakpoints: bps })
    }

    /// Union of both breakpoint sets (exact dedup).
    pub fn common_refinement(&self, other: &Partition) -> Partition {
        if self.breakpoints == other.breakpoints {
            return self.clone();
        }
        let (a, b) = (&self.breakpoints, &other.breakpoints);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(&x), Some(&y)) if x == y => {
                    i += 1;
                    j += 1;
                    x
                }
                (Some(&x), Some(&y)) if x < y => {
                    i += 1;
                    x
                }
                (Some(_), Some(&y)) => {
                    j += 1;
                    y
                }
                (Some(&x), None) => {
                    i += 1;
                    x
                }
                (None, Some(&y)) => {
                    j += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            if out.last().is_none_or(|&l| next > l) {
                out.push(next);
            }
        }
        Partition::from_sorted_unchecked(out)
    }
}

/// True iff every breakpoint of `coarse` occurs in `fine` (exact equality).
pub fn is_refinement(fine: &Partition, coarse: &Partition) -> bool {
    let mut j = 0;
    let f = &fine.breakpoints;
    for &t in &coarse.breakpoints {
        while j < f.len() && f[j] < t {
            j += 1;
        }
        if j == f.len() || f[j] != t {
            return false;
        }
    }
    true
}

/// A nested sequence of partitions; `levels[0]` is the coarsest σ-algebra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Partition>", into = "Vec<Partition>")]
pub struct Filtration {
    levels: Vec<Partition>,
    elementary: bool,
}

impl TryFrom<Vec<Partition>> for Filtration {
    type Error = PartitionError;

    fn try_from(levels: Vec<Partition>) -> Result<Self, Self::Error> {
        Filtration::new(levels)
    }
}

impl From<Filtration> for Vec<Partition> {
    fn from(f: Filtration) -> Self {
        f.levels
    }
}

impl Filtration {
    /// Checks nestedness; the elementary flag is derived from the data.
    pub fn new(levels: Vec<Partition>) -> Result<Self, PartitionError> {
        if levels.is_empty() {
            return Err(PartitionError::EmptyFiltration);
        }
        for (n, w) in levels.windows(2).enumerate() {
            if !is_refinement(&w[1], &w[0]) {
                return Err(PartitionError::NotARefinement { level: n + 1 });
            }
        }
        let elementary = levels
            .windows(2)
            .all(|w| w[1].breakpoints.len() == w[0].breakpoints.len() + 1);
        Ok(Self { levels, elementary })
    }

    /// Like [`Filtration::new`] but additionally requires every step to split
    /// exactly one atom.
    pub fn new_elementary(levels: Vec<Partition>) -> Result<Self, PartitionError> {
        let f = Self::new(levels)?;
        if !f.elementary {
            let level = f
                .levels
                .windows(2)
                .position(|w| w[1].breakpoints.len() != w[0].breakpoints.len() + 1)
                .unwrap()
                + 1;
            return Err(PartitionError::NotElementary { level });
        }
        Ok(f)
    }

    /// Repeatedly splits atoms: `splits[i] = (atom_index, rel_pos)` produces level `i + 1`.
    pub fn from_splits(start: Partition, splits: &[(usize, f64)]) -> Result<Self, PartitionError> {
        let mut levels = vec![start];
        for &(idx, rel) in splits {
            let next = levels.last().unwrap().split_atom(idx, rel)?;
            levels.push(next);
        }
        Self::new(levels)
    }

    /// Uniform dyadic filtration with `depth + 1` levels: `2^0, …, 2^depth` atoms.
    pub fn dyadic(depth: usize) -> Self {
        let levels = (0..=depth).map(|d| Partition::uniform(1 << d)).collect();
        Self::new(levels).expect("dyadic partitions are nested")
    }

    pub fn levels(&self) -> &[Partition] {
        &self.levels
    }

    pub fn level(&self, n: usize) -> &Partition {
        &self.levels[n]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn is_elementary(&self) -> bool {
        self.elementary
    }

    pub fn finest(&self) -> &Partition {
        self.levels.last().unwrap()
    }

    /// The first `n` levels.
    pub fn truncated(&self, n: usize) -> Filtration {
        assert!(n >= 1 && n <= self.levels.len());
        Filtration::new(self.levels[..n].to_vec()).unwrap()
    }
}
