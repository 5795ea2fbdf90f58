//! Finite unions of closed intervals.

use serde::{Deserialize, Serialize};

/// Disjoint, sorted closed intervals. Touching intervals are merged and
/// empty ones dropped on construction.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct IntervalUnion {
    parts: Vec<(f64, f64)>,
}

impl From<Vec<(f64, f64)>> for IntervalUnion {
    fn from(v: Vec<(f64, f64)>) -> Self {
        IntervalUnion::new(v)
    }
}

impl From<IntervalUnion> for Vec<(f64, f64)> {
    fn from(u: IntervalUnion) -> Self {
        u.parts
    }
}

impl IntervalUnion {
    pub fn new(mut parts: Vec<(f64, f64)>) -> Self {
        parts.retain(|&(a, b)| b > a);
        parts.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(parts.len());
        for (a, b) in parts {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        Self { parts: out }
    }

    pub fn empty() -> Self {
        Self { parts: Vec::new() }
    }

    pub fn interval(a: f64, b: f64) -> Self {
        Self::new(vec![(a, b)])
    }

    pub fn parts(&self) -> &[(f64, f64)] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.parts.iter().map(|(a, b)| b - a).sum()
    }

    pub fn union(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut v = self.parts.clone();
        v.extend_from_slice(&other.parts);
        IntervalUnion::new(v)
    }

    pub fn intersect(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.parts.len() && j < other.parts.len() {
            let (a1, b1) = self.parts[i];
            let (a2, b2) = other.parts[j];
            let (lo, hi) = (a1.max(a2), b1.min(b2));
            if hi > lo {
                out.push((lo, hi));
            }
            if b1 < b2 {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalUnion { parts: out }
    }

    pub fn intersect_interval(&self, a: f64, b: f64) -> IntervalUnion {
        self.intersect(&IntervalUnion::interval(a, b))
    }

    /// `self \ other` (closure of the set difference).
    pub fn difference(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut out = Vec::new();
        for &(a, b) in &self.parts {
            let mut cur = a;
            for &(c, d) in &other.parts {
                if d <= cur || c >= b {
                    continue;
                }
                if c > cur {
                    out.push((cur, c));
                }
                cur = cur.max(d);
                if cur >= b {
                    break;
                }
            }
            if cur < b {
                out.push((cur, b));
            }
        }
        IntervalUnion::new(out)
    }

    /// `self ⊆ other` up to uncovered measure `tol`.
    pub fn is_subset_of(&self, other: &IntervalUnion, tol: f64) -> bool {
        self.difference(other).measure() <= tol
    }

    /// Measure of the overlap with `other`.
    pub fn overlap(&self, other: &IntervalUnion) -> f64 {
        self.intersect(other).measure()
    }

    /// The leftmost subset with measure `target`, or `None` if the union is too small.
    pub fn leftmost_subset(&self, target: f64) -> Option<IntervalUnion> {
        let mut rem = target;
        let mut out = Vec::new();
        for &(a, b) in &self.parts {
            if rem <= 0.0 {
                break;
            }
            let len = b - a;
            if len <= rem {
                out.push((a, b));
                rem -= len;
            } else {
                out.push((a, a + rem));
                rem = 0.0;
            }
        }
        if rem > 0.0 {
            return None;
        }
        Some(IntervalUnion::new(out))
    }
}
