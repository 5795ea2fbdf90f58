//! Symmetric banded matrices and their Cholesky factorization.

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum BandedError {
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("right-hand side has length {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
}

/// Symmetric matrix with `a_ij = 0` for `|i − j| > bandwidth`; only the lower
/// band is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBanded {
    n: usize,
    bw: usize,
    // row-major: entry (i, i - d) at i * (bw + 1) + d
    band: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self { n, bw: bandwidth, band: vec![0.0; n * (bandwidth + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let d = i - j;
        if d > self.bw {
            0.0
        } else {
            self.band[i * (self.bw + 1) + d]
        }
    }

    /// Adds `v` to entry `(i, j)` (and implicitly `(j, i)`). `i ≥ j` required.
    pub fn add_lower(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i >= j && i - j <= self.bw);
        self.band[i * (self.bw + 1) + (i - j)] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.bw);
                let hi = (i + self.bw).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.matvec(&vec![1.0; self.n])
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn cholesky(&self) -> Result<BandedCholesky, BandedError> {
        let (n, bw) = (self.n, self.bw);
        let mut l = vec![0.0; n * (bw + 1)];
        let at = |i: usize, d: usize| i * (bw + 1) + d;
        for i in 0..n {
            for j in i.saturating_sub(bw)..=i {
                let mut s = self.get(i, j);
                for m in i.saturating_sub(bw).max(j.saturating_sub(bw))..j {
                    s -= l[at(i, i - m)] * l[at(j, j - m)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(BandedError::NotPositiveDefinite { row: i, pivot: s });
                    }
                    l[at(i, 0)] = s.sqrt();
                } else {
                    l[at(i, i - j)] = s / l[at(j, 0)];
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }
}

/// Lower-triangular banded factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    fn at(&self, i: usize, d: usize) -> f64 {
        self.l[i * (self.bw + 1) + d]
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, BandedError> {
        if b.len() != self.n {
            return Err(BandedError::DimensionMismatch { got: b.len(), expected: self.n });
        }
        let mut y = b.to_vec();
        for i in 0..self.n {
            let mut s = y[i];
            for j in i.saturating_sub(self.bw)..i {
                s -= self.at(i, i - j) * y[j];
            }
            y[i] = s / self.at(i, 0);
        }
        for i in (0..self.n).rev() {
            let mut s = y[i];
            for j in i + 1..=(i + self.bw).min(self.n - 1) {
                s -= self.at(j, j - i) * y[j];
            }
            y[i] = s / self.at(i, 0);
        }
        Ok(y)
    }

    /// max/min ratio of the factor's diagonal.
    pub fn condition_proxy(&self) -> f64 {
        let diag: Vec<f64> = (0..self.n).map(|i| self.at(i, 0)).collect();
        let max = diag.iter().copied().fold(0.0, f64::max);
        let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }
}
