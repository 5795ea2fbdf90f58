//! Normalized B-spline bases of order `k` over a partition of `[0, 1]`.
//!
//! The extended knot sequence carries multiplicity `k` at both ends and
//! multiplicity one at every interior breakpoint, so the span is the space of
//! `C^{k−2}` functions that are polynomials of order `k` on each atom.
//! B-spline `i` is supported on `E_i = [τ_i, τ_{i+k}]`; on atom `μ` the
//! nonzero functions are `μ, …, μ + k − 1`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::banded::SymBanded;
use crate::intervals::IntervalUnion;
use crate::partition::{is_refinement, Partition};
use crate::piecewise::{PiecewiseError, PiecewisePolynomial};
use crate::poly;
use crate::quadrature::{self, QuadOptions};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum BSplineError {
    #[error("spline order must be at least 1")]
    InvalidOrder,

    #[error("target partition does not refine the spline's partition")]
    NotARefinement,

    #[error("expected {expected} coefficients, got {got}")]
    CoefficientLength { expected: usize, got: usize },

    #[error("splines live on different bases")]
    BasisMismatch,

    #[error(transparent)]
    Piecewise(#[from] PiecewiseError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawBasis", into = "RawBasis")]
pub struct BSplineBasis {
    k: usize,
    partition: Partition,
    knots: Vec<f64>,
    // per atom: the k nonzero B-splines as polynomials in the local variable
    local: Vec<Vec<Vec<f64>>>,
}

impl PartialEq for BSplineBasis {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && self.partition == other.partition
    }
}

#[derive(Serialize, Deserialize)]
struct RawBasis {
    k: usize,
    breakpoints: Partition,
}

impl TryFrom<RawBasis> for BSplineBasis {
    type Error = BSplineError;

    fn try_from(r: RawBasis) -> Result<Self, Self::Error> {
        BSplineBasis::new(r.breakpoints, r.k)
    }
}

impl From<BSplineBasis> for RawBasis {
    fn from(b: BSplineBasis) -> Self {
        RawBasis { k: b.k, breakpoints: b.partition }
    }
}

fn extended_knots(p: &Partition, k: usize) -> Vec<f64> {
    let bps = p.breakpoints();
    let mut knots = Vec::with_capacity(bps.len() + 2 * k - 2);
    knots.extend(std::iter::repeat_n(0.0, k - 1));
    knots.extend_from_slice(bps);
    knots.extend(std::iter::repeat_n(1.0, k - 1));
    knots
}

/// de Boor–Cox triangle on span `s` at the point `x`.
fn basis_funs(knots: &[f64], k: usize, s: usize, x: f64) -> Vec<f64> {
    let p = k - 1;
    let mut n = vec![0.0; k];
    let mut left = vec![0.0; k];
    let mut right = vec![0.0; k];
    n[0] = 1.0;
    for j in 1..=p {
        left[j] = x - knots[s + 1 - j];
        right[j] = knots[s + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = n[r] / (right[r + 1] + left[j - r]);
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    n
}

/// The same triangle carried out on polynomials in `u`, where `x = m + h·u`.
fn local_basis_polys(knots: &[f64], k: usize, s: usize, m: f64, h: f64) -> Vec<Vec<f64>> {
    let p = k - 1;
    let mut n: Vec<Vec<f64>> = vec![vec![0.0]; k];
    n[0] = vec![1.0];
    let mut left = vec![vec![0.0]; k];
    let mut right = vec![vec![0.0]; k];
    for j in 1..=p {
        left[j] = vec![m - knots[s + 1 - j], h];
        right[j] = vec![knots[s + j] - m, -h];
        let mut saved = vec![0.0];
        for r in 0..j {
            let denom = knots[s + r + 1] - knots[s + 1 + r - j];
            let temp = poly::scale(&n[r], 1.0 / denom);
            n[r] = poly::add(&saved, &poly::mul(&right[r + 1], &temp));
            saved = poly::mul(&left[j - r], &temp);
        }
        n[j] = saved;
    }
    n.into_iter().map(|mut c| {
        c.resize(k, 0.0);
        c
    })
    .collect()
}

impl BSplineBasis {
    pub fn new(partition: Partition, k: usize) -> Result<Self, BSplineError> {
        if k == 0 {
            return Err(BSplineError::InvalidOrder);
        }
        let knots = extended_knots(&partition, k);
        let local = partition
            .atoms()
            .iter()
            .enumerate()
            .map(|(mu, &(a, b))| local_basis_polys(&knots, k, mu + k - 1, 0.5 * (a + b), 0.5 * (b - a)))
            .collect();
        Ok(Self { k, partition, knots, local })
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// `#atoms + k − 1`.
    pub fn dim(&self) -> usize {
        self.partition.num_atoms() + self.k - 1
    }

    pub fn support(&self, i: usize) -> (f64, f64) {
        (self.knots[i], self.knots[i + self.k])
    }

    pub fn supports(&self) -> Vec<(f64, f64)> {
        (0..self.dim()).map(|i| self.support(i)).collect()
    }

    pub fn support_len(&self, i: usize) -> f64 {
        let (a, b) = self.support(i);
        b - a
    }

    /// Atoms contained in `E_i`.
    pub fn atoms_in_support(&self, i: usize) -> std::ops::RangeInclusive<usize> {
        let m = self.partition.num_atoms();
        (i + 1).saturating_sub(self.k)..=i.min(m - 1)
    }

    /// Leftmost atom of maximal length inside `E_i`.
    pub fn max_atom_in_support(&self, i: usize) -> usize {
        let mut best = *self.atoms_in_support(i).start();
        for mu in self.atoms_in_support(i) {
            if self.partition.atom_len(mu) > self.partition.atom_len(best) {
                best = mu;
            }
        }
        best
    }

    /// Smallest interval containing `E_i ∪ E_j`.
    pub fn hull(&self, i: usize, j: usize) -> (f64, f64) {
        let (a, b) = self.support(i.min(j));
        let (c, d) = self.support(i.max(j));
        (a.min(c), b.max(d))
    }

    /// Index of the first nonzero function at `x` and the `k` values there.
    pub fn eval_nonzero(&self, x: f64) -> (usize, Vec<f64>) {
        let mu = self.partition.locate(x);
        (mu, basis_funs(&self.knots, self.k, mu + self.k - 1, x))
    }

    /// The nonzero B-splines on atom `mu` as local polynomials.
    pub fn local_polys(&self, mu: usize) -> &[Vec<f64>] {
        &self.local[mu]
    }

    /// Value of `N_i(x)`.
    pub fn eval_one(&self, i: usize, x: f64) -> f64 {
        let (first, vals) = self.eval_nonzero(x);
        if i >= first && i < first + self.k {
            vals[i - first]
        } else {
            0.0
        }
    }

    /// `N_i` as a piecewise polynomial on the basis partition.
    pub fn basis_function(&self, i: usize) -> PiecewisePolynomial {
        let mut coeffs = vec![0.0; self.dim()];
        coeffs[i] = 1.0;
        self.combine(&coeffs)
    }

    fn combine(&self, coeffs: &[f64]) -> PiecewisePolynomial {
        let pieces = (0..self.partition.num_atoms())
            .map(|mu| {
                let mut acc = vec![0.0; self.k];
                for (a, basis) in self.local[mu].iter().enumerate() {
                    let c = coeffs[mu + a];
                    for (t, &b) in acc.iter_mut().zip(basis) {
                        *t += c * b;
                    }
                }
                acc
            })
            .collect();
        PiecewisePolynomial::from_parts(self.partition.clone(), pieces)
    }

    /// Gram matrix `G_ij = ∫ N_i N_j`, bandwidth `k − 1`, by `k`-point
    /// Gauss–Legendre per atom.
    pub fn gram(&self) -> SymBanded {
        let mut g = SymBanded::zeros(self.dim(), self.k - 1);
        let rule = quadrature::gauss_legendre(self.k);
        for mu in 0..self.partition.num_atoms() {
            let h = 0.5 * self.partition.atom_len(mu);
            for &(u, w) in rule {
                let vals: Vec<f64> = self.local[mu].iter().map(|c| poly::eval(c, u)).collect();
                for a in 0..self.k {
                    for b in 0..=a {
                        g.add_lower(mu + a, mu + b, w * h * vals[a] * vals[b]);
                    }
                }
            }
        }
        g
    }

    /// `⟨f, N_i⟩` for all `i`, exact for piecewise polynomial `f`.
    pub fn moments(&self, f: &PiecewisePolynomial) -> Vec<f64> {
        let grid = f.grid().common_refinement(&self.partition);
        let fr = f.refine_to(&grid);
        let mut out = vec![0.0; self.dim()];
        for (c, &(a, b)) in grid.atoms().iter().enumerate() {
            let piece = &fr.pieces()[c];
            let mu = self.partition.locate(0.5 * (a + b));
            let (ma, mb) = self.partition.atom(mu);
            let (mm, mh) = (0.5 * (ma + mb), 0.5 * (mb - ma));
            let n = quadrature::nodes_for_degree(piece.len() - 1 + self.k - 1);
            let h = 0.5 * (b - a);
            for &(v, w) in quadrature::gauss_legendre(n) {
                let x = 0.5 * (a + b) + h * v;
                let fv = poly::eval(piece, v);
                let u = (x - mm) / mh;
                for (i, basis) in self.local[mu].iter().enumerate() {
                    out[mu + i] += w * h * fv * poly::eval(basis, u);
                }
            }
        }
        out
    }
}

/// Builds the order-`k` basis over `p`.
pub fn build_basis(p: &Partition, k: usize) -> Result<BSplineBasis, BSplineError> {
    BSplineBasis::new(p.clone(), k)
}

/// `max_i max(|E_i|/|E_{i+1}|, |E_{i+1}|/|E_i|)`, or 1 with a single B-spline.
pub fn gamma_k(p: &Partition, k: usize) -> f64 {
    let m = p.num_atoms();
    let bps = p.breakpoints();
    // E_i = [t_{max(i−k+1,0)}, t_{min(i+1,m)}] in breakpoint indices
    let len = |i: usize| bps[(i + 1).min(m)] - bps[(i + 1).saturating_sub(k)];
    let dim = m + k - 1;
    (0..dim.saturating_sub(1))
        .map(|i| {
            let (a, b) = (len(i), len(i + 1));
            (a / b).max(b / a)
        })
        .fold(1.0, f64::max)
}

/// A spline: a coefficient vector in a B-spline basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpline", into = "RawSpline")]
pub struct Spline {
    basis: Arc<BSplineBasis>,
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSpline {
    basis: BSplineBasis,
    coeffs: Vec<f64>,
}

impl TryFrom<RawSpline> for Spline {
    type Error = BSplineError;

    fn try_from(r: RawSpline) -> Result<Self, Self::Error> {
        Spline::new(Arc::new(r.basis), r.coeffs)
    }
}

impl From<Spline> for RawSpline {
    fn from(s: Spline) -> Self {
        RawSpline { basis: (*s.basis).clone(), coeffs: s.coeffs }
    }
}

impl Spline {
    pub fn new(basis: Arc<BSplineBasis>, coeffs: Vec<f64>) -> Result<Self, BSplineError> {
        if coeffs.len() != basis.dim() {
            return Err(BSplineError::CoefficientLength { expected: basis.dim(), got: coeffs.len() });
        }
        Ok(Self { basis, coeffs })
    }

    pub fn zero(basis: Arc<BSplineBasis>) -> Self {
        let n = basis.dim();
        Self { basis, coeffs: vec![0.0; n] }
    }

    pub fn basis(&self) -> &Arc<BSplineBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (first, vals) = self.basis.eval_nonzero(x);
        vals.iter().zip(&self.coeffs[first..]).map(|(v, c)| v * c).sum()
    }

    pub fn to_piecewise(&self) -> PiecewisePolynomial {
        self.basis.combine(&self.coeffs)
    }

    pub fn scale(&self, s: f64) -> Spline {
        Spline { basis: self.basis.clone(), coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Coefficient-wise `self + s·other` on the same basis.
    pub fn axpy(&self, s: f64, other: &Spline) -> Result<Spline, BSplineError> {
        if *self.basis != *other.basis {
            return Err(BSplineError::BasisMismatch);
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + s * b).collect();
        Ok(Spline { basis: self.basis.clone(), coeffs })
    }

    /// Max-abs coefficient difference on the same basis.
    pub fn coeff_distance(&self, other: &Spline) -> Result<f64, BSplineError> {
        if *self.basis != *other.basis {
            return Err(BSplineError::BasisMismatch);
        }
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}

/// Boehm insertion of the single knot `t` (interior, not yet a knot).
fn insert_knot(knots: &mut Vec<f64>, coeffs: &mut Vec<f64>, k: usize, t: f64) {
    let p = k - 1;
    // span s with knots[s] <= t < knots[s+1]
    let s = knots.partition_point(|&x| x <= t) - 1;
    let n = coeffs.len();
    let mut q = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let v = if i + p <= s {
            coeffs[i]
        } else if i <= s {
            let alpha = (t - knots[i]) / (knots[i + p] - knots[i]);
            alpha * coeffs[i] + (1.0 - alpha) * coeffs[i - 1]
        } else {
            coeffs[i - 1]
        };
        q.push(v);
    }
    knots.insert(s + 1, t);
    *coeffs = q;
}

/// Re-expresses `s` in the order-`k` basis over `fine` by inserting the new
/// breakpoints one at a time.
pub fn refine_coeffs(s: &Spline, fine: &Partition) -> Result<Spline, BSplineError> {
    refine_coeffs_into(s, &Arc::new(BSplineBasis::new(fine.clone(), s.basis.k)?))
}

/// As [`refine_coeffs`] with a prebuilt target basis.
pub fn refine_coeffs_into(s: &Spline, target: &Arc<BSplineBasis>) -> Result<Spline, BSplineError> {
    if target.k != s.basis.k || !is_refinement(&target.partition, &s.basis.partition) {
        return Err(BSplineError::NotARefinement);
    }
    if target.partition == s.basis.partition {
        return Ok(Spline { basis: target.clone(), coeffs: s.coeffs.clone() });
    }
    let mut knots = s.basis.knots.clone();
    let mut coeffs = s.coeffs.clone();
    let coarse = s.basis.partition.breakpoints();
    let mut j = 0;
    for &t in target.partition.breakpoints() {
        while j < coarse.len() && coarse[j] < t {
            j += 1;
        }
        if j < coarse.len() && coarse[j] == t {
            continue;
        }
        insert_knot(&mut knots, &mut coeffs, s.basis.k, t);
    }
    debug_assert_eq!(knots, target.knots);
    Spline::new(target.clone(), coeffs)
}

/// Ratios quantifying local and global B-spline stability of one spline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// `max_j |a_j| |J_j|^{1/p} / ‖g‖_{L_p(J_j)}`
    pub local_ratio: f64,
    /// `‖g‖_p / ‖(a_j |E_j|^{1/p})‖_{ℓ_p}`
    pub global_ratio: f64,
    pub global_ratio_inv: f64,
}

fn inv_p_power(len: f64, p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else {
        len.powf(1.0 / p)
    }
}

pub fn stability_check(s: &Spline, p: f64) -> Result<StabilityReport, BSplineError> {
    let g = s.to_piecewise();
    let opts = QuadOptions::default();
    let basis = &s.basis;
    let mut local_ratio: f64 = 0.0;
    for (j, &a) in s.coeffs.iter().enumerate() {
        let mu = basis.max_atom_in_support(j);
        let (lo, hi) = basis.partition.atom(mu);
        let num = a.abs() * inv_p_power(hi - lo, p);
        let den = g.lp_norm_on(p, lo, hi, opts)?;
        if num > 0.0 {
            local_ratio = local_ratio.max(num / den);
        }
    }
    let seq: Vec<f64> = s
        .coeffs
        .iter()
        .enumerate()
        .map(|(j, a)| a.abs() * inv_p_power(basis.support_len(j), p))
        .collect();
    let lp_seq = if p.is_infinite() {
        seq.iter().copied().fold(0.0, f64::max)
    } else {
        seq.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p)
    };
    let norm = g.lp_norm_with(p, opts)?;
    let (global_ratio, global_ratio_inv) = if lp_seq == 0.0 && norm == 0.0 {
        (1.0, 1.0)
    } else {
        (norm / lp_seq, lp_seq / norm)
    };
    Ok(StabilityReport { local_ratio, global_ratio, global_ratio_inv })
}

/// `‖g‖_{L∞(A)} / max_{j : |E_j ∩ A| > 0} ‖g‖_{L∞(J_j)}` for a finite union `A`.
pub fn stab_estimate_ratio(s: &Spline, a: &IntervalUnion) -> f64 {
    let g = s.to_piecewise();
    let basis = &s.basis;
    let num = a.parts().iter().map(|&(lo, hi)| g.sup_norm_on(lo, hi)).fold(0.0, f64::max);
    let mut den: f64 = 0.0;
    for j in 0..basis.dim() {
        let (lo, hi) = basis.support(j);
        if a.intersect_interval(lo, hi).measure() > 0.0 {
            let (alo, ahi) = basis.partition.atom(basis.max_atom_in_support(j));
            den = den.max(g.sup_norm_on(alo, ahi));
        }
    }
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}
