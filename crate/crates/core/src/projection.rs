//! Orthogonal projections onto spline spaces, their dual coefficient
//! matrices and martingale spline sequences.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::banded::{BandedCholesky, BandedError, SymBanded};
use crate::bspline::{refine_coeffs_into, BSplineBasis, BSplineError, Spline};
use crate::partition::{is_refinement, Filtration, Partition};
use crate::piecewise::{PiecewiseError, PiecewisePolynomial};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ProjectionError {
    #[error("Gram matrix factorization failed: {0}")]
    SingularGram(#[from] BandedError),

    #[error("partition is not a refinement of the target level")]
    NotARefinement,

    #[error(transparent)]
    BSpline(#[from] BSplineError),

    #[error(transparent)]
    Piecewise(#[from] PiecewiseError),
}

/// Orthogonal `L_2` projection onto the span of a B-spline basis.
#[derive(Debug, Clone)]
pub struct Projector {
    basis: Arc<BSplineBasis>,
    gram: SymBanded,
    chol: BandedCholesky,
}

impl Projector {
    pub fn new(basis: Arc<BSplineBasis>) -> Result<Self, ProjectionError> {
        let gram = basis.gram();
        let chol = gram.cholesky()?;
        Ok(Self { basis, gram, chol })
    }

    pub fn for_partition(p: &Partition, k: usize) -> Result<Self, ProjectionError> {
        Self::new(Arc::new(BSplineBasis::new(p.clone(), k)?))
    }

    pub fn basis(&self) -> &Arc<BSplineBasis> {
        &self.basis
    }

    pub fn gram(&self) -> &SymBanded {
        &self.gram
    }

    pub fn order(&self) -> usize {
        self.basis.order()
    }

    pub fn partition(&self) -> &Partition {
        self.basis.partition()
    }

    /// Solves `G c = (⟨f, N_i⟩)_i`.
    pub fn project(&self, f: &PiecewisePolynomial) -> Result<Spline, ProjectionError> {
        let rhs = self.basis.moments(f);
        let c = self.chol.solve(&rhs)?;
        Ok(Spline::new(self.basis.clone(), c)?)
    }

    pub fn project_spline(&self, s: &Spline) -> Result<Spline, ProjectionError> {
        if s.basis().order() == self.order() && s.basis().partition() == self.partition() {
            return Ok(Spline::new(self.basis.clone(), s.coeffs().to_vec())?);
        }
        self.project(&s.to_piecewise())
    }

    /// `max_i |(G c − b)_i| / max_i |b_i|` for a computed projection `s` of `f`.
    pub fn normal_residual(&self, f: &PiecewisePolynomial, s: &Spline) -> f64 {
        let b = self.basis.moments(f);
        let gc = self.gram.matvec(s.coeffs());
        let scale = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let res = gc.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if scale == 0.0 {
            res
        } else {
            res / scale
        }
    }

    /// `A = G^{-1}` by banded solves against unit vectors.
    pub fn dual_matrix(&self) -> DMatrix<f64> {
        let n = self.basis.dim();
        let mut a = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.chol.solve(&e).expect("dimension matches");
            for (i, v) in col.into_iter().enumerate() {
                a[(i, j)] = v;
            }
            e[j] = 0.0;
        }
        a
    }

    /// Envelope `|a_ij| ≤ C q^{|i−j|} / |E_ij|` fitted to the dual matrix.
    pub fn decay_fit(&self) -> DecayFit {
        decay_fit_of(&self.basis, &self.dual_matrix())
    }

    /// Bounds for `‖P‖_{L_1 → L_1} = sup_t ‖Σ_i N_i(t) R_i‖_1` with
    /// `R_i = Σ_j a_ij N_j`.
    pub fn l1_opnorm(&self) -> Result<L1OpNorm, ProjectionError> {
        l1_opnorm_of(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `max_i |a_ii| |E_i|`
    pub c0: f64,
    pub q_hat: f64,
    /// `q_hat < 1`
    pub geometric: bool,
    /// `max_{|i−j| = d} |a_ij| |E_ij|` for `d = 0, 1, …`
    pub profile: Vec<f64>,
    /// `min_{ij} (C₀ q̂^{|i−j|} − |a_ij| |E_ij|)`, nonnegative up to rounding
    pub slack: f64,
}

fn decay_fit_of(basis: &BSplineBasis, a: &DMatrix<f64>) -> DecayFit {
    let n = basis.dim();
    let mut profile = vec![0.0f64; n];
    for i in 0..n {
        for j in 0..n {
            let (lo, hi) = basis.hull(i, j);
            let d = i.abs_diff(j);
            profile[d] = profile[d].max(a[(i, j)].abs() * (hi - lo));
        }
    }
    let c0 = profile[0];
    let q_hat = profile
        .iter()
        .enumerate()
        .skip(1)
        .map(|(d, &v)| (v / c0).powf(1.0 / d as f64))
        .fold(0.0, f64::max);
    let slack = profile
        .iter()
        .enumerate()
        .map(|(d, &v)| c0 * q_hat.powi(d as i32) - v)
        .fold(f64::INFINITY, f64::min);
    DecayFit { c0, q_hat, geometric: q_hat < 1.0, profile, slack }
}

/// Two-sided certificate for the `L_1` operator norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L1OpNorm {
    /// attained value at sampled points `t`
    pub lower: f64,
    /// `max_i ‖R_i‖_1`, the value at the vertices of the simplex
    pub upper: f64,
    /// lower and upper coincide by structure (`k ≤ 2`)
    pub exact: bool,
}

impl L1OpNorm {
    pub fn value(&self) -> f64 {
        self.lower
    }
}

const L1_SAMPLES_PER_ATOM: usize = 16;

fn l1_opnorm_of(pr: &Projector) -> Result<L1OpNorm, ProjectionError> {
    let basis = &pr.basis;
    let k = basis.order();
    let a = pr.dual_matrix();
    let n = basis.dim();
    let row = |i: usize| -> Vec<f64> { (0..n).map(|j| a[(i, j)]).collect() };
    let l1_of = |c: Vec<f64>| -> Result<f64, ProjectionError> {
        Ok(Spline::new(basis.clone(), c)?.to_piecewise().lp_norm(1.0)?)
    };
    let mut upper: f64 = 0.0;
    for i in 0..n {
        upper = upper.max(l1_of(row(i))?);
    }
    // for fixed t the kernel section is Σ_i N_i(t) R_i
    let at = |t: f64| -> Result<f64, ProjectionError> {
        let (first, vals) = basis.eval_nonzero(t);
        let mut c = vec![0.0; n];
        for (o, v) in vals.iter().enumerate() {
            for (j, cj) in c.iter_mut().enumerate() {
                *cj += v * a[(first + o, j)];
            }
        }
        l1_of(c)
    };
    let p = basis.partition();
    let mut lower: f64 = 0.0;
    if k == 1 {
        return Ok(L1OpNorm { lower: upper, upper, exact: true });
    }
    // for k = 2 the section is affine in t on each atom and the norm convex,
    // so the breakpoints suffice
    for &t in p.breakpoints() {
        lower = lower.max(at(t)?);
    }
    if k == 2 {
        return Ok(L1OpNorm { lower, upper, exact: true });
    }
    let mut best = (lower, 0.0, 0.0);
    for (lo, hi) in p.atoms() {
        let h = (hi - lo) / L1_SAMPLES_PER_ATOM as f64;
        for s in 1..L1_SAMPLES_PER_ATOM {
            let t = lo + h * s as f64;
            let v = at(t)?;
            if v > best.0 {
                best = (v, (t - h).max(lo), (t + h).min(hi));
            }
        }
    }
    lower = lower.max(best.0);
    if best.2 > best.1 {
        // golden-section polish around the best sample
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a0, mut b0) = (best.1, best.2);
        let mut c0 = b0 - g * (b0 - a0);
        let mut d0 = a0 + g * (b0 - a0);
        let (mut fc, mut fd) = (at(c0)?, at(d0)?);
        for _ in 0..40 {
            if fc > fd {
                b0 = d0;
                d0 = c0;
                fd = fc;
                c0 = b0 - g * (b0 - a0);
                fc = at(c0)?;
            } else {
                a0 = c0;
                c0 = d0;
                fc = fd;
                d0 = a0 + g * (b0 - a0);
                fd = at(d0)?;
            }
        }
        lower = lower.max(fc).max(fd);
    }
    Ok(L1OpNorm { lower, upper, exact: false })
}

/// Projectors for every level of a filtration.
pub fn level_projectors(f: &Filtration, k: usize) -> Result<Vec<Projector>, ProjectionError> {
    f.levels().iter().map(|p| Projector::for_partition(p, k)).collect()
}

/// `f_n = P_n(terminal)` for every level, with consistency residuals
/// `‖P_n f_{n+1} − f_n‖` (coefficient max-abs).
#[derive(Debug, Clone)]
pub struct MartingaleSplineSequence {
    pub filtration: Filtration,
    pub k: usize,
    pub terminal: Spline,
    pub members: Vec<Spline>,
    pub residuals: Vec<f64>,
}

impl MartingaleSplineSequence {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn as_piecewise(&self) -> Vec<PiecewisePolynomial> {
        self.members.iter().map(|s| s.to_piecewise()).collect()
    }
}

pub fn make_martingale(filtration: &Filtration, k: usize, terminal: Spline) -> Result<MartingaleSplineSequence, ProjectionError> {
    if !is_refinement(terminal.basis().partition(), filtration.finest()) {
        return Err(ProjectionError::NotARefinement);
    }
    let prs = level_projectors(filtration, k)?;
    let tp = terminal.to_piecewise();
    let members = prs.iter().map(|pr| pr.project(&tp)).collect::<Result<Vec<_>, _>>()?;
    let mut residuals = Vec::with_capacity(members.len().saturating_sub(1));
    for n in 0..members.len().saturating_sub(1) {
        let back = prs[n].project(&members[n + 1].to_piecewise())?;
        residuals.push(back.coeff_distance(&members[n])?);
    }
    Ok(MartingaleSplineSequence { filtration: filtration.clone(), k, terminal, members, residuals })
}

/// Re-expresses a spline on a finer basis of the same order.
pub fn lift(s: &Spline, target: &Arc<BSplineBasis>) -> Result<Spline, ProjectionError> {
    Ok(refine_coeffs_into(s, target)?)
}
