//! Piecewise polynomials on `[0, 1]` stored per atom in the scaled local
//! variable `u = (x − midpoint) / halfwidth ∈ [−1, 1]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intervals::IntervalUnion;
use crate::partition::Partition;
use crate::poly;
use crate::quadrature::{self, QuadOptions, QuadratureError};

pub const DEFAULT_DEGREE_CAP: usize = 64;

const SAMPLES_PER_PIECE: usize = 512;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum PiecewiseError {
    #[error("{pieces} pieces given for a grid with {atoms} atoms")]
    PieceCountMismatch { pieces: usize, atoms: usize },

    #[error("piece {0} has no coefficients")]
    EmptyPiece(usize),

    #[error("result degree {degree} exceeds the cap {cap}")]
    DegreeOverflow { degree: usize, cap: usize },

    #[error("norm exponent {0} must be >= 1")]
    InvalidExponent(f64),

    #[error("sequences have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// A polynomial on the interval `[lo, hi]` in the scaled local variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    /// From ascending coefficients in the global variable `x`.
    pub fn from_global(global: &[f64], lo: f64, hi: f64) -> Self {
        let (m, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        Self { lo, hi, coeffs: poly::compose_affine(global, m, h) }
    }

    fn to_local(&self, x: f64) -> f64 {
        (x - 0.5 * (self.lo + self.hi)) / (0.5 * (self.hi - self.lo))
    }

    fn to_global(&self, u: f64) -> f64 {
        0.5 * (self.lo + self.hi) + 0.5 * (self.hi - self.lo) * u
    }

    pub fn eval(&self, x: f64) -> f64 {
        poly::eval(&self.coeffs, self.to_local(x))
    }

    pub fn degree(&self) -> usize {
        poly::degree(&self.coeffs)
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    /// `max |p|` over `[a, b] ∩ [lo, hi]`.
    pub fn sup_norm_on(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.max(self.lo), b.min(self.hi));
        if b < a {
            return 0.0;
        }
        checked_max_abs(&self.coeffs, self.to_local(a), self.to_local(b))
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm_on(self.lo, self.hi)
    }

    pub fn sup_norm_on_union(&self, e: &IntervalUnion) -> f64 {
        e.parts().iter().map(|&(a, b)| self.sup_norm_on(a, b)).fold(0.0, f64::max)
    }

    /// `{x ∈ [lo, hi] : p(x) ≥ threshold}`.
    pub fn level_set(&self, threshold: f64) -> IntervalUnion {
        let shifted = poly::add(&self.coeffs, &[-threshold]);
        let mut cuts = vec![-1.0];
        cuts.extend(poly::roots_in(&shifted, -1.0, 1.0));
        cuts.push(1.0);
        let parts = cuts
            .windows(2)
            .filter(|w| poly::eval(&shifted, 0.5 * (w[0] + w[1])) >= 0.0)
            .map(|w| (self.to_global(w[0]), self.to_global(w[1])))
            .collect();
        IntervalUnion::new(parts)
    }

    /// `{x ∈ [lo, hi] : |p(x)| ≥ threshold}`.
    pub fn abs_level_set(&self, threshold: f64) -> IntervalUnion {
        let neg = Polynomial { lo: self.lo, hi: self.hi, coeffs: poly::scale(&self.coeffs, -1.0) };
        self.level_set(threshold).union(&neg.level_set(threshold))
    }
}

/// Analytic maximum of `|c|` on `[ua, ub]` paired with a dense sampling lower
/// bound; the two must agree.
fn checked_max_abs(c: &[f64], ua: f64, ub: f64) -> f64 {
    let analytic = poly::max_abs_on(c, ua, ub);
    if poly::degree(c) <= 1 {
        return analytic;
    }
    let step = (ub - ua) / (SAMPLES_PER_PIECE - 1) as f64;
    let sampled = (0..SAMPLES_PER_PIECE)
        .map(|i| poly::eval(c, ua + step * i as f64).abs())
        .fold(0.0, f64::max);
    debug_assert!(
        sampled <= analytic * (1.0 + 1e-9) + 1e-300,
        "sup-norm root isolation missed an extremum: analytic {analytic}, sampled {sampled}"
    );
    analytic.max(sampled)
}

fn checked_min_max(c: &[f64], ua: f64, ub: f64) -> (f64, f64) {
    let (mut lo, mut hi) = poly::min_max_on(c, ua, ub);
    if poly::degree(c) > 1 {
        let step = (ub - ua) / (SAMPLES_PER_PIECE - 1) as f64;
        for i in 0..SAMPLES_PER_PIECE {
            let v = poly::eval(c, ua + step * i as f64);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPiecewise", into = "RawPiecewise")]
pub struct PiecewisePolynomial {
    grid: Partition,
    pieces: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawPiecewise {
    grid: Partition,
    pieces: Vec<Vec<f64>>,
}

impl TryFrom<RawPiecewise> for PiecewisePolynomial {
    type Error = PiecewiseError;

    fn try_from(r: RawPiecewise) -> Result<Self, Self::Error> {
        PiecewisePolynomial::new(r.grid, r.pieces)
    }
}

impl From<PiecewisePolynomial> for RawPiecewise {
    fn from(p: PiecewisePolynomial) -> Self {
        RawPiecewise { grid: p.grid, pieces: p.pieces }
    }
}

impl PiecewisePolynomial {
    pub fn new(grid: Partition, pieces: Vec<Vec<f64>>) -> Result<Self, PiecewiseError> {
        if pieces.len() != grid.num_atoms() {
            return Err(PiecewiseError::PieceCountMismatch { pieces: pieces.len(), atoms: grid.num_atoms() });
        }
        if let Some(i) = pieces.iter().position(|c| c.is_empty()) {
            return Err(PiecewiseError::EmptyPiece(i));
        }
        Ok(Self { grid, pieces })
    }

    pub(crate) fn from_parts(grid: Partition, pieces: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(grid.num_atoms(), pieces.len());
        Self { grid, pieces }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_parts(Partition::trivial(), vec![vec![c]])
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// Piecewise-constant function with value `values[i]` on atom `i`.
    pub fn step(grid: Partition, values: &[f64]) -> Self {
        assert_eq!(grid.num_atoms(), values.len());
        let pieces = values.iter().map(|&v| vec![v]).collect();
        Self::from_parts(grid, pieces)
    }

    /// Global polynomial (ascending coefficients in `x`) re-expressed on `grid`.
    pub fn from_global_poly_on(grid: Partition, global: &[f64]) -> Self {
        let pieces = grid
            .atoms()
            .iter()
            .map(|&(a, b)| poly::compose_affine(global, 0.5 * (a + b), 0.5 * (b - a)))
            .collect();
        Self::from_parts(grid, pieces)
    }

    pub fn from_global_poly(global: &[f64]) -> Self {
        Self::from_global_poly_on(Partition::trivial(), global)
    }

    /// Per-atom global polynomials (ascending in `x`).
    pub fn from_global_pieces(grid: Partition, globals: &[Vec<f64>]) -> Self {
        assert_eq!(grid.num_atoms(), globals.len());
        let pieces = grid
            .atoms()
            .iter()
            .zip(globals)
            .map(|(&(a, b), g)| poly::compose_affine(g, 0.5 * (a + b), 0.5 * (b - a)))
            .collect();
        Self::from_parts(grid, pieces)
    }

    pub fn grid(&self) -> &Partition {
        &self.grid
    }

    pub fn pieces(&self) -> &[Vec<f64>] {
        &self.pieces
    }

    pub fn piece(&self, i: usize) -> Polynomial {
        let (lo, hi) = self.grid.atom(i);
        Polynomial { lo, hi, coeffs: self.pieces[i].clone() }
    }

    pub fn degree(&self) -> usize {
        self.pieces.iter().map(|c| poly::degree(c)).max().unwrap_or(0)
    }

    fn local(&self, i: usize, x: f64) -> f64 {
        let (a, b) = self.grid.atom(i);
        (x - 0.5 * (a + b)) / (0.5 * (b - a))
    }

    fn global(&self, i: usize, u: f64) -> f64 {
        let (a, b) = self.grid.atom(i);
        0.5 * (a + b) + 0.5 * (b - a) * u
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.grid.locate(x);
        poly::eval(&self.pieces[i], self.local(i, x))
    }

    /// The same function expressed on a grid whose atoms each lie inside one
    /// atom of `self.grid`.
    pub fn refine_to(&self, fine: &Partition) -> Self {
        if fine == &self.grid {
            return self.clone();
        }
        let pieces = fine
            .atoms()
            .iter()
            .map(|&(a, b)| {
                let i = self.grid.locate(0.5 * (a + b));
                let (ca, cb) = self.grid.atom(i);
                let (cm, ch) = (0.5 * (ca + cb), 0.5 * (cb - ca));
                poly::compose_affine(&self.pieces[i], (0.5 * (a + b) - cm) / ch, 0.5 * (b - a) / ch)
            })
            .collect();
        Self::from_parts(fine.clone(), pieces)
    }

    fn zip_with<F: Fn(&[f64], &[f64]) -> Vec<f64>>(&self, other: &Self, f: F) -> Self {
        let grid = self.grid.common_refinement(&other.grid);
        let a = self.refine_to(&grid);
        let b = other.refine_to(&grid);
        let pieces = a.pieces.iter().zip(&b.pieces).map(|(x, y)| f(x, y)).collect();
        Self::from_parts(grid, pieces)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, poly::add)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |x, y| poly::add(x, &poly::scale(y, -1.0)))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_parts(self.grid.clone(), self.pieces.iter().map(|c| poly::scale(c, s)).collect())
    }

    pub fn add_constant(&self, c: f64) -> Self {
        Self::from_parts(self.grid.clone(), self.pieces.iter().map(|p| poly::add(p, &[c])).collect())
    }

    pub fn mul(&self, other: &Self) -> Result<Self, PiecewiseError> {
        self.mul_with_cap(other, DEFAULT_DEGREE_CAP)
    }

    pub fn mul_with_cap(&self, other: &Self, cap: usize) -> Result<Self, PiecewiseError> {
        let degree = self.degree() + other.degree();
        if degree > cap {
            return Err(PiecewiseError::DegreeOverflow { degree, cap });
        }
        Ok(self.zip_with(other, |x, y| poly::trim(poly::mul(x, y))))
    }

    pub fn square(&self) -> Result<Self, PiecewiseError> {
        self.mul(self)
    }

    /// Integer power by repeated multiplication.
    pub fn powi(&self, n: u32) -> Result<Self, PiecewiseError> {
        let mut out = PiecewisePolynomial::constant(1.0).refine_to(&self.grid);
        for _ in 0..n {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    /// Exact integral: per piece Gauss–Legendre with `⌈(d + 1) / 2⌉` nodes.
    pub fn integrate(&self) -> f64 {
        self.pieces
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let n = quadrature::nodes_for_degree(c.len() - 1);
                0.5 * self.grid.atom_len(i) * quadrature::fixed(n, -1.0, 1.0, |u| poly::eval(c, u))
            })
            .sum()
    }

    /// Pieces overlapping `[lo, hi]` with the overlap in local coordinates.
    fn overlaps(&self, lo: f64, hi: f64) -> Vec<(usize, f64, f64)> {
        if hi <= lo {
            return Vec::new();
        }
        let first = self.grid.locate(lo);
        let mut out = Vec::new();
        for i in first..self.grid.num_atoms() {
            let (a, b) = self.grid.atom(i);
            if a >= hi {
                break;
            }
            let (s, e) = (a.max(lo), b.min(hi));
            if e > s {
                let ua = if s == a { -1.0 } else { self.local(i, s).max(-1.0) };
                let ub = if e == b { 1.0 } else { self.local(i, e).min(1.0) };
                out.push((i, ua, ub));
            }
        }
        out
    }

    /// Exact `∫_lo^hi pp`.
    pub fn integrate_over(&self, lo: f64, hi: f64) -> f64 {
        self.overlaps(lo, hi)
            .into_iter()
            .map(|(i, ua, ub)| {
                let c = &self.pieces[i];
                let n = quadrature::nodes_for_degree(c.len() - 1);
                0.5 * self.grid.atom_len(i) * quadrature::fixed(n, ua, ub, |u| poly::eval(c, u))
            })
            .sum()
    }

    /// Subintervals (piece, ua, ub) of `[lo, hi]` on which the piece has constant
    /// sign and is monotone.
    fn monotone_segments(&self, lo: f64, hi: f64) -> Vec<(usize, f64, f64)> {
        let mut out = Vec::new();
        for (i, ua, ub) in self.overlaps(lo, hi) {
            let c = &self.pieces[i];
            let mut cuts = vec![ua];
            let mut inner = poly::roots_in(c, ua, ub);
            inner.extend(poly::roots_in(&poly::derivative(c), ua, ub));
            inner.sort_by(|a, b| a.partial_cmp(b).unwrap());
            cuts.extend(inner);
            cuts.push(ub);
            cuts.dedup();
            out.extend(cuts.windows(2).filter(|w| w[1] > w[0]).map(|w| (i, w[0], w[1])));
        }
        out
    }

    /// `∫_lo^hi |pp|^r` for real `r > 0`.
    pub fn integrate_abs_pow_over(&self, r: f64, lo: f64, hi: f64, opts: QuadOptions) -> Result<f64, PiecewiseError> {
        if r == r.round() && r as i64 % 2 == 0 && r <= 64.0 {
            // even power: the integrand is a polynomial
            return Ok(self
                .overlaps(lo, hi)
                .into_iter()
                .map(|(i, ua, ub)| {
                    let c = &self.pieces[i];
                    let n = quadrature::nodes_for_degree(poly::degree(c) * r as usize);
                    let n = n.min(128);
                    0.5 * self.grid.atom_len(i)
                        * quadrature::fixed(n, ua, ub, |u| poly::eval(c, u).powi(r as i32))
                })
                .sum());
        }
        let segs = self.monotone_segments(lo, hi);
        if r == 1.0 {
            return Ok(segs
                .into_iter()
                .map(|(i, ua, ub)| {
                    let c = &self.pieces[i];
                    let n = quadrature::nodes_for_degree(c.len() - 1);
                    0.5 * self.grid.atom_len(i) * quadrature::fixed(n, ua, ub, |u| poly::eval(c, u)).abs()
                })
                .sum());
        }
        let f = |i: usize| move |u: f64| poly::eval(&self.pieces[i], u).abs().powf(r);
        let coarse: f64 = segs
            .iter()
            .map(|&(i, ua, ub)| 0.5 * self.grid.atom_len(i) * quadrature::fixed(10, ua, ub, f(i)))
            .sum();
        let mut total = 0.0;
        for &(i, ua, ub) in &segs {
            let half = 0.5 * self.grid.atom_len(i);
            let fi = f(i);
            total += half * quadrature::adaptive(&fi, ua, ub, coarse / half, opts)?;
        }
        Ok(total)
    }

    pub fn integrate_abs_pow(&self, r: f64, opts: QuadOptions) -> Result<f64, PiecewiseError> {
        self.integrate_abs_pow_over(r, 0.0, 1.0, opts)
    }

    /// `‖pp‖_{L_p[0,1]}`; `p = f64::INFINITY` gives the sup norm.
    pub fn lp_norm(&self, p: f64) -> Result<f64, PiecewiseError> {
        self.lp_norm_with(p, QuadOptions::default())
    }

    pub fn lp_norm_with(&self, p: f64, opts: QuadOptions) -> Result<f64, PiecewiseError> {
        self.lp_norm_on(p, 0.0, 1.0, opts)
    }

    /// `‖pp‖_{L_p[lo,hi]}` (unnormalized Lebesgue measure).
    pub fn lp_norm_on(&self, p: f64, lo: f64, hi: f64, opts: QuadOptions) -> Result<f64, PiecewiseError> {
        if !(p >= 1.0) {
            return Err(PiecewiseError::InvalidExponent(p));
        }
        if p.is_infinite() {
            return Ok(self.sup_norm_on(lo, hi));
        }
        Ok(self.integrate_abs_pow_over(p, lo, hi, opts)?.powf(1.0 / p))
    }

    /// `max |pp|` on `[lo, hi]` from endpoint and critical values per piece.
    pub fn sup_norm_on(&self, lo: f64, hi: f64) -> f64 {
        if hi == lo {
            return self.eval(lo).abs();
        }
        self.overlaps(lo, hi)
            .into_iter()
            .map(|(i, ua, ub)| checked_max_abs(&self.pieces[i], ua, ub))
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm_on(0.0, 1.0)
    }

    /// `(min, max)` of the function on `[lo, hi]`.
    pub fn min_max_on(&self, lo: f64, hi: f64) -> (f64, f64) {
        self.overlaps(lo, hi)
            .into_iter()
            .map(|(i, ua, ub)| checked_min_max(&self.pieces[i], ua, ub))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (c, d)| (a.min(c), b.max(d)))
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.min_max_on(0.0, 1.0)
    }

    /// `{x ∈ [lo, hi] : pp(x) ≥ threshold}` by per-piece root isolation.
    pub fn level_set_on(&self, threshold: f64, lo: f64, hi: f64) -> IntervalUnion {
        let mut parts = Vec::new();
        for (i, ua, ub) in self.overlaps(lo, hi) {
            let shifted = poly::add(&self.pieces[i], &[-threshold]);
            let mut cuts = vec![ua];
            cuts.extend(poly::roots_in(&shifted, ua, ub));
            cuts.push(ub);
            for w in cuts.windows(2) {
                if w[1] > w[0] && poly::eval(&shifted, 0.5 * (w[0] + w[1])) >= 0.0 {
                    parts.push((self.global(i, w[0]), self.global(i, w[1])));
                }
            }
        }
        IntervalUnion::new(parts)
    }

    pub fn level_set(&self, threshold: f64) -> IntervalUnion {
        self.level_set_on(threshold, 0.0, 1.0)
    }

    /// Sign-change roots of the function, in `x`.
    pub fn roots(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..self.pieces.len() {
            out.extend(poly::roots_in(&self.pieces[i], -1.0, 1.0).into_iter().map(|u| self.global(i, u)));
        }
        out
    }

    /// `∫_lo^hi φ(pp(x)) dx` for a continuous `φ`, split at sign changes and
    /// extrema.
    pub fn integrate_map_over<F: Fn(f64) -> f64>(
        &self,
        phi: F,
        lo: f64,
        hi: f64,
        opts: QuadOptions,
    ) -> Result<f64, PiecewiseError> {
        let segs = self.monotone_segments(lo, hi);
        let coarse: f64 = segs
            .iter()
            .map(|&(i, ua, ub)| {
                0.5 * self.grid.atom_len(i) * quadrature::fixed(10, ua, ub, |u| phi(poly::eval(&self.pieces[i], u)))
            })
            .sum();
        let mut total = 0.0;
        for &(i, ua, ub) in &segs {
            let half = 0.5 * self.grid.atom_len(i);
            let f = |u: f64| phi(poly::eval(&self.pieces[i], u));
            total += half * quadrature::adaptive(&f, ua, ub, coarse.abs() / half, opts)?;
        }
        Ok(total)
    }
}

/// Common refinement of all grids, with each function re-expressed on it.
pub fn on_common_grid(fs: &[PiecewisePolynomial]) -> (Partition, Vec<PiecewisePolynomial>) {
    let mut grid = fs.first().map(|f| f.grid.clone()).unwrap_or_else(Partition::trivial);
    for f in fs.iter().skip(1) {
        grid = grid.common_refinement(&f.grid);
    }
    let refined = fs.iter().map(|f| f.refine_to(&grid)).collect();
    (grid, refined)
}

/// `Σ f_n²` as a piecewise polynomial.
pub fn sum_of_squares(fs: &[PiecewisePolynomial]) -> Result<PiecewisePolynomial, PiecewiseError> {
    let (grid, refined) = on_common_grid(fs);
    let mut pieces = vec![vec![0.0]; grid.num_atoms()];
    for f in &refined {
        if 2 * f.degree() > DEFAULT_DEGREE_CAP {
            return Err(PiecewiseError::DegreeOverflow { degree: 2 * f.degree(), cap: DEFAULT_DEGREE_CAP });
        }
        for (acc, c) in pieces.iter_mut().zip(&f.pieces) {
            *acc = poly::add(acc, &poly::mul(c, c));
        }
    }
    Ok(PiecewisePolynomial::from_parts(grid, pieces))
}

fn is_even_integer(x: f64) -> bool {
    x.is_finite() && x == x.round() && (x as i64) % 2 == 0 && x > 0.0
}

/// Breakpoints inside local `(-1, 1)` where some `|f_i|` or the order of
/// `|f_i|, |f_j|` changes, for a set of pieces on one atom.
fn kink_points(pieces: &[&[f64]], pairwise: bool) -> Vec<f64> {
    let mut cuts = Vec::new();
    for (i, a) in pieces.iter().enumerate() {
        cuts.extend(poly::roots_in(a, -1.0, 1.0));
        if pairwise {
            for b in &pieces[i + 1..] {
                cuts.extend(poly::roots_in(&poly::add(a, &poly::scale(b, -1.0)), -1.0, 1.0));
                cuts.extend(poly::roots_in(&poly::add(a, b), -1.0, 1.0));
            }
        }
    }
    cuts.push(-1.0);
    cuts.push(1.0);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    cuts
}

fn sample_max<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    const N: usize = 64;
    let step = (b - a) / N as f64;
    let (mut best_x, mut best) = (a, f(a));
    for i in 1..=N {
        let x = a + step * i as f64;
        let v = f(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    // golden-section polish around the best sample
    let (mut lo, mut hi) = ((best_x - step).max(a), (best_x + step).min(b));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if f(x1) >= f(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    best.max(f(0.5 * (lo + hi)))
}

/// `‖(f_n)‖_{L_p(ℓ_q)} = (∫ (Σ |f_n|^q)^{p/q})^{1/p}`, with the usual
/// conventions for `p = ∞` or `q = ∞`.
pub fn lplq_norm(fs: &[PiecewisePolynomial], p: f64, q: f64) -> Result<f64, PiecewiseError> {
    lplq_norm_with(fs, p, q, QuadOptions::default())
}

pub fn lplq_norm_with(fs: &[PiecewisePolynomial], p: f64, q: f64, opts: QuadOptions) -> Result<f64, PiecewiseError> {
    for e in [p, q] {
        if !(e >= 1.0) {
            return Err(PiecewiseError::InvalidExponent(e));
        }
    }
    if fs.is_empty() {
        return Ok(0.0);
    }
    if is_even_integer(q) && (q as usize) * fs.iter().map(|f| f.degree()).max().unwrap() <= DEFAULT_DEGREE_CAP {
        // inner sum Σ f^q is itself a piecewise polynomial
        let inner = if q == 2.0 {
            sum_of_squares(fs)?
        } else {
            let mut acc = PiecewisePolynomial::zero();
            for f in fs {
                acc = acc.add(&f.powi(q as u32)?);
            }
            acc
        };
        if p.is_infinite() {
            return Ok(inner.sup_norm().powf(1.0 / q));
        }
        return Ok(inner.integrate_abs_pow(p / q, opts)?.powf(1.0 / p));
    }
    let (grid, refined) = on_common_grid(fs);
    if q.is_infinite() && p.is_infinite() {
        return Ok(refined.iter().map(|f| f.sup_norm()).fold(0.0, f64::max));
    }
    let mut total = 0.0;
    let mut sup: f64 = 0.0;
    let mut segments = Vec::new();
    for i in 0..grid.num_atoms() {
        let pieces: Vec<&[f64]> = refined.iter().map(|f| f.pieces[i].as_slice()).collect();
        let cuts = kink_points(&pieces, q.is_infinite());
        segments.push((i, pieces, cuts));
    }
    let inner = |pieces: &[&[f64]], u: f64| -> f64 {
        if q.is_infinite() {
            pieces.iter().map(|c| poly::eval(c, u).abs()).fold(0.0, f64::max)
        } else {
            pieces.iter().map(|c| poly::eval(c, u).abs().powf(q)).sum::<f64>().powf(1.0 / q)
        }
    };
    if p.is_infinite() {
        for (_, pieces, cuts) in &segments {
            for w in cuts.windows(2) {
                sup = sup.max(sample_max(&|u| inner(pieces, u), w[0], w[1]));
            }
        }
        return Ok(sup);
    }
    let coarse: f64 = segments
        .iter()
        .map(|(i, pieces, cuts)| {
            let half = 0.5 * grid.atom_len(*i);
            cuts.windows(2)
                .map(|w| half * quadrature::fixed(10, w[0], w[1], |u| inner(pieces, u).powf(p)))
                .sum::<f64>()
        })
        .sum();
    for (i, pieces, cuts) in &segments {
        let half = 0.5 * grid.atom_len(*i);
        let f = |u: f64| inner(pieces, u).powf(p);
        for w in cuts.windows(2) {
            total += half * quadrature::adaptive(&f, w[0], w[1], coarse / half, opts)?;
        }
    }
    Ok(total.powf(1.0 / p))
}

/// `∫ (max_n |f_n|)^p` split at every crossing so the integrand is smooth per segment.
pub fn max_abs_power_integral(fs: &[PiecewisePolynomial], p: f64, opts: QuadOptions) -> Result<f64, PiecewiseError> {
    Ok(lplq_norm_with(fs, p, f64::INFINITY, opts)?.powf(p))
}

/// Result of a Hölder-pairing check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderCheck {
    pub pairing: f64,
    pub bound: f64,
    pub pass: bool,
}

pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// `|∫ Σ f_n g_n| ≤ ‖(f_n)‖_{L_p(ℓ_q)} ‖(g_n)‖_{L_{p'}(ℓ_{q'})}`.
pub fn holder_pairing_check(
    fs: &[PiecewisePolynomial],
    gs: &[PiecewisePolynomial],
    p: f64,
    q: f64,
) -> Result<HolderCheck, PiecewiseError> {
    if fs.len() != gs.len() {
        return Err(PiecewiseError::LengthMismatch(fs.len(), gs.len()));
    }
    let mut pairing = 0.0;
    for (f, g) in fs.iter().zip(gs) {
        pairing += f.mul(g)?.integrate();
    }
    let bound = lplq_norm(fs, p, q)? * lplq_norm(gs, conjugate(p), conjugate(q))?;
    Ok(HolderCheck { pairing, bound, pass: pairing.abs() <= bound * (1.0 + 1e-9) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn x() -> PiecewisePolynomial {
        PiecewisePolynomial::from_global_poly(&[0.0, 1.0])
    }

    fn random_pp(rng: &mut ChaCha8Rng, atoms: usize, degree: usize) -> PiecewisePolynomial {
        let mut bps: Vec<f64> = (0..atoms - 1).map(|_| rng.random_range(0.02..0.98)).collect();
        bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        bps.dedup();
        let mut all = vec![0.0];
        all.extend(bps);
        all.push(1.0);
        let grid = Partition::from_sorted_unchecked(all);
        let pieces = (0..grid.num_atoms())
            .map(|_| (0..=degree).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        PiecewisePolynomial::from_parts(grid, pieces)
    }

    #[test]
    fn arithmetic_examples() {
        let xx = x().mul(&x()).unwrap();
        assert_eq!(xx.grid().num_atoms(), 1);
        for t in [0.0, 0.3, 1.0] {
            assert_abs_diff_eq!(xx.eval(t), t * t, epsilon = 1e-15);
        }
        let one = PiecewisePolynomial::constant(1.0).add(&PiecewisePolynomial::zero());
        assert_eq!(one.eval(0.7), 1.0);
        // indicator times x, checked on a 100-point grid
        let ind = PiecewisePolynomial::step(Partition::new(vec![0.0, 0.5, 1.0]).unwrap(), &[1.0, 0.0]);
        let prod = ind.mul(&x()).unwrap();
        for j in 0..100 {
            let t = j as f64 / 99.0;
            let want = if t < 0.5 { t } else { 0.0 };
            assert_abs_diff_eq!(prod.eval(t), want, epsilon = 1e-14);
        }
    }

    #[test]
    fn degree_cap() {
        let p = PiecewisePolynomial::from_global_poly(&vec![1.0; 40]);
        assert!(matches!(p.mul(&p), Err(PiecewiseError::DegreeOverflow { degree: 78, cap: 64 })));
    }

    #[test]
    fn integrate_examples() {
        assert_abs_diff_eq!(x().mul(&x()).unwrap().integrate(), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(PiecewisePolynomial::constant(1.0).integrate(), 1.0, epsilon = 1e-15);
        let fine = x().refine_to(&Partition::new(vec![0.0, 0.5, 1.0]).unwrap());
        assert_abs_diff_eq!(fine.integrate(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(x().integrate_over(0.25, 0.75), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn integrate_matches_monomial_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let f = random_pp(&mut rng, 5, 7);
            let exact: f64 = (0..f.grid().num_atoms())
                .map(|i| 0.5 * f.grid().atom_len(i) * poly::integral_ref(&f.pieces()[i]))
                .sum();
            assert_abs_diff_eq!(f.integrate(), exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn lp_examples() {
        for p in [1.0, 1.5, 2.0, 3.7, 8.0, f64::INFINITY] {
            assert_abs_diff_eq!(PiecewisePolynomial::constant(1.0).lp_norm(p).unwrap(), 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(x().lp_norm(2.0).unwrap(), 0.5773502692, epsilon = 1e-10);
        let centered = PiecewisePolynomial::from_global_poly(&[-0.5, 1.0]);
        assert_abs_diff_eq!(centered.lp_norm(1.0).unwrap(), 0.25, epsilon = 1e-15);
        // ∫ x^{1.5} = 0.4
        assert_abs_diff_eq!(x().lp_norm(1.5).unwrap(), 0.4f64.powf(1.0 / 1.5), epsilon = 1e-10);
        assert!(matches!(x().lp_norm(0.5), Err(PiecewiseError::InvalidExponent(_))));
    }

    #[test]
    fn sup_examples() {
        let f = PiecewisePolynomial::from_global_poly(&[0.0, 1.0, -1.0]);
        assert_abs_diff_eq!(f.sup_norm(), 0.25, epsilon = 1e-15);
        assert_eq!(PiecewisePolynomial::constant(-3.0).sup_norm_on(0.2, 0.4), 3.0);
        let g = PiecewisePolynomial::from_global_poly(&[1.0, -1.0, 1.0]);
        // endpoint value 1 beats g(0.25) = 0.8125
        assert_abs_diff_eq!(g.sup_norm_on(0.0, 0.25), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn level_sets() {
        let ls = x().level_set(0.125);
        assert_eq!(ls.parts().len(), 1);
        assert_abs_diff_eq!(ls.measure(), 0.875, epsilon = 1e-14);
        let c = PiecewisePolynomial::constant(2.0);
        assert_abs_diff_eq!(c.level_set(2.0).measure(), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let f = random_pp(&mut rng, 4, 4);
            let t = rng.random_range(-0.5..0.5);
            let up = f.level_set(t);
            let down = f.scale(-1.0).level_set(-t);
            // together they cover [0,1], overlapping only where f = t
            assert_abs_diff_eq!(up.union(&down).measure(), 1.0, epsilon = 1e-12);
            assert!(up.intersect(&down).measure() <= 1e-12);
        }
    }

    #[test]
    fn lplq_examples() {
        for (p, q) in [(1.0, 1.0), (2.0, 3.0), (1.5, 2.0), (f64::INFINITY, 2.0), (3.0, f64::INFINITY)] {
            assert_abs_diff_eq!(lplq_norm(&[PiecewisePolynomial::constant(1.0)], p, q).unwrap(), 1.0, epsilon = 1e-10);
        }
        let grid = Partition::new(vec![0.0, 0.5, 1.0]).unwrap();
        let a = PiecewisePolynomial::step(grid.clone(), &[1.0, 0.0]);
        let b = PiecewisePolynomial::step(grid, &[0.0, 1.0]);
        assert_abs_diff_eq!(lplq_norm(&[a, b], 1.0, 2.0).unwrap(), 1.0, epsilon = 1e-12);
        let c = PiecewisePolynomial::constant(-1.7);
        assert_abs_diff_eq!(lplq_norm(&[c.clone(), c], 2.0, 2.0).unwrap(), 1.7 * 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn lplq_general_q_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let fs: Vec<_> = (0..3).map(|_| random_pp(&mut rng, 3, 3)).collect();
            for (p, q) in [(1.0, 3.0), (2.5, 1.0), (1.0, f64::INFINITY), (2.0, 1.5)] {
                // midpoint rule on each atom of the common grid as an independent oracle
                let grid = fs.iter().fold(Partition::trivial(), |g, f| g.common_refinement(f.grid()));
                let n = 200_000 / grid.num_atoms();
                let brute: f64 = grid
                    .atoms()
                    .iter()
                    .map(|&(lo, hi)| {
                        let h = (hi - lo) / n as f64;
                        (0..n)
                            .map(|j| {
                                let t = lo + (j as f64 + 0.5) * h;
                                let inner = if q.is_infinite() {
                                    fs.iter().map(|f| f.eval(t).abs()).fold(0.0, f64::max)
                                } else {
                                    fs.iter().map(|f| f.eval(t).abs().powf(q)).sum::<f64>().powf(1.0 / q)
                                };
                                inner.powf(p) * h
                            })
                            .sum::<f64>()
                    })
                    .sum();
                let got = lplq_norm(&fs, p, q).unwrap();
                assert_abs_diff_eq!(got, brute.powf(1.0 / p), epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn holder_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let fs: Vec<_> = (0..3).map(|_| random_pp(&mut rng, 3, 2)).collect();
        let h = holder_pairing_check(&fs, &fs, 2.0, 2.0).unwrap();
        assert!(h.pass);
        assert_abs_diff_eq!(h.pairing, h.bound, epsilon = 1e-12);
        let h = holder_pairing_check(&[PiecewisePolynomial::constant(1.0)], &[PiecewisePolynomial::constant(-1.0)], 2.0, 2.0)
            .unwrap();
        assert_eq!((h.pairing, h.pass), (-1.0, true));
        assert_abs_diff_eq!(h.bound, 1.0, epsilon = 1e-15);
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let fs: Vec<_> = (0..2).map(|_| random_pp(&mut rng, 3, 2)).collect();
            let gs: Vec<_> = (0..2).map(|_| random_pp(&mut rng, 3, 2)).collect();
            assert!(holder_pairing_check(&fs, &gs, 4.0, 2.0).unwrap().pass);
        }
    }

    #[test]
    fn json_shape() {
        let f = PiecewisePolynomial::step(Partition::new(vec![0.0, 0.5, 1.0]).unwrap(), &[1.0, 2.0]);
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"grid":[0.0,0.5,1.0],"pieces":[[1.0],[2.0]]}"#);
        assert!(serde_json::from_str::<PiecewisePolynomial>(r#"{"grid":[0.0,1.0],"pieces":[]}"#).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn linear_and_refinement_invariant(seed in 0u64..10_000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let f = random_pp(&mut rng, 4, 5);
                let g = random_pp(&mut rng, 3, 3);
                let lhs = f.scale(a).add(&g.scale(b)).integrate();
                let rhs = a * f.integrate() + b * g.integrate();
                let scale = a.abs() * f.lp_norm(1.0).unwrap() + b.abs() * g.lp_norm(1.0).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1e-300) + 1e-15);

                let fine = f.grid().common_refinement(g.grid());
                let fr = f.refine_to(&fine);
                prop_assert!((fr.integrate() - f.integrate()).abs() <= 1e-12 * f.lp_norm(1.0).unwrap().max(1e-12));
                for p in [1.0, 2.0, 3.3] {
                    let n0 = f.lp_norm(p).unwrap();
                    let tol = if p == 3.3 { 1e-9 } else { 1e-12 };
                    prop_assert!((fr.lp_norm(p).unwrap() - n0).abs() <= tol * n0.max(1e-12) + 1e-14);
                }
                for j in 0..50 {
                    let t = j as f64 / 49.0;
                    prop_assert!((fr.eval(t) - f.eval(t)).abs() <= 1e-12);
                }
            }

            #[test]
            fn lp_monotone_in_p(seed in 0u64..10_000) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let f = random_pp(&mut rng, 3, 4);
                let ps = [1.0, 1.3, 2.0, 2.5, 4.0, 7.0, f64::INFINITY];
                let ns: Vec<f64> = ps.iter().map(|&p| f.lp_norm(p).unwrap()).collect();
                for w in ns.windows(2) {
                    prop_assert!(w[0] <= w[1] * (1.0 + 1e-9));
                }
            }

            #[test]
            fn products_agree_pointwise(seed in 0u64..10_000) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let f = random_pp(&mut rng, 3, 3);
                let g = random_pp(&mut rng, 4, 2);
                let prod = f.mul(&g).unwrap();
                let sum = f.add(&g);
                for _ in 0..30 {
                    let t: f64 = rng.random_range(0.0..1.0);
                    prop_assert!((prod.eval(t) - f.eval(t) * g.eval(t)).abs() <= 1e-12);
                    prop_assert!((sum.eval(t) - f.eval(t) - g.eval(t)).abs() <= 1e-12);
                }
            }
        }
    }
}
