//! Martingale differences of spline projections and the inequalities built on
//! them: square functions, Burkholder, sign randomization, Stein, Lépingle,
//! the main duality estimate, `H_{1,k}` / `BMO_k` norms and Doob.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bspline::{gamma_k, BSplineBasis, BSplineError, Spline};
use crate::gseq::{build_g, GError};
use crate::intervals::IntervalUnion;
use crate::kernel::{build_t, predecessor, KernelError};
use crate::partition::Filtration;
use crate::piecewise::{lplq_norm, on_common_grid, PiecewiseError, PiecewisePolynomial};
use crate::poly;
use crate::projection::{lift, level_projectors, MartingaleSplineSequence, ProjectionError, Projector};
use crate::quadrature::{self, QuadOptions};

pub const MEMBERSHIP_TOL: f64 = 1e-10;
pub const EXHAUSTIVE_SIGN_LEVELS: usize = 14;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum MartingaleError {
    #[error("member {level} is not in the spline space of its level (residual {residual:e})")]
    NotAdapted { level: usize, residual: f64 },

    #[error("invalid parameters: {0}")]
    ParameterError(String),

    #[error("sequence has {got} members but the filtration has {levels} levels")]
    LengthMismatch { got: usize, levels: usize },

    #[error(transparent)]
    Projection(#[from] ProjectionError),

    #[error(transparent)]
    BSpline(#[from] BSplineError),

    #[error(transparent)]
    Piecewise(#[from] PiecewiseError),

    #[error(transparent)]
    Kernel(#[from] KernelError),

    #[error(transparent)]
    G(#[from] Box<GError>),
}

impl From<GError> for MartingaleError {
    fn from(e: GError) -> Self {
        MartingaleError::G(Box::new(e))
    }
}

/// `Δ_n f = P_n f − P_{n−1} f` on the level-`n` basis, with `P_{−1} = 0`.
#[derive(Debug, Clone)]
pub struct DeltaSequence {
    pub filtration: Filtration,
    pub k: usize,
    pub projections: Vec<Spline>,
    pub deltas: Vec<Spline>,
}

impl DeltaSequence {
    pub fn new(filtration: &Filtration, k: usize, f: &PiecewisePolynomial) -> Result<Self, MartingaleError> {
        let prs = level_projectors(filtration, k)?;
        Self::with_projectors(filtration, &prs, f)
    }

    pub fn with_projectors(filtration: &Filtration, prs: &[Projector], f: &PiecewisePolynomial) -> Result<Self, MartingaleError> {
        let k = prs[0].order();
        let projections = prs.iter().map(|pr| pr.project(f)).collect::<Result<Vec<_>, _>>()?;
        let mut deltas = Vec::with_capacity(projections.len());
        for n in 0..projections.len() {
            let d = if n == 0 {
                projections[0].clone()
            } else {
                let prev = lift(&projections[n - 1], prs[n].basis())?;
                projections[n].axpy(-1.0, &prev)?
            };
            deltas.push(d);
        }
        Ok(Self { filtration: filtration.clone(), k, projections, deltas })
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn terminal(&self) -> &Spline {
        self.projections.last().expect("nonempty filtration")
    }

    pub fn delta_pp(&self) -> Vec<PiecewisePolynomial> {
        self.deltas.iter().map(|d| d.to_piecewise()).collect()
    }

    /// Deltas re-expressed on the finest basis.
    pub fn lifted_deltas(&self) -> Result<Vec<Spline>, MartingaleError> {
        let top = self.terminal().basis().clone();
        self.deltas.iter().map(|d| Ok(lift(d, &top)?)).collect()
    }

    /// `max |Σ Δ_n − P_N f|` over finest-basis coefficients.
    pub fn telescoping_residual(&self) -> Result<f64, MartingaleError> {
        let lifted = self.lifted_deltas()?;
        let mut acc = Spline::zero(self.terminal().basis().clone());
        for d in &lifted {
            acc = acc.axpy(1.0, d)?;
        }
        Ok(acc.coeff_distance(self.terminal())?)
    }
}

/// `S_n² = Σ_{m ≤ n} Δ_m²` for every `n`; `S = S_N`.
#[derive(Debug, Clone)]
pub struct SquareFunction {
    pub partial: Vec<PiecewisePolynomial>,
}

impl SquareFunction {
    /// `Q = S²` as an exact piecewise polynomial.
    pub fn squared(&self) -> &PiecewisePolynomial {
        self.partial.last().expect("nonempty")
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.squared().eval(x).max(0.0).sqrt()
    }

    pub fn eval_partial(&self, n: usize, x: f64) -> f64 {
        self.partial[n].eval(x).max(0.0).sqrt()
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64, MartingaleError> {
        let q = self.squared();
        if p.is_infinite() {
            return Ok(q.sup_norm().sqrt());
        }
        Ok(q.integrate_abs_pow(p / 2.0, QuadOptions::default())?.powf(1.0 / p))
    }
}

pub fn square_function(ds: &DeltaSequence) -> Result<SquareFunction, MartingaleError> {
    let mut partial = Vec::with_capacity(ds.len());
    let mut acc = PiecewisePolynomial::zero();
    for d in ds.delta_pp() {
        acc = acc.add(&d.square()?);
        partial.push(acc.clone());
    }
    Ok(SquareFunction { partial })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormRatio {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl NormRatio {
    fn new(lhs: f64, rhs: f64) -> Self {
        let ratio = if rhs == 0.0 && lhs == 0.0 { 0.0 } else { lhs / rhs };
        Self { lhs, rhs, ratio }
    }
}

/// `‖Sf‖_p / ‖P_N f‖_p`.
pub fn burkholder_ratio(ds: &DeltaSequence, p: f64) -> Result<NormRatio, MartingaleError> {
    let s = square_function(ds)?.lp_norm(p)?;
    let f = ds.terminal().to_piecewise().lp_norm(p)?;
    Ok(NormRatio::new(s, f))
}

/// `‖Sf‖₂² = Σ ‖Δ_n‖₂² = ‖P_N f‖₂²`, as relative discrepancies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParsevalReport {
    pub s_norm_sq: f64,
    pub delta_sum: f64,
    pub terminal_norm_sq: f64,
    pub rel_error: f64,
}

pub fn parseval_check(ds: &DeltaSequence) -> Result<ParsevalReport, MartingaleError> {
    let s_norm_sq = square_function(ds)?.squared().integrate();
    let delta_sum: f64 = ds.delta_pp().iter().map(|d| Ok(d.square()?.integrate())).sum::<Result<f64, MartingaleError>>()?;
    let terminal_norm_sq = ds.terminal().to_piecewise().square()?.integrate();
    let scale = terminal_norm_sq.max(f64::MIN_POSITIVE);
    let rel_error = (s_norm_sq - terminal_norm_sq).abs().max((delta_sum - terminal_norm_sq).abs()) / scale;
    Ok(ParsevalReport { s_norm_sq, delta_sum, terminal_norm_sq, rel_error })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityReport {
    /// `max_{ℓ≠n} |⟨Δ_ℓ f, Δ_n g⟩| / (‖Δ_ℓ f‖₂ ‖Δ_n g‖₂)`
    pub max_rel: f64,
    pub pairs: usize,
    pub pass: bool,
}

pub fn orthogonality_check(df: &DeltaSequence, dg: &DeltaSequence) -> Result<OrthogonalityReport, MartingaleError> {
    let fs = df.delta_pp();
    let gs = dg.delta_pp();
    let nf: Vec<f64> = fs.iter().map(|d| d.lp_norm(2.0)).collect::<Result<_, _>>()?;
    let ng: Vec<f64> = gs.iter().map(|d| d.lp_norm(2.0)).collect::<Result<_, _>>()?;
    let mut max_rel: f64 = 0.0;
    let mut pairs = 0;
    for (l, a) in fs.iter().enumerate() {
        for (n, b) in gs.iter().enumerate() {
            if l == n {
                continue;
            }
            pairs += 1;
            let ip = a.mul(b)?.integrate();
            let scale = nf[l] * ng[n];
            if scale > 0.0 {
                max_rel = max_rel.max(ip.abs() / scale);
            } else if ip != 0.0 {
                max_rel = f64::INFINITY;
            }
        }
    }
    Ok(OrthogonalityReport { max_rel, pairs, pass: max_rel <= 1e-10 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignReport {
    pub s_l1: f64,
    pub sup_l1: f64,
    /// `sup_ε ‖Σ ε_n Δ_n‖₁ / ‖Sf‖₁`
    pub ratio_up: f64,
    /// `‖Sf‖₁ / sup_ε ‖Σ ε_n Δ_n‖₁`
    pub ratio_down: f64,
    pub exhaustive: bool,
    pub patterns: usize,
}

/// Estimates `sup_ε ‖Σ ε_n Δ_n f‖₁`: exact over all patterns (with `ε₁ = +1`)
/// up to [`EXHAUSTIVE_SIGN_LEVELS`] levels, else greedy plus `trials` random
/// patterns.
pub fn sign_randomized_ratio<R: Rng>(ds: &DeltaSequence, trials: usize, rng: &mut R) -> Result<SignReport, MartingaleError> {
    let s_l1 = square_function(ds)?.lp_norm(1.0)?;
    let lifted = ds.lifted_deltas()?;
    let basis = ds.terminal().basis().clone();
    let n = lifted.len();
    let l1 = |eps: &[f64]| -> Result<f64, MartingaleError> {
        let mut c = vec![0.0; basis.dim()];
        for (e, d) in eps.iter().zip(&lifted) {
            for (ci, di) in c.iter_mut().zip(d.coeffs()) {
                *ci += e * di;
            }
        }
        Ok(Spline::new(basis.clone(), c)?.to_piecewise().lp_norm(1.0)?)
    };
    let mut sup_l1: f64 = 0.0;
    let exhaustive = n <= EXHAUSTIVE_SIGN_LEVELS;
    let mut patterns = 0;
    if exhaustive {
        let count = 1usize << n.saturating_sub(1);
        for mask in 0..count {
            let eps: Vec<f64> = (0..n)
                .map(|i| if i > 0 && mask >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            sup_l1 = sup_l1.max(l1(&eps)?);
            patterns += 1;
        }
    } else {
        let mut eps = vec![0.0; n];
        eps[0] = 1.0;
        for i in 1..n {
            eps[i] = 1.0;
            let plus = l1(&eps)?;
            eps[i] = -1.0;
            let minus = l1(&eps)?;
            eps[i] = if plus >= minus { 1.0 } else { -1.0 };
        }
        sup_l1 = sup_l1.max(l1(&eps)?);
        patterns += 1;
        for _ in 0..trials {
            let eps: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
            sup_l1 = sup_l1.max(l1(&eps)?);
            patterns += 1;
        }
    }
    Ok(SignReport {
        s_l1,
        sup_l1,
        ratio_up: sup_l1 / s_l1,
        ratio_down: s_l1 / sup_l1,
        exhaustive,
        patterns,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SteinMode {
    P,
    T,
}

/// Admissible exponent pairs: `1 ≤ r ≤ p < ∞` or `1 < p ≤ r ≤ ∞`.
pub fn stein_admissible(p: f64, r: f64) -> bool {
    (1.0 <= r && r <= p && p.is_finite()) || (1.0 < p && p <= r)
}

/// `‖(P_n f_n)‖_{L_p(ℓ_r)} / ‖(f_n)‖_{L_p(ℓ_r)}`, or with `T_n` in place of `P_n`.
#[allow(clippy::too_many_arguments)]
pub fn stein_check(
    fs: &[PiecewisePolynomial],
    filtration: &Filtration,
    k: usize,
    p: f64,
    r: f64,
    mode: SteinMode,
    q: f64,
) -> Result<NormRatio, MartingaleError> {
    if !stein_admissible(p, r) {
        return Err(MartingaleError::ParameterError(format!("(p, r) = ({p}, {r}) is not admissible")));
    }
    if fs.len() > filtration.len() {
        return Err(MartingaleError::LengthMismatch { got: fs.len(), levels: filtration.len() });
    }
    let mapped = fs
        .iter()
        .enumerate()
        .map(|(n, f)| -> Result<PiecewisePolynomial, MartingaleError> {
            let level = filtration.level(n);
            Ok(match mode {
                SteinMode::P => Projector::for_partition(level, k)?.project(f)?.to_piecewise(),
                SteinMode::T => build_t(level, k, q)?.apply(f),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let lhs = lplq_norm(&mapped, p, r)?;
    let rhs = lplq_norm(fs, p, r)?;
    Ok(NormRatio::new(lhs, rhs))
}

/// A sequence with `f_n ∈ S_k(F_n)`.
#[derive(Debug, Clone)]
pub struct AdaptedSequence {
    pub filtration: Filtration,
    pub k: usize,
    pub members: Vec<Spline>,
}

impl AdaptedSequence {
    pub fn new(filtration: &Filtration, k: usize, members: Vec<Spline>) -> Result<Self, MartingaleError> {
        if members.len() > filtration.len() {
            return Err(MartingaleError::LengthMismatch { got: members.len(), levels: filtration.len() });
        }
        for (n, s) in members.iter().enumerate() {
            if s.basis().order() != k || s.basis().partition() != filtration.level(n) {
                return Err(MartingaleError::NotAdapted { level: n, residual: f64::INFINITY });
            }
        }
        Ok(Self { filtration: filtration.clone(), k, members })
    }

    /// Projects each function onto its level and rejects any with a residual
    /// above [`MEMBERSHIP_TOL`] relative to `max(1, ‖f‖∞)`.
    pub fn from_piecewise(filtration: &Filtration, k: usize, fs: &[PiecewisePolynomial]) -> Result<Self, MartingaleError> {
        if fs.len() > filtration.len() {
            return Err(MartingaleError::LengthMismatch { got: fs.len(), levels: filtration.len() });
        }
        let mut members = Vec::with_capacity(fs.len());
        for (n, f) in fs.iter().enumerate() {
            let s = Projector::for_partition(filtration.level(n), k)?.project(f)?;
            let residual = s.to_piecewise().sub(f).sup_norm() / f.sup_norm().max(1.0);
            if residual > MEMBERSHIP_TOL {
                return Err(MartingaleError::NotAdapted { level: n, residual });
            }
            members.push(s);
        }
        Ok(Self { filtration: filtration.clone(), k, members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn as_piecewise(&self) -> Vec<PiecewisePolynomial> {
        self.members.iter().map(|s| s.to_piecewise()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LepingleReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// asserted bound 2 only for `k = k' = 1`
    pub pass: Option<bool>,
}

/// `‖(P'_{n−1} f_n)‖_{L_1(ℓ_2)} / ‖(f_n)‖_{L_1(ℓ_2)}` with `P'` of order `k'`
/// and the trivial partition before the first level.
pub fn lepingle_check(fs: &AdaptedSequence, kprime: usize) -> Result<LepingleReport, MartingaleError> {
    let pp = fs.as_piecewise();
    let mapped = pp
        .iter()
        .enumerate()
        .map(|(n, f)| Ok(Projector::for_partition(&predecessor(&fs.filtration, n), kprime)?.project(f)?.to_piecewise()))
        .collect::<Result<Vec<_>, MartingaleError>>()?;
    let lhs = lplq_norm(&mapped, 1.0, 2.0)?;
    let rhs = lplq_norm(&pp, 1.0, 2.0)?;
    let r = NormRatio::new(lhs, rhs);
    let pass = (fs.k == 1 && kprime == 1).then_some(r.ratio <= 2.0 + 1e-8);
    Ok(LepingleReport { lhs, rhs, ratio: r.ratio, pass })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    /// `2 ∫ X_N^{1/2}`
    pub sigma1_bound: f64,
    pub sigma1_pass: bool,
    /// `lhs ≤ (Σ1 Σ2)^{1/2}`
    pub cauchy_schwarz_pass: bool,
}

/// `∫ num / den` over the common grid, with the integrand set to 0 where
/// `den` vanishes.
fn quotient_integral(num: &PiecewisePolynomial, den: &PiecewisePolynomial) -> Result<f64, MartingaleError> {
    let (grid, fs) = on_common_grid(&[num.clone(), den.clone()]);
    let opts = QuadOptions::default();
    let integrand = |i: usize| {
        let (a, b) = (&fs[0].pieces()[i], &fs[1].pieces()[i]);
        move |u: f64| {
            let d = poly::eval(b, u);
            if d > 0.0 {
                poly::eval(a, u) / d
            } else {
                0.0
            }
        }
    };
    let coarse: f64 = (0..grid.num_atoms())
        .map(|i| 0.5 * grid.atom_len(i) * quadrature::fixed(10, -1.0, 1.0, integrand(i)))
        .sum();
    let mut total = 0.0;
    for i in 0..grid.num_atoms() {
        let half = 0.5 * grid.atom_len(i);
        total += half * quadrature::adaptive(&integrand(i), -1.0, 1.0, coarse / half, opts).map_err(PiecewiseError::from)?;
    }
    Ok(total)
}

/// `Σ_n ∫|f_n h_n|` against `∫(Σ f_ℓ²)^{1/2} · sup_n ‖P_n(Σ_{ℓ≥n} h_ℓ²)‖_∞^{1/2}`,
/// plus the two factors `Σ1 = Σ ∫ f_n²/g_n` and `Σ2 = Σ ∫ g_n h_n²`.
pub fn main_duality_check(fs: &AdaptedSequence, hs: &[PiecewisePolynomial]) -> Result<DualityReport, MartingaleError> {
    if hs.len() != fs.len() {
        return Err(MartingaleError::LengthMismatch { got: hs.len(), levels: fs.len() });
    }
    let opts = QuadOptions::default();
    let fpp = fs.as_piecewise();
    let mut lhs = 0.0;
    for (f, h) in fpp.iter().zip(hs) {
        lhs += f.mul(h)?.integrate_abs_pow(1.0, opts)?;
    }
    let gs = build_g(fs, None)?;
    let x_half = gs.x.last().expect("nonempty").integrate_abs_pow(0.5, opts)?;
    let mut tail = PiecewisePolynomial::zero();
    let mut sup_tail: f64 = 0.0;
    for n in (0..hs.len()).rev() {
        tail = tail.add(&hs[n].square()?);
        let ph = Projector::for_partition(fs.filtration.level(n), fs.k)?.project(&tail)?.to_piecewise();
        sup_tail = sup_tail.max(ph.sup_norm());
    }
    let rhs = x_half * sup_tail.sqrt();
    let mut sigma1 = 0.0;
    let mut sigma2 = 0.0;
    for (n, (f, h)) in fpp.iter().zip(hs).enumerate() {
        let g = gs.g[n].to_piecewise();
        sigma1 += quotient_integral(&f.square()?, &g)?;
        sigma2 += g.mul(&h.square()?)?.integrate();
    }
    let sigma1_bound = 2.0 * x_half;
    Ok(DualityReport {
        lhs,
        rhs,
        ratio: NormRatio::new(lhs, rhs).ratio,
        sigma1,
        sigma2,
        sigma1_bound,
        sigma1_pass: sigma1 <= sigma1_bound + 1e-9 * sigma1_bound.max(1.0),
        cauchy_schwarz_pass: lhs <= (sigma1 * sigma2).sqrt() * (1.0 + 1e-9) + 1e-12,
    })
}

/// `∫ S_N(f)`.
pub fn h1_norm(f: &PiecewisePolynomial, filtration: &Filtration, k: usize) -> Result<f64, MartingaleError> {
    h1_norm_of(&DeltaSequence::new(filtration, k, f)?)
}

pub fn h1_norm_of(ds: &DeltaSequence) -> Result<f64, MartingaleError> {
    square_function(ds)?.lp_norm(1.0)
}

/// `max_n ‖Σ_{ℓ≥n} T_n((Δ_ℓ h)²)‖_∞^{1/2}` over the available levels.
pub fn bmo_norm(h: &PiecewisePolynomial, filtration: &Filtration, k: usize, q: f64) -> Result<f64, MartingaleError> {
    bmo_norm_of(&DeltaSequence::new(filtration, k, h)?, q)
}

pub fn bmo_norm_of(ds: &DeltaSequence, q: f64) -> Result<f64, MartingaleError> {
    let deltas = ds.delta_pp();
    let mut tail = PiecewisePolynomial::zero();
    let mut best: f64 = 0.0;
    for n in (0..deltas.len()).rev() {
        tail = tail.add(&deltas[n].square()?);
        let t = build_t(ds.filtration.level(n), ds.k, q)?;
        best = best.max(t.apply(&tail).sup_norm());
    }
    Ok(best.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingReport {
    pub pairing: f64,
    pub bound: f64,
    /// `None` when the bound vanishes
    pub ratio: Option<f64>,
    pub q: f64,
    pub pass: bool,
}

/// `∫ (P_N f)(P_N h)` against `‖f‖_{H_{1,k}} ‖h‖_{BMO_k}`.
pub fn pairing_check(
    f: &PiecewisePolynomial,
    h: &PiecewisePolynomial,
    filtration: &Filtration,
    k: usize,
    q: f64,
) -> Result<PairingReport, MartingaleError> {
    let prs = level_projectors(filtration, k)?;
    let df = DeltaSequence::with_projectors(filtration, &prs, f)?;
    let dh = DeltaSequence::with_projectors(filtration, &prs, h)?;
    let pairing = df.terminal().to_piecewise().mul(&dh.terminal().to_piecewise())?.integrate();
    let bound = h1_norm_of(&df)? * bmo_norm_of(&dh, q)?;
    if bound == 0.0 {
        return Ok(PairingReport { pairing, bound, ratio: None, q, pass: pairing.abs() <= 1e-12 });
    }
    Ok(PairingReport { pairing, bound, ratio: Some(pairing.abs() / bound), q, pass: true })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakPoint {
    pub lambda: f64,
    pub measure: f64,
    /// `λ |{sup |f_n| > λ}| / sup_n ‖f_n‖₁`
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoobReport {
    pub weak: Vec<WeakPoint>,
    pub weak_constant: f64,
    /// `‖sup_n |f_n|‖_p / sup_n ‖f_n‖_p`
    pub lp_constant: f64,
}

/// `{x : max_n |f_n(x)| ≥ λ}` by root isolation per member.
pub fn maximal_level_set(fs: &[PiecewisePolynomial], lambda: f64) -> IntervalUnion {
    fs.iter().fold(IntervalUnion::empty(), |acc, f| {
        acc.union(&f.level_set(lambda)).union(&f.scale(-1.0).level_set(lambda))
    })
}

pub fn doob_checks(ms: &MartingaleSplineSequence, p: f64, lambdas: &[f64]) -> Result<DoobReport, MartingaleError> {
    if !(p > 1.0) {
        return Err(MartingaleError::ParameterError(format!("p = {p} must exceed 1")));
    }
    let fs = ms.as_piecewise();
    let l1 = fs.iter().map(|f| f.lp_norm(1.0)).collect::<Result<Vec<_>, _>>()?.into_iter().fold(0.0, f64::max);
    let weak: Vec<WeakPoint> = lambdas
        .iter()
        .map(|&lambda| {
            let measure = maximal_level_set(&fs, lambda).measure();
            let ratio = if l1 > 0.0 { lambda * measure / l1 } else { 0.0 };
            WeakPoint { lambda, measure, ratio }
        })
        .collect();
    let weak_constant = weak.iter().map(|w| w.ratio).fold(0.0, f64::max);
    let lp = fs.iter().map(|f| f.lp_norm(p)).collect::<Result<Vec<_>, _>>()?.into_iter().fold(0.0, f64::max);
    let maxf = lplq_norm(&fs, p, f64::INFINITY)?;
    let lp_constant = if lp > 0.0 { maxf / lp } else { 0.0 };
    Ok(DoobReport { weak, weak_constant, lp_constant })
}

/// `γ_k` of every level.
pub fn gammas(filtration: &Filtration, k: usize) -> Vec<f64> {
    filtration.levels().iter().map(|p| gamma_k(p, k)).collect()
}

/// Splines with the given coefficients on the basis of each level.
pub fn adapted_from_coeffs(filtration: &Filtration, k: usize, coeffs: Vec<Vec<f64>>) -> Result<AdaptedSequence, MartingaleError> {
    let members = coeffs
        .into_iter()
        .enumerate()
        .map(|(n, c)| Ok(Spline::new(Arc::new(BSplineBasis::new(filtration.level(n).clone(), k)?), c)?))
        .collect::<Result<Vec<_>, MartingaleError>>()?;
    AdaptedSequence::new(filtration, k, members)
}
