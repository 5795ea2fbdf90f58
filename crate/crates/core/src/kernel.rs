//! The positive operators `T_{F,q,k}` with kernel
//! `Σ_{i,j} q^{|i−j|} |E_ij|^{-1} 1_{E_i}(t) 1_{E_j}(x)`, and the checks built
//! on them: Jensen, pointwise domination of `P`, tower and kernel products.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bspline::{gamma_k, BSplineBasis, BSplineError};
use crate::partition::{is_refinement, Filtration, Partition};
use crate::piecewise::{PiecewiseError, PiecewisePolynomial};
use crate::projection::{ProjectionError, Projector};
use crate::quadrature::QuadOptions;

pub const DEFAULT_MAXIMAL_GRID: usize = 256;
pub const DEFAULT_EXP_CAP: f64 = 8.0;

const KERNEL_SLACK: f64 = 1e-12;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum KernelError {
    #[error("decay base q = {0} must lie in (0, 1)")]
    InvalidQ(f64),

    #[error("K_x = {kx} on atom {atom} violates {lo} <= K_x <= {hi}")]
    BoundViolation { atom: usize, kx: f64, lo: f64, hi: f64 },

    #[error("function is identically zero")]
    ZeroFunction,

    #[error("invalid parameters: {0}")]
    ParameterError(String),

    #[error("fine partition does not refine the coarse one")]
    NotARefinement,

    #[error("operators live on different partitions")]
    PartitionMismatch,

    #[error(transparent)]
    BSpline(#[from] BSplineError),

    #[error(transparent)]
    Piecewise(#[from] PiecewiseError),

    #[error(transparent)]
    Projection(#[from] ProjectionError),
}

/// Kernel of `T_{F,q,k}`, constant on every atom × atom cell of `F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelOperator {
    partition: Partition,
    k: usize,
    q: f64,
    // cells[a * m + b]: x in atom a, t in atom b
    cells: Vec<f64>,
    kx: Vec<f64>,
}

/// Upper bound `2(k + 1)/(1 − q)` on `K_x`.
pub fn kx_upper(k: usize, q: f64) -> f64 {
    2.0 * (k as f64 + 1.0) / (1.0 - q)
}

pub fn build_t(p: &Partition, k: usize, q: f64) -> Result<KernelOperator, KernelError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(KernelError::InvalidQ(q));
    }
    let basis = BSplineBasis::new(p.clone(), k)?;
    let m = p.num_atoms();
    let mut cells = vec![0.0; m * m];
    for a in 0..m {
        // supports containing atom a are a ..= a + k − 1
        for b in a..m {
            let mut v = 0.0;
            for j in a..a + k {
                for i in b..b + k {
                    let (lo, hi) = basis.hull(i, j);
                    v += q.powi(i.abs_diff(j) as i32) / (hi - lo);
                }
            }
            cells[a * m + b] = v;
            cells[b * m + a] = v;
        }
    }
    let kx: Vec<f64> = (0..m)
        .map(|a| (0..m).map(|b| cells[a * m + b] * p.atom_len(b)).sum())
        .collect();
    let (lo, hi) = (k as f64, kx_upper(k, q));
    for (atom, &v) in kx.iter().enumerate() {
        if v < lo - KERNEL_SLACK || v > hi + KERNEL_SLACK {
            return Err(KernelError::BoundViolation { atom, kx: v, lo, hi });
        }
    }
    Ok(KernelOperator { partition: p.clone(), k, q, cells, kx })
}

/// Per-atom slack of `k ≤ K_x ≤ 2(k+1)/(1−q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelBoundReport {
    pub min_kx: f64,
    pub max_kx: f64,
    pub lower_slack: f64,
    pub upper_slack: f64,
    pub pass: bool,
}

impl KernelOperator {
    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn num_atoms(&self) -> usize {
        self.partition.num_atoms()
    }

    pub fn cell(&self, a: usize, b: usize) -> f64 {
        self.cells[a * self.num_atoms() + b]
    }

    /// `K(x, t)`.
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        self.cell(self.partition.locate(x), self.partition.locate(t))
    }

    /// `K_x` per atom.
    pub fn kx(&self) -> &[f64] {
        &self.kx
    }

    pub fn kx_at(&self, x: f64) -> f64 {
        self.kx[self.partition.locate(x)]
    }

    pub fn bound_report(&self) -> KernelBoundReport {
        let min_kx = self.kx.iter().copied().fold(f64::INFINITY, f64::min);
        let max_kx = self.kx.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lower_slack = min_kx - self.k as f64;
        let upper_slack = kx_upper(self.k, self.q) - max_kx;
        KernelBoundReport {
            min_kx,
            max_kx,
            lower_slack,
            upper_slack,
            pass: lower_slack >= -KERNEL_SLACK && upper_slack >= -KERNEL_SLACK,
        }
    }

    /// `T` applied to the vector of atom integrals `∫_b f`.
    pub fn apply_to_integrals(&self, ints: &[f64]) -> Vec<f64> {
        let m = self.num_atoms();
        (0..m)
            .map(|a| (0..m).map(|b| self.cells[a * m + b] * ints[b]).sum())
            .collect()
    }

    fn atom_integrals(&self, f: &PiecewisePolynomial) -> Vec<f64> {
        self.partition.atoms().iter().map(|&(lo, hi)| f.integrate_over(lo, hi)).collect()
    }

    fn abs_atom_integrals(&self, f: &PiecewisePolynomial) -> Result<Vec<f64>, KernelError> {
        let opts = QuadOptions::default();
        self.partition
            .atoms()
            .iter()
            .map(|&(lo, hi)| Ok(f.integrate_abs_pow_over(1.0, lo, hi, opts)?))
            .collect()
    }

    /// `Tf`, exact and piecewise constant on the partition.
    pub fn apply(&self, f: &PiecewisePolynomial) -> PiecewisePolynomial {
        let vals = self.apply_to_integrals(&self.atom_integrals(f));
        PiecewisePolynomial::step(self.partition.clone(), &vals)
    }

    /// `T|f|`.
    pub fn apply_abs(&self, f: &PiecewisePolynomial) -> Result<PiecewisePolynomial, KernelError> {
        let vals = self.apply_to_integrals(&self.abs_atom_integrals(f)?);
        Ok(PiecewisePolynomial::step(self.partition.clone(), &vals))
    }
}

/// Default decay base: `q̂` from the dual-matrix fit rounded up to
/// `{0.5, 0.7, 0.9}`, or `q̂` itself when it exceeds 0.9 but stays below 1.
pub fn default_q(p: &Partition, k: usize) -> Result<f64, KernelError> {
    let q_hat = Projector::for_partition(p, k)?.decay_fit().q_hat;
    Ok(round_up_q(q_hat))
}

pub fn round_up_q(q_hat: f64) -> f64 {
    [0.5, 0.7, 0.9]
        .into_iter()
        .find(|&c| q_hat <= c)
        .unwrap_or(if q_hat < 1.0 { q_hat } else { 0.9 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phi {
    Square,
    Abs,
    /// `e^y` up to the cap and its tangent line beyond, still convex.
    ExpCapped,
}

impl Phi {
    pub fn apply(self, y: f64) -> f64 {
        match self {
            Phi::Square => y * y,
            Phi::Abs => y.abs(),
            Phi::ExpCapped => {
                if y <= DEFAULT_EXP_CAP {
                    y.exp()
                } else {
                    DEFAULT_EXP_CAP.exp() * (1.0 + y - DEFAULT_EXP_CAP)
                }
            }
        }
    }
}

/// Where `K_x` sits inside `T(φ(K_x f))(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JensenReading {
    /// `K_x` frozen at the outer point `x`
    #[default]
    Frozen,
    /// `K_t` varying with the integration variable
    Inner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JensenReport {
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// `max_x (LHS − RHS) / max(1, |RHS|)`
    pub max_violation: f64,
    pub pass: bool,
}

fn phi_integral(f: &PiecewisePolynomial, phi: Phi, scale: f64, lo: f64, hi: f64) -> Result<f64, KernelError> {
    let g = f.scale(scale);
    let opts = QuadOptions::default();
    Ok(match phi {
        Phi::Square => g.square()?.integrate_over(lo, hi),
        Phi::Abs => g.integrate_abs_pow_over(1.0, lo, hi, opts)?,
        Phi::ExpCapped => g.integrate_map_over(|y| phi.apply(y), lo, hi, opts)?,
    })
}

/// `φ(Tf(x)) ≤ K_x^{-1} T(φ(K f))(x)` per atom.
pub fn jensen_check(t: &KernelOperator, f: &PiecewisePolynomial, phi: Phi, reading: JensenReading) -> Result<JensenReport, KernelError> {
    let tf = t.apply_to_integrals(&t.atom_integrals(f));
    let atoms = t.partition.atoms();
    let m = atoms.len();
    let lhs: Vec<f64> = tf.iter().map(|&v| phi.apply(v)).collect();
    let mut rhs = vec![0.0; m];
    match reading {
        JensenReading::Frozen => {
            for a in 0..m {
                let ints = atoms
                    .iter()
                    .map(|&(lo, hi)| phi_integral(f, phi, t.kx[a], lo, hi))
                    .collect::<Result<Vec<_>, _>>()?;
                rhs[a] = (0..m).map(|b| t.cell(a, b) * ints[b]).sum::<f64>() / t.kx[a];
            }
        }
        JensenReading::Inner => {
            let ints = atoms
                .iter()
                .enumerate()
                .map(|(b, &(lo, hi))| phi_integral(f, phi, t.kx[b], lo, hi))
                .collect::<Result<Vec<_>, _>>()?;
            let tphi = t.apply_to_integrals(&ints);
            for a in 0..m {
                rhs[a] = tphi[a] / t.kx[a];
            }
        }
    }
    let max_violation = lhs
        .iter()
        .zip(&rhs)
        .map(|(l, r)| (l - r) / r.abs().max(1.0))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(JensenReport { pass: max_violation <= 1e-10, lhs, rhs, max_violation })
}

/// Certified lower bound of the Hardy–Littlewood maximal function of `f`:
/// averages of `|f|` over intervals with endpoints from a candidate set.
#[derive(Debug, Clone)]
pub struct MaximalEstimator {
    f: PiecewisePolynomial,
    points: Vec<f64>,
    prefix: Vec<f64>,
}

impl MaximalEstimator {
    pub fn new(f: &PiecewisePolynomial, grid_size: usize) -> Result<Self, KernelError> {
        let mut points: Vec<f64> = (0..=grid_size).map(|j| j as f64 / grid_size as f64).collect();
        points.extend_from_slice(f.grid().breakpoints());
        points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        points.dedup();
        let opts = QuadOptions::default();
        let mut prefix = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        prefix.push(0.0);
        for w in points.windows(2) {
            acc += f.integrate_abs_pow_over(1.0, w[0], w[1], opts)?;
            prefix.push(acc);
        }
        Ok(Self { f: f.clone(), points, prefix })
    }

    fn prefix_at(&self, x: f64) -> Result<f64, KernelError> {
        let i = self.points.partition_point(|&p| p <= x) - 1;
        if self.points[i] == x {
            return Ok(self.prefix[i]);
        }
        Ok(self.prefix[i] + self.f.integrate_abs_pow_over(1.0, self.points[i], x, QuadOptions::default())?)
    }

    pub fn lower(&self, x: f64) -> Result<f64, KernelError> {
        let px = self.prefix_at(x)?;
        let split = self.points.partition_point(|&p| p < x);
        let mut left: Vec<(f64, f64)> = self.points[..split].iter().copied().zip(self.prefix[..split].iter().copied()).collect();
        let mut right: Vec<(f64, f64)> = self.points[split..].iter().copied().zip(self.prefix[split..].iter().copied()).collect();
        left.push((x, px));
        right.push((x, px));
        let mut best: f64 = 0.0;
        for &(a, pa) in &left {
            for &(b, pb) in &right {
                if b > a {
                    best = best.max((pb - pa) / (b - a));
                }
            }
        }
        Ok(best)
    }
}

pub fn maximal_lower(f: &PiecewisePolynomial, x: f64) -> Result<f64, KernelError> {
    MaximalEstimator::new(f, DEFAULT_MAXIMAL_GRID)?.lower(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    /// `max_atoms ‖Pf‖_{L∞(atom)} / T|f|`
    pub c1_hat: f64,
    /// `max_x T|f|(x) / M_lower f(x)`, an upper estimate of the true constant
    pub c2_hat: f64,
}

pub fn domination_check(pr: &Projector, t: &KernelOperator, f: &PiecewisePolynomial) -> Result<DominationReport, KernelError> {
    domination_check_with(pr, t, f, DEFAULT_MAXIMAL_GRID)
}

pub fn domination_check_with(
    pr: &Projector,
    t: &KernelOperator,
    f: &PiecewisePolynomial,
    grid_size: usize,
) -> Result<DominationReport, KernelError> {
    if pr.partition() != t.partition() || pr.order() != t.order() {
        return Err(KernelError::PartitionMismatch);
    }
    if f.sup_norm() == 0.0 {
        return Err(KernelError::ZeroFunction);
    }
    let pf = pr.project(f)?.to_piecewise();
    let tabs = t.apply_to_integrals(&t.abs_atom_integrals(f)?);
    let atoms = t.partition.atoms();
    let c1_hat = atoms
        .iter()
        .enumerate()
        .map(|(a, &(lo, hi))| pf.sup_norm_on(lo, hi) / tabs[a])
        .fold(0.0, f64::max);
    let est = MaximalEstimator::new(f, grid_size)?;
    let mut xs: Vec<f64> = atoms.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect();
    xs.extend((0..=grid_size).map(|j| j as f64 / grid_size as f64));
    let mut c2_hat: f64 = 0.0;
    for x in xs {
        let m = est.lower(x)?;
        c2_hat = c2_hat.max(tabs[t.partition.locate(x)] / m);
    }
    Ok(DominationReport { c1_hat, c2_hat })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerReport {
    pub c_hat: f64,
    pub gamma: f64,
    pub st_f: Vec<f64>,
    pub t_abs: Vec<f64>,
}

/// `|S T f| ≤ C γ_k(G)^k T_{G,q,k}|f|` with `S = T_{G,σ,k}`, `T = T_{F,τ,k'}`.
#[allow(clippy::too_many_arguments)]
pub fn tower_check(
    coarse: &Partition,
    fine: &Partition,
    k: usize,
    kprime: usize,
    sigma: f64,
    tau: f64,
    q: f64,
    f: &PiecewisePolynomial,
) -> Result<TowerReport, KernelError> {
    if !(q > sigma.max(tau)) || q >= 1.0 {
        return Err(KernelError::ParameterError(format!("need max(sigma, tau) < q < 1, got sigma={sigma}, tau={tau}, q={q}")));
    }
    if !is_refinement(fine, coarse) {
        return Err(KernelError::NotARefinement);
    }
    let s = build_t(coarse, k, sigma)?;
    let t = build_t(fine, kprime, tau)?;
    let u = build_t(coarse, k, q)?;
    let st_f = s.apply(&t.apply(f)).pieces().iter().map(|c| c[0]).collect::<Vec<_>>();
    let t_abs = u.apply_to_integrals(&u.abs_atom_integrals(f)?);
    let gamma = gamma_k(coarse, k);
    let gk = gamma.powi(k as i32);
    let c_hat = st_f
        .iter()
        .zip(&t_abs)
        .map(|(a, b)| if *a == 0.0 { 0.0 } else { a.abs() / (gk * b) })
        .fold(0.0, f64::max);
    Ok(TowerReport { c_hat, gamma, st_f, t_abs })
}

/// Minimal `C` with `∫ K_S(x,t) K_T(t,s) dt ≤ C γ^k K_{G,q,k}(x,s)` on every cell.
pub fn kernel_product_check(s: &KernelOperator, t: &KernelOperator, q: f64) -> Result<f64, KernelError> {
    let coarse = s.partition();
    let fine = t.partition();
    if !is_refinement(fine, coarse) {
        return Err(KernelError::NotARefinement);
    }
    if !(q > s.q().max(t.q())) || q >= 1.0 {
        return Err(KernelError::ParameterError(format!("need max(sigma, tau) < q < 1, got q={q}")));
    }
    let u = build_t(coarse, s.order(), q)?;
    let gk = gamma_k(coarse, s.order()).powi(s.order() as i32);
    let parent: Vec<usize> = fine.atoms().iter().map(|&(lo, hi)| coarse.locate(0.5 * (lo + hi))).collect();
    let mut worst: f64 = 0.0;
    for a in 0..coarse.num_atoms() {
        for c in 0..fine.num_atoms() {
            let lhs: f64 = (0..fine.num_atoms()).map(|b| s.cell(a, parent[b]) * t.cell(b, c) * fine.atom_len(b)).sum();
            worst = worst.max(lhs / (gk * u.cell(a, parent[c])));
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToolLepingleReport {
    pub lhs_p: f64,
    pub lhs_t: f64,
    pub rhs: f64,
    pub ratio_p: f64,
    pub ratio_t: f64,
}

/// Level `n` of the filtration with the trivial partition standing in for
/// the level before the first.
pub(crate) fn predecessor(filtration: &Filtration, l: usize) -> Partition {
    if l == 0 {
        Partition::trivial()
    } else {
        filtration.level(l - 1).clone()
    }
}

/// `‖Σ_{ℓ≥n} P_n((P'_{ℓ−1} f_ℓ)²)‖_p`, the same with `T_n`, and
/// `γ_k(F_n)^k ‖Σ_{ℓ≥n} f_ℓ²‖_p`. `fs[ℓ]` belongs to level `ℓ`.
#[allow(clippy::too_many_arguments)]
pub fn tool_lepingle_check(
    filtration: &Filtration,
    k: usize,
    kprime: usize,
    n: usize,
    fs: &[PiecewisePolynomial],
    p: f64,
    q: f64,
) -> Result<ToolLepingleReport, KernelError> {
    if fs.len() > filtration.len() || n >= fs.len() {
        return Err(KernelError::ParameterError(format!("level {n} outside the {} given functions", fs.len())));
    }
    let mut sq = PiecewisePolynomial::zero();
    let mut fsq = PiecewisePolynomial::zero();
    for (l, f) in fs.iter().enumerate().skip(n) {
        let pr = Projector::for_partition(&predecessor(filtration, l), kprime)?;
        let g = pr.project(f)?.to_piecewise();
        sq = sq.add(&g.square()?);
        fsq = fsq.add(&f.square()?);
    }
    let level = filtration.level(n);
    let pn = Projector::for_partition(level, k)?.project(&sq)?.to_piecewise();
    let tn = build_t(level, k, q)?.apply(&sq);
    let lhs_p = pn.lp_norm(p)?;
    let lhs_t = tn.lp_norm(p)?;
    let rhs = gamma_k(level, k).powi(k as i32) * fsq.lp_norm(p)?;
    Ok(ToolLepingleReport { lhs_p, lhs_t, rhs, ratio_p: lhs_p / rhs, ratio_t: lhs_t / rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn part(b: &[f64]) -> Partition {
        Partition::new(b.to_vec()).unwrap()
    }

    fn random_partition(rng: &mut ChaCha8Rng, atoms: usize) -> Partition {
        let mut p = Partition::trivial();
        while p.num_atoms() < atoms {
            let i = rng.random_range(0..p.num_atoms());
            if let Ok(q) = p.split_atom(i, rng.random_range(0.25..0.75)) {
                p = q;
            }
        }
        p
    }

    fn random_pp(rng: &mut ChaCha8Rng, atoms: usize, deg: usize) -> PiecewisePolynomial {
        let grid = random_partition(rng, atoms);
        let globals: Vec<Vec<f64>> = (0..atoms).map(|_| (0..=deg).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        PiecewisePolynomial::from_global_pieces(grid, &globals)
    }

    fn half_indicator() -> PiecewisePolynomial {
        PiecewisePolynomial::step(part(&[0.0, 0.5, 1.0]), &[1.0, 0.0])
    }

    #[test]
    fn two_atom_example() {
        let t = build_t(&part(&[0.0, 0.5, 1.0]), 1, 0.5).unwrap();
        assert_eq!((t.cell(0, 0), t.cell(1, 1)), (2.0, 2.0));
        assert_eq!((t.cell(0, 1), t.cell(1, 0)), (0.5, 0.5));
        assert_eq!(t.kx(), &[1.25, 1.25]);
        let one = t.apply(&PiecewisePolynomial::constant(1.0));
        assert_eq!((one.eval(0.2), one.eval(0.9)), (1.25, 1.25));
        let h = t.apply(&half_indicator());
        assert_eq!((h.eval(0.2), h.eval(0.9)), (1.0, 0.25));
        assert!(t.bound_report().pass);
    }

    #[test]
    fn single_atom_and_uniform() {
        for q in [0.1, 0.5, 0.9] {
            let t = build_t(&Partition::trivial(), 1, q).unwrap();
            assert_eq!(t.cell(0, 0), 1.0);
            assert_eq!(t.kx(), &[1.0]);
        }
        let t = build_t(&Partition::uniform(4), 2, 0.5).unwrap();
        for &v in t.kx() {
            assert!((2.0..=12.0).contains(&v));
        }
        // independent oracle: kernel evaluated from the defining sum
        let basis = BSplineBasis::new(Partition::uniform(4), 2).unwrap();
        for x in [0.1, 0.3, 0.6, 0.95] {
            for s in [0.05, 0.4, 0.7] {
                let mut want = 0.0;
                for i in 0..basis.dim() {
                    for j in 0..basis.dim() {
                        let (a, b) = basis.support(i);
                        let (c, d) = basis.support(j);
                        if a <= s && s <= b && c <= x && x <= d {
                            let (lo, hi) = basis.hull(i, j);
                            want += 0.5f64.powi(i.abs_diff(j) as i32) / (hi - lo);
                        }
                    }
                }
                assert_abs_diff_eq!(t.eval(x, s), want, epsilon = 1e-12);
            }
        }
        assert!(matches!(build_t(&Partition::trivial(), 1, 1.0), Err(KernelError::InvalidQ(_))));
    }

    #[test]
    fn bounds_positivity_and_self_adjointness() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..40 {
            let k = rng.random_range(1..=4);
            let q = [0.5, 0.7, 0.9][rng.random_range(0..3)];
            let m = rng.random_range(1..12);
            let p = random_partition(&mut rng, m);
            let t = build_t(&p, k, q).unwrap();
            let r = t.bound_report();
            assert!(r.pass && r.lower_slack >= -1e-12 && r.upper_slack >= -1e-12);
            let f = random_pp(&mut rng, 4, 2);
            let g = random_pp(&mut rng, 3, 1);
            let lhs = t.apply(&f).mul(&g).unwrap().integrate();
            let rhs = f.mul(&t.apply(&g)).unwrap().integrate();
            assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + lhs.abs()));
            let pos = f.square().unwrap();
            assert!(t.apply(&pos).pieces().iter().all(|c| c[0] >= 0.0));
            let c = kx_upper(k, q);
            assert!(t.apply(&f).lp_norm(1.0).unwrap() <= c * f.lp_norm(1.0).unwrap() * (1.0 + 1e-12));
            assert!(t.apply(&f).sup_norm() <= c * f.sup_norm() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn jensen_examples() {
        let t = build_t(&part(&[0.0, 0.5, 1.0]), 1, 0.5).unwrap();
        let c = PiecewisePolynomial::constant(1.5);
        let r = jensen_check(&t, &c, Phi::Square, JensenReading::Frozen).unwrap();
        for (l, rr) in r.lhs.iter().zip(&r.rhs) {
            assert_abs_diff_eq!(*l, *rr, epsilon = 1e-12);
            assert_abs_diff_eq!(*l, (1.5f64 * 1.25).powi(2), epsilon = 1e-12);
        }
        let r = jensen_check(&t, &half_indicator(), Phi::Square, JensenReading::Frozen).unwrap();
        assert!(r.lhs.iter().zip(&r.rhs).all(|(l, rr)| l < rr));
        assert!(r.pass);
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..100 {
            let p = random_partition(&mut rng, 5);
            let t = build_t(&p, rng.random_range(1..=3), 0.7).unwrap();
            let f = random_pp(&mut rng, 4, 2);
            for phi in [Phi::Abs, Phi::Square, Phi::ExpCapped] {
                assert!(jensen_check(&t, &f, phi, JensenReading::Frozen).unwrap().pass);
            }
            jensen_check(&t, &f, Phi::Square, JensenReading::Inner).unwrap();
        }
    }

    #[test]
    fn maximal_examples() {
        let one = PiecewisePolynomial::constant(1.0);
        for x in [0.0, 0.3, 1.0] {
            assert_abs_diff_eq!(maximal_lower(&one, x).unwrap(), 1.0, epsilon = 1e-14);
        }
        let h = half_indicator();
        assert_abs_diff_eq!(maximal_lower(&h, 0.75).unwrap(), 2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(maximal_lower(&h, 0.25).unwrap(), 1.0, epsilon = 1e-14);
        // x off the candidate grid
        assert_abs_diff_eq!(maximal_lower(&h, 0.7001).unwrap(), 0.5 / 0.7001, epsilon = 1e-12);
    }

    #[test]
    fn domination_examples() {
        let pr = Projector::for_partition(&Partition::trivial(), 1).unwrap();
        let t = build_t(&Partition::trivial(), 1, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let f = random_pp(&mut rng, 4, 1).square().unwrap();
        let r = domination_check(&pr, &t, &f).unwrap();
        assert!(r.c1_hat <= 1.0 + 1e-12);
        assert!(r.c2_hat.is_finite());
        assert!(matches!(domination_check(&pr, &t, &PiecewisePolynomial::zero()), Err(KernelError::ZeroFunction)));
        for _ in 0..20 {
            let k = rng.random_range(1..=4);
            let p = random_partition(&mut rng, 6);
            let q = default_q(&p, k).unwrap();
            let pr = Projector::for_partition(&p, k).unwrap();
            let t = build_t(&p, k, q).unwrap();
            let r = domination_check_with(&pr, &t, &random_pp(&mut rng, 3, 2), 64).unwrap();
            assert!(r.c1_hat.is_finite() && r.c2_hat.is_finite());
        }
    }

    #[test]
    fn default_q_rounding() {
        assert_eq!(round_up_q(0.0), 0.5);
        assert_eq!(round_up_q(0.6), 0.7);
        assert_eq!(round_up_q(0.85), 0.9);
        assert_eq!(round_up_q(0.95), 0.95);
        assert_eq!(round_up_q(1.3), 0.9);
        assert_eq!(default_q(&Partition::uniform(4), 1).unwrap(), 0.5);
    }

    #[test]
    fn tower_examples() {
        let one = PiecewisePolynomial::constant(1.0);
        let r = tower_check(&Partition::trivial(), &Partition::trivial(), 1, 1, 0.5, 0.5, 0.8, &one).unwrap();
        assert_abs_diff_eq!(r.c_hat, 1.0, epsilon = 1e-12);

        let coarse = part(&[0.0, 0.5, 1.0]);
        let fine = part(&[0.0, 0.25, 0.5, 1.0]);
        let r = tower_check(&coarse, &fine, 1, 1, 0.5, 0.5, 0.8, &one).unwrap();
        // hand cell sums: T over fine has K_x per fine atom; S then averages
        let t = build_t(&fine, 1, 0.5).unwrap();
        let s = build_t(&coarse, 1, 0.5).unwrap();
        let tf = t.kx().to_vec();
        let ints = [0.25 * tf[0] + 0.25 * tf[1], 0.5 * tf[2]];
        let st = s.apply_to_integrals(&ints);
        let u = build_t(&coarse, 1, 0.8).unwrap();
        let want = st.iter().zip(u.kx()).map(|(a, b)| a / b).fold(0.0, f64::max);
        assert_abs_diff_eq!(r.c_hat, want, epsilon = 1e-14);

        assert!(matches!(
            tower_check(&coarse, &fine, 1, 1, 0.5, 0.6, 0.55, &one),
            Err(KernelError::ParameterError(_))
        ));
        assert!(matches!(tower_check(&fine, &coarse, 1, 1, 0.5, 0.5, 0.8, &one), Err(KernelError::NotARefinement)));
    }

    #[test]
    fn kernel_product_examples() {
        let s = build_t(&Partition::trivial(), 1, 0.5).unwrap();
        let t = build_t(&Partition::trivial(), 1, 0.5).unwrap();
        assert_abs_diff_eq!(kernel_product_check(&s, &t, 0.8).unwrap(), 1.0, epsilon = 1e-14);
        let s = build_t(&Partition::uniform(2), 1, 0.5).unwrap();
        let t = build_t(&Partition::uniform(4), 1, 0.5).unwrap();
        let c = kernel_product_check(&s, &t, 0.8).unwrap();
        assert!(c.is_finite() && c > 0.0);
    }

    #[test]
    fn tool_lepingle_examples() {
        let f = Filtration::dyadic(2);
        let c = PiecewisePolynomial::constant(1.7);
        let r = tool_lepingle_check(&f, 1, 1, 0, &[c], 2.0, 0.5).unwrap();
        assert_abs_diff_eq!(r.lhs_p, 1.7 * 1.7, epsilon = 1e-12);
        assert_abs_diff_eq!(r.rhs, 1.7 * 1.7, epsilon = 1e-12);
        assert!(r.ratio_p <= 1.0 + 1e-12);
        // conditional-expectation oracle for the P side
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let f = Filtration::dyadic(4);
        for _ in 0..10 {
            let fs: Vec<_> = (0..f.len())
                .map(|l| {
                    let vals: Vec<f64> = (0..f.level(l).num_atoms()).map(|_| rng.random_range(-1.0..1.0)).collect();
                    PiecewisePolynomial::step(f.level(l).clone(), &vals)
                })
                .collect();
            for n in 0..f.len() {
                for p in [1.0, 2.0, f64::INFINITY] {
                    let r = tool_lepingle_check(&f, 1, 1, n, &fs, p, 0.5).unwrap();
                    assert!(r.ratio_p <= 1.0 + 1e-12);
                    assert!(r.ratio_t.is_finite());
                }
            }
        }
    }
}
