//! The dominating sequence `g_n ∈ S_k(F_n)` built from the partial square sums
//! `X_n = Σ_{ℓ≤n} f_ℓ²`, and the greedy selection of disjoint subsets used in
//! its integral estimate.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bspline::{BSplineBasis, BSplineError, Spline};
use crate::intervals::IntervalUnion;
use crate::martingale::AdaptedSequence;
use crate::partition::Filtration;
use crate::piecewise::{PiecewiseError, PiecewisePolynomial};
use crate::projection::{lift, ProjectionError};
use crate::quadrature::QuadOptions;

pub const G_TOL: f64 = 1e-10;
const INCLUSION_EPS: f64 = 1e-14;
const GRID_POINTS: usize = 1000;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum GError {
    #[error("property {property} fails at level {level} near x = {x} (by {amount:e})")]
    PropertyViolation { property: u8, level: usize, x: f64, amount: f64 },

    #[error("invalid instance: {0}")]
    InstanceInvalid(String),

    #[error("no room left in B_{0}")]
    InternalExhaustion(usize),

    #[error("empty sequence")]
    Empty,

    #[error(transparent)]
    BSpline(#[from] BSplineError),

    #[error(transparent)]
    Projection(#[from] ProjectionError),

    #[error(transparent)]
    Piecewise(#[from] PiecewiseError),
}

#[derive(Debug, Clone)]
pub struct GSequence {
    pub k: usize,
    pub g: Vec<Spline>,
    /// `X_n`
    pub x: Vec<PiecewisePolynomial>,
    /// `(ℓ, r)` attaining `a_{n,j}`, smallest `ℓ` then `r` on ties
    pub argmax: Vec<Vec<(usize, usize)>>,
    /// `(n, ℓ)` where no support of level `ℓ` contains any support of level `n`
    pub empty_levels: Vec<(usize, usize)>,
}

fn contains(outer: (f64, f64), inner: (f64, f64)) -> bool {
    outer.0 <= inner.0 + INCLUSION_EPS && inner.1 <= outer.1 + INCLUSION_EPS
}

/// `a_{n,j} = max { ‖X_ℓ‖_{L∞(E_{ℓ,r})}^{1/2} : ℓ ≤ n, E_{ℓ,r} ⊇ E_{n,j} }` and
/// `g_n = Σ_j a_{n,j} N_{n,j}`, for the first `upto` levels (all if `None`).
pub fn build_g(fs: &AdaptedSequence, upto: Option<usize>) -> Result<GSequence, GError> {
    let n_levels = upto.unwrap_or(fs.len()).min(fs.len());
    if n_levels == 0 {
        return Err(GError::Empty);
    }
    let mut x = Vec::with_capacity(n_levels);
    let mut acc = PiecewisePolynomial::zero();
    for s in &fs.members[..n_levels] {
        acc = acc.add(&s.to_piecewise().square()?);
        x.push(acc.clone());
    }
    let bases: Vec<&Arc<BSplineBasis>> = fs.members[..n_levels].iter().map(|s| s.basis()).collect();
    let supports: Vec<Vec<(f64, f64)>> = bases.iter().map(|b| b.supports()).collect();
    // sup of X_ℓ over each support of level ℓ
    let sups: Vec<Vec<f64>> = supports
        .iter()
        .zip(&x)
        .map(|(sup, xl)| sup.iter().map(|&(a, b)| xl.sup_norm_on(a, b).sqrt()).collect())
        .collect();
    let mut g = Vec::with_capacity(n_levels);
    let mut argmax = Vec::with_capacity(n_levels);
    let mut empty_levels = Vec::new();
    for n in 0..n_levels {
        let mut coeffs = vec![-1.0; supports[n].len()];
        let mut arg = vec![(n, 0); supports[n].len()];
        for l in 0..=n {
            let mut any = false;
            for (j, &e) in supports[n].iter().enumerate() {
                for (r, &outer) in supports[l].iter().enumerate() {
                    if !contains(outer, e) {
                        continue;
                    }
                    any = true;
                    let v = sups[l][r];
                    if v > coeffs[j] {
                        coeffs[j] = v;
                        arg[j] = (l, r);
                    }
                }
            }
            if !any {
                empty_levels.push((n, l));
            }
        }
        g.push(Spline::new(bases[n].clone(), coeffs)?);
        argmax.push(arg);
    }
    Ok(GSequence { k: fs.k, g, x, argmax, empty_levels })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GReport {
    /// `min (g_{n+1} − g_n)` relative to `max(1, ‖g_{n+1}‖∞)`
    pub monotone_slack: f64,
    /// `min (g_n² − X_n)` relative to `max(1, ‖g_n‖∞²)`
    pub domination_slack: f64,
    /// `𝔼 g_n / 𝔼 X_n^{1/2}`
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

fn grid_argmin(f: &PiecewisePolynomial) -> (f64, f64) {
    (0..=GRID_POINTS)
        .map(|i| {
            let x = i as f64 / GRID_POINTS as f64;
            (x, f.eval(x))
        })
        .fold((0.0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

/// Checks `g_n ≤ g_{n+1}`, `g_n ≥ X_n^{1/2}` (exactly per piece and on a
/// uniform grid) and reports `𝔼 g_n / 𝔼 X_n^{1/2}`.
pub fn verify_g(gs: &GSequence) -> Result<GReport, GError> {
    let opts = QuadOptions::default();
    let mut monotone_slack = f64::INFINITY;
    for n in 0..gs.g.len().saturating_sub(1) {
        let next = &gs.g[n + 1];
        let diff = next.axpy(-1.0, &lift(&gs.g[n], next.basis())?)?.to_piecewise();
        let scale = next.to_piecewise().sup_norm().max(1.0);
        let (lo, _) = diff.min_max();
        let (gx, gv) = grid_argmin(&gs.g[n + 1].to_piecewise().sub(&gs.g[n].to_piecewise()));
        let slack = lo.min(gv) / scale;
        if slack < -G_TOL {
            return Err(GError::PropertyViolation { property: 1, level: n, x: gx, amount: -slack });
        }
        monotone_slack = monotone_slack.min(slack);
    }
    let mut domination_slack = f64::INFINITY;
    let mut ratios = Vec::with_capacity(gs.g.len());
    for (n, (g, x)) in gs.g.iter().zip(&gs.x).enumerate() {
        let gp = g.to_piecewise();
        let scale = gp.sup_norm().max(1.0).powi(2);
        let diff = gp.square()?.sub(x);
        let (lo, _) = diff.min_max();
        let (gx, gv) = grid_argmin(&diff);
        let (glo, _) = gp.min_max();
        let slack = lo.min(gv).min(glo) / scale;
        if slack < -G_TOL {
            return Err(GError::PropertyViolation { property: 2, level: n, x: gx, amount: -slack });
        }
        domination_slack = domination_slack.min(slack);
        let ex = x.integrate_abs_pow(0.5, opts)?;
        let eg = gp.integrate();
        ratios.push(if ex > 0.0 { eg / ex } else { 0.0 });
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(GReport { monotone_slack, domination_slack, ratios, max_ratio })
}

/// `{x : pp(x) ≥ threshold}`.
pub fn level_set(pp: &PiecewisePolynomial, threshold: f64) -> IntervalUnion {
    pp.level_set(threshold)
}

/// `{t ∈ D : X(t) ≥ 8^{−2(k−1)} ‖X‖_{L∞(D)}}`.
pub fn remez_set(x: &PiecewisePolynomial, d: (f64, f64), k: usize) -> IntervalUnion {
    let thr = 8f64.powi(-2 * (k as i32 - 1)) * x.sup_norm_on(d.0, d.1);
    x.level_set_on(thr, d.0, d.1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiAtom {
    pub a: (f64, f64),
    pub level: usize,
    /// `D`, an atom of the level containing `A`
    pub host: (f64, f64),
    /// `B ⊆ D`
    pub b: IntervalUnion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiInstance {
    pub atoms: Vec<PhiAtom>,
    pub c1: f64,
}

const INSTANCE_TOL: f64 = 1e-12;

fn overlap(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.1.min(b.1) - a.0.max(b.0)).max(0.0)
}

impl PhiInstance {
    /// `c₁ Σ_{i : ℓ(i) ≥ ℓ(j), D_i ⊆ D_j} |A_i|`.
    pub fn demand(&self, j: usize) -> f64 {
        let aj = &self.atoms[j];
        self.c1
            * self
                .atoms
                .iter()
                .filter(|ai| ai.level >= aj.level && contains(aj.host, ai.host))
                .map(|ai| ai.a.1 - ai.a.0)
                .sum::<f64>()
    }

    pub fn validate(&self) -> Result<(), GError> {
        let bad = |m: String| Err(GError::InstanceInvalid(m));
        if !(self.c1 > 0.0) {
            return bad(format!("c1 = {}", self.c1));
        }
        for (j, aj) in self.atoms.iter().enumerate() {
            if !(aj.a.0 < aj.a.1) || !contains(aj.host, aj.a) {
                return bad(format!("A_{j} is empty or not inside D_{j}"));
            }
            if !aj.b.is_subset_of(&IntervalUnion::interval(aj.host.0, aj.host.1), INSTANCE_TOL) {
                return bad(format!("B_{j} is not inside D_{j}"));
            }
            for (i, ai) in self.atoms.iter().enumerate().skip(j + 1) {
                if overlap(ai.a, aj.a) > 0.0 {
                    return bad(format!("A_{i} and A_{j} overlap"));
                }
                if overlap(ai.host, aj.host) > 0.0 {
                    let nested = match ai.level.cmp(&aj.level) {
                        std::cmp::Ordering::Greater => contains(aj.host, ai.host),
                        std::cmp::Ordering::Less => contains(ai.host, aj.host),
                        std::cmp::Ordering::Equal => contains(ai.host, aj.host) && contains(aj.host, ai.host),
                    };
                    if !nested {
                        return bad(format!("D_{i} and D_{j} are not nested"));
                    }
                }
            }
            let need = self.demand(j);
            if aj.b.measure() < need - INSTANCE_TOL {
                return bad(format!("|B_{j}| = {} < {need}", aj.b.measure()));
            }
        }
        Ok(())
    }
}

/// Pairwise disjoint `φ(j) ⊆ B_j` with `|φ(j)| = c₁|A_j|`, taken leftmost
/// first, hosts of the finest level first.
pub fn greedy_phi(inst: &PhiInstance) -> Result<Vec<IntervalUnion>, GError> {
    inst.validate()?;
    let mut order: Vec<usize> = (0..inst.atoms.len()).collect();
    order.sort_by(|&i, &j| inst.atoms[j].level.cmp(&inst.atoms[i].level));
    let mut used = IntervalUnion::empty();
    let mut phi = vec![IntervalUnion::empty(); inst.atoms.len()];
    for j in order {
        let aj = &inst.atoms[j];
        let target = inst.c1 * (aj.a.1 - aj.a.0);
        let avail = aj.b.difference(&used);
        let sel = match avail.leftmost_subset(target) {
            Some(s) => s,
            None if avail.measure() >= target - INSTANCE_TOL => avail,
            None => return Err(GError::InternalExhaustion(j)),
        };
        used = used.union(&sel);
        phi[j] = sel;
    }
    Ok(phi)
}

/// A random instance satisfying the demand condition on a filtration,
/// with `A`'s taken among atoms of the finest level.
pub fn random_phi_instance<R: Rng>(rng: &mut R, filtration: &Filtration, count: usize, c1: f64, tight: bool) -> PhiInstance {
    let fine = filtration.finest();
    let mut idx: Vec<usize> = (0..fine.num_atoms()).collect();
    for i in (1..idx.len()).rev() {
        idx.swap(i, rng.random_range(0..=i));
    }
    idx.truncate(count.min(fine.num_atoms()));
    let mut atoms: Vec<PhiAtom> = idx
        .into_iter()
        .map(|i| {
            let a = fine.atom(i);
            let level = rng.random_range(0..filtration.len());
            let p = filtration.level(level);
            let host = p.atom(p.locate(0.5 * (a.0 + a.1)));
            PhiAtom { a, level, host, b: IntervalUnion::empty() }
        })
        .collect();
    let mut inst = PhiInstance { atoms: atoms.clone(), c1 };
    for (j, aj) in atoms.iter_mut().enumerate() {
        let need = inst.demand(j).min(aj.host.1 - aj.host.0);
        let len = aj.host.1 - aj.host.0;
        let t = if tight { need } else { need + rng.random::<f64>() * (len - need) };
        let left = rng.random::<f64>() * t;
        aj.b = IntervalUnion::new(vec![(aj.host.0, aj.host.0 + left), (aj.host.1 - (t - left), aj.host.1)]);
    }
    inst.atoms = atoms;
    inst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::martingale::adapted_from_coeffs;
    use crate::partition::Partition;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_filtration(rng: &mut ChaCha8Rng, levels: usize) -> Filtration {
        let mut p = Partition::trivial();
        let mut out = vec![p.clone()];
        while out.len() < levels {
            let i = rng.random_range(0..p.num_atoms());
            p = p.split_atom(i, rng.random_range(0.25..0.75)).unwrap();
            out.push(p.clone());
        }
        Filtration::new(out).unwrap()
    }

    fn random_adapted(rng: &mut ChaCha8Rng, f: &Filtration, k: usize) -> AdaptedSequence {
        let coeffs = f
            .levels()
            .iter()
            .map(|p| (0..p.num_atoms() + k - 1).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        adapted_from_coeffs(f, k, coeffs).unwrap()
    }

    #[test]
    fn sqrt5_fixture() {
        // f_0 = 1, f_1 = 2·1_{[0,1/2)} on the dyadic filtration, k = 1
        let f = Filtration::dyadic(1);
        let a = adapted_from_coeffs(&f, 1, vec![vec![1.0], vec![2.0, 0.0]]).unwrap();
        let gs = build_g(&a, None).unwrap();
        assert_eq!(gs.g[0].coeffs(), &[1.0]);
        assert_abs_diff_eq!(gs.g[1].coeffs()[0], 5f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(gs.g[1].coeffs()[1], 1.0, epsilon = 1e-14);
        assert_eq!(gs.argmax[1], vec![(1, 0), (0, 0)]);
        let r = verify_g(&gs).unwrap();
        assert_abs_diff_eq!(r.ratios[1], 1.0, epsilon = 1e-12);
        assert!(r.monotone_slack >= 0.0 && r.domination_slack >= 0.0);
    }

    #[test]
    fn random_sequences_satisfy_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for k in 1..=4 {
            for _ in 0..10 {
                let f = random_filtration(&mut rng, 8);
                let a = random_adapted(&mut rng, &f, k);
                let gs = build_g(&a, None).unwrap();
                let r = verify_g(&gs).unwrap();
                assert!(r.max_ratio.is_finite() && r.max_ratio >= 1.0 - 1e-12, "{r:?}");
                let partial = build_g(&a, Some(3)).unwrap();
                assert_eq!(partial.g.len(), 3);
                for n in 0..3 {
                    assert_eq!(partial.g[n].coeffs(), gs.g[n].coeffs());
                }
            }
        }
    }

    #[test]
    fn violation_is_reported() {
        let f = Filtration::dyadic(1);
        let a = adapted_from_coeffs(&f, 1, vec![vec![1.0], vec![2.0, 0.0]]).unwrap();
        let mut gs = build_g(&a, None).unwrap();
        gs.g[1] = Spline::new(gs.g[1].basis().clone(), vec![0.5, 1.0]).unwrap();
        match verify_g(&gs) {
            Err(GError::PropertyViolation { property: 1, level: 0, x, .. }) => assert!(x < 0.5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn greedy_tight_example() {
        let inst = PhiInstance {
            atoms: vec![
                PhiAtom { a: (0.5, 0.75), level: 0, host: (0.0, 1.0), b: IntervalUnion::interval(0.0, 0.25) },
                PhiAtom { a: (0.0, 0.25), level: 1, host: (0.0, 0.5), b: IntervalUnion::interval(0.0, 0.125) },
            ],
            c1: 0.5,
        };
        let phi = greedy_phi(&inst).unwrap();
        assert_eq!(phi[1].parts(), &[(0.0, 0.125)]);
        assert_eq!(phi[0].parts(), &[(0.125, 0.25)]);

        let mut short = inst.clone();
        short.atoms[0].b = IntervalUnion::interval(0.0, 0.2);
        assert!(matches!(greedy_phi(&short), Err(GError::InstanceInvalid(_))));
        let mut crossing = inst.clone();
        crossing.atoms[0] = PhiAtom { a: (0.5, 0.75), level: 1, host: (0.25, 0.75), b: IntervalUnion::interval(0.5, 0.75) };
        assert!(matches!(greedy_phi(&crossing), Err(GError::InstanceInvalid(_))));
    }

    #[test]
    fn greedy_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for trial in 0..200 {
            let f = random_filtration(&mut rng, 10);
            let c1 = rng.random_range(0.05..1.0);
            let inst = random_phi_instance(&mut rng, &f, 6, c1, trial % 2 == 0);
            let phi = greedy_phi(&inst).unwrap();
            for (j, s) in phi.iter().enumerate() {
                let aj = &inst.atoms[j];
                assert_abs_diff_eq!(s.measure(), c1 * (aj.a.1 - aj.a.0), epsilon = 1e-12);
                assert!(s.is_subset_of(&aj.b, 1e-12));
                for t in &phi[j + 1..] {
                    assert!(s.overlap(t) <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn remez_half_measure() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        for _ in 0..1000 {
            let (a, b) = (rng.random_range(0.0..0.5), rng.random_range(0.5..1.0));
            let lin = PiecewisePolynomial::from_global_pieces(
                Partition::trivial(),
                &[vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]],
            );
            let x = lin.square().unwrap();
            let e = remez_set(&x, (a, b), 2);
            assert!(e.measure() >= 0.5 * (b - a) - 1e-12);
        }
    }
}
