use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use splinegale_core::martingale::AdaptedSequence;
use splinegale_core::{gamma_k, BSplineBasis, Filtration, Partition, PiecewisePolynomial, Spline};

use crate::config::ExperimentConfig;
use crate::HarnessError;

pub const MAX_ATTEMPTS: usize = 100;

pub const SEED_SCHEME: &str = "splitmix64(splitmix64(splitmix64(master_seed) ^ trial) ^ axis)";

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn trial_seed(master: u64, trial: usize, axis: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ trial as u64) ^ axis as u64)
}

pub fn trial_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedFiltration {
    pub filtration: Filtration,
    /// `γ_k` of each level
    pub gammas: Vec<f64>,
}

impl GeneratedFiltration {
    pub fn gamma(&self) -> f64 {
        self.gammas.iter().copied().fold(1.0, f64::max)
    }
}

fn rel_position<R: Rng>(rng: &mut R, cfg: &ExperimentConfig) -> f64 {
    let (lo, hi) = cfg.split_range;
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

fn candidate<R: Rng>(rng: &mut R, cfg: &ExperimentConfig, p: &Partition) -> Result<Partition, HarnessError> {
    if cfg.elementary {
        let i = rng.random_range(0..p.num_atoms());
        return Ok(p.split_atom(i, rel_position(rng, cfg))?);
    }
    let mut chosen: Vec<usize> = (0..p.num_atoms()).filter(|_| rng.random::<f64>() < cfg.split_prob).collect();
    if chosen.is_empty() {
        chosen.push(rng.random_range(0..p.num_atoms()));
    }
    let mut next = p.clone();
    // right to left keeps the indices of unsplit atoms valid
    for &i in chosen.iter().rev() {
        next = next.split_atom(i, rel_position(rng, cfg))?;
    }
    Ok(next)
}

/// `cfg.levels` nested partitions starting from `{0, 1}`; splits that push
/// `γ_k` above `gamma_max` are resampled.
pub fn gen_filtration<R: Rng>(cfg: &ExperimentConfig, rng: &mut R) -> Result<GeneratedFiltration, HarnessError> {
    let mut p = Partition::trivial();
    let mut levels = vec![p.clone()];
    let mut gammas = vec![gamma_k(&p, cfg.k)];
    while levels.len() < cfg.levels {
        let mut accepted = None;
        for _ in 0..MAX_ATTEMPTS {
            let next = candidate(rng, cfg, &p)?;
            let g = gamma_k(&next, cfg.k);
            if g <= cfg.gamma_max {
                accepted = Some((next, g));
                break;
            }
        }
        let (next, g) = accepted.ok_or(HarnessError::GenerationExhausted { level: levels.len() })?;
        p = next;
        levels.push(p.clone());
        gammas.push(g);
    }
    Ok(GeneratedFiltration { filtration: Filtration::new(levels)?, gammas })
}

/// Standard normal coefficients on each level, scaled to unit `L_2` norm.
pub fn gen_adapted<R: Rng>(cfg: &ExperimentConfig, filtration: &Filtration, rng: &mut R) -> Result<AdaptedSequence, HarnessError> {
    let mut members = Vec::with_capacity(filtration.len());
    for level in filtration.levels() {
        let basis = Arc::new(BSplineBasis::new(level.clone(), cfg.k)?);
        let coeffs: Vec<f64> = (0..basis.dim()).map(|_| rng.sample(StandardNormal)).collect();
        let s = Spline::new(basis, coeffs)?;
        let norm = s.to_piecewise().lp_norm(2.0)?;
        members.push(if norm > 0.0 { s.scale(1.0 / norm) } else { s });
    }
    Ok(AdaptedSequence::new(filtration, cfg.k, members)?)
}

/// A piecewise polynomial of degree `< k` on `grid` with standard normal
/// global coefficients.
pub fn gen_piecewise<R: Rng>(grid: &Partition, k: usize, rng: &mut R) -> PiecewisePolynomial {
    let globals: Vec<Vec<f64>> = (0..grid.num_atoms()).map(|_| (0..k).map(|_| rng.sample(StandardNormal)).collect()).collect();
    PiecewisePolynomial::from_global_pieces(grid.clone(), &globals)
}
