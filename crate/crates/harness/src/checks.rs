use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use splinegale_core::gseq::{greedy_phi, random_phi_instance, verify_g, GError};
use splinegale_core::kernel::{domination_check_with, jensen_check, kx_upper, tower_check, JensenReading, Phi};
use splinegale_core::martingale::{
    burkholder_ratio, doob_checks, lepingle_check, main_duality_check, orthogonality_check, pairing_check, parseval_check,
    sign_randomized_ratio, stein_check, DeltaSequence, SteinMode,
};
use splinegale_core::projection::{level_projectors, make_martingale};
use splinegale_core::remez::{remez_bound_check, remez_level_measure};
use splinegale_core::{build_g, build_t, IntervalUnion, Polynomial, Projector};

use crate::config::{validate_axis, CheckName, ExperimentConfig, SweepSpec, SCHEMA_VERSION};
use crate::gen::{gen_adapted, gen_filtration, gen_piecewise, trial_rng, trial_seed, GeneratedFiltration, SEED_SCHEME};
use crate::report::{CheckReport, RunOutput, Summary, SweepOutput, SweepPoint};
use crate::HarnessError;

pub const SIGN_TRIALS: usize = 32;
const DOOB_LAMBDAS: usize = 8;

/// What a single trial measured.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Measured {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub pass: Option<bool>,
    pub extra: BTreeMap<String, f64>,
}

impl Measured {
    fn new(lhs: f64, rhs: f64, ratio: f64, pass: Option<bool>) -> Self {
        Self { lhs, rhs, ratio, pass, extra: BTreeMap::new() }
    }

    fn with(mut self, key: &str, v: f64) -> Self {
        self.extra.insert(key.to_string(), v);
        self
    }
}

fn random_polynomial(rng: &mut ChaCha8Rng, k: usize) -> Polynomial {
    let a = rng.random_range(0.0..0.9);
    let b = rng.random_range(a + 0.05..=1.0);
    Polynomial { lo: a, hi: b, coeffs: (0..k).map(|_| rng.sample(StandardNormal)).collect() }
}

fn random_subset(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> IntervalUnion {
    let n = rng.random_range(1..=3);
    let parts = (0..n)
        .map(|_| {
            let a = rng.random_range(lo..hi);
            let b = rng.random_range(a..=hi);
            (a, b.max(a + 1e-6 * (hi - lo)).min(hi))
        })
        .collect();
    IntervalUnion::new(parts)
}

fn measure(cfg: &ExperimentConfig, g: &GeneratedFiltration, rng: &mut ChaCha8Rng) -> Result<Measured, HarnessError> {
    let f = &g.filtration;
    let finest = f.finest();
    let k = cfg.k;
    Ok(match cfg.check {
        CheckName::Shadrin => {
            let (mut lower, mut upper): (f64, f64) = (0.0, 0.0);
            let mut exact = true;
            for pr in level_projectors(f, k)? {
                let n = pr.l1_opnorm()?;
                lower = lower.max(n.lower);
                upper = upper.max(n.upper);
                exact &= n.exact;
            }
            let pass = (k == 1).then(|| (lower - 1.0).abs() <= 1e-10 && (upper - 1.0).abs() <= 1e-10);
            Measured::new(lower, upper, upper, pass).with("exact", exact as u8 as f64)
        }
        CheckName::Doob => {
            let terminal = gen_adapted(cfg, f, rng)?.members.pop().expect("nonempty");
            let sup = terminal.to_piecewise().sup_norm();
            let lambdas: Vec<f64> = (1..=DOOB_LAMBDAS).map(|i| sup * i as f64 / DOOB_LAMBDAS as f64).collect();
            let ms = make_martingale(f, k, terminal)?;
            let r = doob_checks(&ms, cfg.p, &lambdas)?;
            let lp_bound = if cfg.p.is_infinite() { 1.0 } else { cfg.p / (cfg.p - 1.0) };
            let pass = (k == 1).then_some(r.lp_constant <= lp_bound + 1e-9 && r.weak_constant <= 1.0 + 1e-12);
            Measured::new(r.lp_constant, lp_bound, r.lp_constant, pass).with("weak_constant", r.weak_constant)
        }
        CheckName::Stein => {
            let fs: Vec<_> = (0..f.len()).map(|_| gen_piecewise(finest, k, rng)).collect();
            let r = stein_check(&fs, f, k, cfg.p, cfg.r, SteinMode::P, cfg.q)?;
            let t = stein_check(&fs, f, k, cfg.p, cfg.r, SteinMode::T, cfg.q)?;
            let pass = (k == 1 && cfg.p == cfg.r && (cfg.p == 1.0 || cfg.p == 2.0)).then_some(r.ratio <= 1.0 + 1e-9);
            Measured::new(r.lhs, r.rhs, r.ratio, pass).with("ratio_t", t.ratio)
        }
        CheckName::Lepingle => {
            let a = gen_adapted(cfg, f, rng)?;
            let r = lepingle_check(&a, cfg.kprime)?;
            Measured::new(r.lhs, r.rhs, r.ratio, r.pass)
        }
        CheckName::Tower => {
            let coarse = f.level(f.len() / 2);
            let h = gen_piecewise(finest, k, rng);
            let r = tower_check(coarse, finest, k, cfg.kprime, cfg.sigma, cfg.tau, cfg.q, &h)?;
            Measured::new(r.c_hat, 1.0, r.c_hat, Some(r.c_hat.is_finite())).with("coarse_gamma", r.gamma)
        }
        CheckName::Jensen => {
            let t = build_t(finest, k, cfg.q)?;
            let h = gen_piecewise(finest, k, rng);
            let r = jensen_check(&t, &h, Phi::Square, JensenReading::Frozen)?;
            let e = jensen_check(&t, &h, Phi::ExpCapped, JensenReading::Frozen)?;
            let inner = jensen_check(&t, &h, Phi::Square, JensenReading::Inner)?;
            Measured::new(r.lhs.iter().copied().fold(f64::NAN, f64::max), r.rhs.iter().copied().fold(f64::NAN, f64::max), r.max_violation, Some(r.pass && e.pass))
                .with("exp_violation", e.max_violation)
                .with("inner_violation", inner.max_violation)
        }
        CheckName::Domination => {
            let pr = Projector::for_partition(finest, k)?;
            let t = build_t(finest, k, cfg.q)?;
            let h = gen_piecewise(finest, k, rng);
            let r = domination_check_with(&pr, &t, &h, cfg.grid_size)?;
            Measured::new(r.c1_hat, 1.0, r.c1_hat, None).with("c2_hat", r.c2_hat)
        }
        CheckName::Duality => {
            let a = gen_adapted(cfg, f, rng)?;
            let hs: Vec<_> = (0..f.len()).map(|_| gen_piecewise(finest, k, rng)).collect();
            let r = main_duality_check(&a, &hs)?;
            Measured::new(r.lhs, r.rhs, r.ratio, Some(r.sigma1_pass && r.cauchy_schwarz_pass))
                .with("sigma1", r.sigma1)
                .with("sigma2", r.sigma2)
                .with("sigma1_bound", r.sigma1_bound)
        }
        CheckName::H1bmo => {
            let a = gen_piecewise(finest, k, rng);
            let b = gen_piecewise(finest, k, rng);
            let r = pairing_check(&a, &b, f, k, cfg.q)?;
            Measured::new(r.pairing.abs(), r.bound, r.ratio.unwrap_or(f64::NAN), Some(r.pass))
                .with("degenerate", r.ratio.is_none() as u8 as f64)
                .with("q", r.q)
        }
        CheckName::GProps => {
            let a = gen_adapted(cfg, f, rng)?;
            let gs = build_g(&a, None)?;
            let empty = gs.empty_levels.len() as f64;
            match verify_g(&gs) {
                Ok(r) => Measured::new(r.monotone_slack, r.domination_slack, r.max_ratio, Some(true)).with("empty_levels", empty),
                Err(GError::PropertyViolation { property, level, x, amount }) => {
                    Measured::new(-amount, 0.0, f64::NAN, Some(false))
                        .with("property", property as f64)
                        .with("level", level as f64)
                        .with("x", x)
                }
                Err(e) => return Err(e.into()),
            }
        }
        CheckName::Phi => {
            let c1 = rng.random_range(0.05..1.0);
            let count = rng.random_range(1..=8);
            let tight = rng.random::<bool>();
            let inst = random_phi_instance(rng, f, count, c1, tight);
            match greedy_phi(&inst) {
                Ok(phi) => {
                    let mut err: f64 = 0.0;
                    let mut ok = true;
                    for (j, s) in phi.iter().enumerate() {
                        let aj = &inst.atoms[j];
                        err = err.max((s.measure() - c1 * (aj.a.1 - aj.a.0)).abs());
                        ok &= s.is_subset_of(&aj.b, 1e-12);
                        ok &= phi[j + 1..].iter().all(|t| s.overlap(t) <= 1e-12);
                    }
                    Measured::new(err, 1e-12, err, Some(ok && err <= 1e-12)).with("atoms", phi.len() as f64)
                }
                Err(GError::InternalExhaustion(j)) => Measured::new(f64::NAN, 0.0, f64::NAN, Some(false)).with("exhausted", j as f64),
                Err(e) => return Err(e.into()),
            }
        }
        CheckName::Remez => {
            let p = random_polynomial(rng, k);
            let e = random_subset(rng, p.lo, p.hi);
            let b = remez_bound_check(&p, &e, k)?;
            let l = remez_level_measure(&p, k)?;
            let ratio = if b.rhs > 0.0 { b.lhs / b.rhs } else { 0.0 };
            Measured::new(b.lhs, b.rhs, ratio, Some(b.pass && l.pass)).with("level_fraction", l.measure / p.len())
        }
        CheckName::Burkholder => {
            let h = gen_piecewise(finest, k, rng);
            let ds = DeltaSequence::new(f, k, &h)?;
            let r = burkholder_ratio(&ds, cfg.p)?;
            let pass = (cfg.p == 2.0).then(|| (r.ratio - 1.0).abs() <= 1e-9);
            Measured::new(r.lhs, r.rhs, r.ratio, pass)
        }
        CheckName::Parseval => {
            let h = gen_piecewise(finest, k, rng);
            let ds = DeltaSequence::new(f, k, &h)?;
            let r = parseval_check(&ds)?;
            let tele = ds.telescoping_residual()?;
            Measured::new(r.s_norm_sq, r.terminal_norm_sq, r.rel_error, Some(r.rel_error <= 1e-9 && tele <= 1e-10))
                .with("telescoping", tele)
        }
        CheckName::Orthogonality => {
            let prs = level_projectors(f, k)?;
            let a = DeltaSequence::with_projectors(f, &prs, &gen_piecewise(finest, k, rng))?;
            let b = DeltaSequence::with_projectors(f, &prs, &gen_piecewise(finest, k, rng))?;
            let r = orthogonality_check(&a, &b)?;
            Measured::new(r.max_rel, 1e-10, r.max_rel, Some(r.pass)).with("pairs", r.pairs as f64)
        }
        CheckName::Signs => {
            let h = gen_piecewise(finest, k, rng);
            let ds = DeltaSequence::new(f, k, &h)?;
            let r = sign_randomized_ratio(&ds, SIGN_TRIALS, rng)?;
            Measured::new(r.sup_l1, r.s_l1, r.ratio_up, None)
                .with("ratio_down", r.ratio_down)
                .with("exhaustive", r.exhaustive as u8 as f64)
                .with("patterns", r.patterns as f64)
        }
        CheckName::Stability => {
            let s = gen_adapted(cfg, f, rng)?.members.pop().expect("nonempty");
            let r = splinegale_core::bspline::stability_check(&s, cfg.p)?;
            Measured::new(r.global_ratio, r.global_ratio_inv, r.global_ratio, None)
                .with("local_ratio", r.local_ratio)
                .with("global_ratio_inv", r.global_ratio_inv)
        }
        CheckName::Decay => {
            let d = Projector::for_partition(finest, k)?.decay_fit();
            Measured::new(d.c0, 1.0, d.q_hat, None).with("slack", d.slack).with("geometric", d.geometric as u8 as f64)
        }
        CheckName::Kernel => {
            let (mut lo, mut hi, mut min_slack) = (f64::INFINITY, 0.0f64, f64::INFINITY);
            let mut pass = true;
            for level in f.levels() {
                let r = build_t(level, k, cfg.q)?.bound_report();
                lo = lo.min(r.min_kx);
                hi = hi.max(r.max_kx);
                min_slack = min_slack.min(r.lower_slack).min(r.upper_slack);
                pass &= r.pass;
            }
            let upper = kx_upper(k, cfg.q);
            Measured::new(hi, upper, hi / upper, Some(pass)).with("min_kx", lo).with("min_slack", min_slack)
        }
    })
}

/// One isolated trial; module errors are recorded in the report.
pub fn run_trial(cfg: &ExperimentConfig, trial: usize, axis: usize) -> CheckReport {
    let seed = trial_seed(cfg.master_seed, trial, axis);
    let start = Instant::now();
    let mut rng = trial_rng(seed);
    let generated = gen_filtration(cfg, &mut rng);
    let (gamma, level_count, dim) = match &generated {
        Ok(g) => (g.gamma(), g.filtration.len(), g.filtration.finest().num_atoms() + cfg.k - 1),
        Err(_) => (f64::NAN, 0, 0),
    };
    let result = generated.and_then(|g| measure(cfg, &g, &mut rng));
    let (m, error) = match result {
        Ok(m) => (m, None),
        Err(e) => (Measured::new(f64::NAN, f64::NAN, f64::NAN, None), Some(e.to_string())),
    };
    CheckReport {
        check: cfg.check,
        trial,
        seed,
        k: cfg.k,
        kprime: cfg.kprime,
        gamma,
        level_count,
        dim,
        lhs: m.lhs,
        rhs: m.rhs,
        ratio: m.ratio,
        pass: m.pass,
        error,
        extra: m.extra,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

fn run_trials(cfg: &ExperimentConfig, axis: usize) -> Vec<CheckReport> {
    (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t, axis)).collect()
}

pub fn run_check(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    cfg.validate()?;
    let reports = run_trials(cfg, 0);
    Ok(RunOutput {
        schema: SCHEMA_VERSION,
        seed_scheme: SEED_SCHEME.to_string(),
        config: cfg.clone(),
        summary: Summary::from_reports(cfg.check, &reports),
        reports,
    })
}

/// Runs every value of the axis; the axis index enters the trial seeds.
pub fn sweep(cfg: &ExperimentConfig, spec: &SweepSpec) -> Result<SweepOutput, HarnessError> {
    cfg.validate()?;
    validate_axis(spec)?;
    let configs = spec.values.iter().map(|&v| cfg.with_axis(spec.axis, v)).collect::<Result<Vec<_>, _>>()?;
    let points = configs
        .iter()
        .zip(&spec.values)
        .enumerate()
        .map(|(i, (c, &value))| {
            let reports = run_trials(c, i);
            SweepPoint { value, summary: Summary::from_reports(c.check, &reports), reports }
        })
        .collect();
    Ok(SweepOutput { schema: SCHEMA_VERSION, seed_scheme: SEED_SCHEME.to_string(), config: cfg.clone(), axis: spec.axis, points })
}
