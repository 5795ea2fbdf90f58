//! Acceptance suite: one pass/fail line per criterion, nonzero exit if any fails.

use std::time::Instant;

use rand::Rng;
use splinegale::gen::{gen_piecewise, trial_rng};
use splinegale::report::CheckReport;
use splinegale::{run_check, sweep, Axis, CheckName, ExperimentConfig, RunOutput, SweepSpec};
use splinegale_core::gseq::{build_g, verify_g};
use splinegale_core::kernel::tower_check;
use splinegale_core::martingale::adapted_from_coeffs;
use splinegale_core::{Filtration, Partition, PiecewisePolynomial, Projector};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn cfg(check: CheckName) -> ExperimentConfig {
    ExperimentConfig { check, master_seed: 20261019, ..Default::default() }
}

fn run(c: ExperimentConfig) -> RunOutput {
    run_check(&c).expect("valid config")
}

fn clean(reports: &[CheckReport]) -> bool {
    reports.iter().all(|r| r.error.is_none() && r.pass == Some(true))
}

fn max_ratio(reports: &[CheckReport]) -> f64 {
    reports.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max)
}

fn lepingle() -> Outcome {
    let start = Instant::now();
    let c = ExperimentConfig { k: 1, kprime: 1, gamma_max: 1e6, trials: 32, ..cfg(CheckName::Lepingle) };
    let values: Vec<f64> = (1..=16).map(f64::from).collect();
    let out = sweep(&c, &SweepSpec { axis: Axis::Levels, values }).unwrap();
    let reports: Vec<CheckReport> = out.points.into_iter().flat_map(|p| p.reports).collect();
    let secs = start.elapsed().as_secs_f64();
    let worst = max_ratio(&reports);
    let ok = clean(&reports) && reports.len() >= 500 && worst <= 2.0 + 1e-8 && secs <= 60.0;
    Outcome { pass: ok, detail: format!("{} trials, max ratio {worst:.6}, {secs:.1} s", reports.len()) }
}

fn kernel_bounds() -> Outcome {
    let mut partitions = 0;
    let mut violations = 0;
    let mut min_slack = f64::INFINITY;
    for k in 1..=4 {
        for q in [0.5, 0.7, 0.9] {
            let out = run(ExperimentConfig { k, q, trials: 200, levels: 8, gamma_max: 64.0, ..cfg(CheckName::Kernel) });
            for r in &out.reports {
                partitions += r.level_count;
                violations += usize::from(r.pass != Some(true) || r.error.is_some());
                min_slack = min_slack.min(r.extra["min_slack"]);
            }
        }
    }
    Outcome {
        pass: violations == 0 && min_slack >= -1e-12,
        detail: format!("{partitions} partitions, {violations} violations, min slack {min_slack:.3e}"),
    }
}

fn remez() -> Outcome {
    let mut total = 0;
    let mut failures = 0;
    for k in 1..=6 {
        let out = run(ExperimentConfig { k, trials: 1000, levels: 1, ..cfg(CheckName::Remez) });
        total += out.reports.len();
        failures += out.reports.iter().filter(|r| r.pass != Some(true) || r.error.is_some()).count();
    }
    Outcome { pass: failures == 0 && total == 6000, detail: format!("{total} polynomials, {failures} failures") }
}

fn parseval() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut seeds = 0;
    let mut ok = true;
    for k in 1..=4 {
        let c = ExperimentConfig { k, trials: 10, gamma_max: 64.0, ..cfg(CheckName::Parseval) };
        let out = sweep(&c, &SweepSpec { axis: Axis::Levels, values: vec![4.0, 8.0, 12.0, 16.0, 20.0] }).unwrap();
        for p in &out.points {
            seeds += p.reports.len();
            ok &= clean(&p.reports);
            worst = worst.max(max_ratio(&p.reports));
        }
        let b = run(ExperimentConfig { k, trials: 10, levels: 20, gamma_max: 64.0, p: 2.0, ..cfg(CheckName::Burkholder) });
        ok &= clean(&b.reports);
        worst = worst.max(b.reports.iter().map(|r| (r.ratio * r.ratio - 1.0).abs()).fold(0.0, f64::max));
    }
    Outcome { pass: ok && seeds >= 200 && worst <= 1e-9, detail: format!("{seeds} seeds, max relative error {worst:.3e}") }
}

fn conditional_expectation() -> Outcome {
    let mut proj_err: f64 = 0.0;
    for seed in 0..100u64 {
        let mut rng = trial_rng(seed);
        let mut p = Partition::trivial();
        for _ in 0..rng.random_range(1..30) {
            let i = rng.random_range(0..p.num_atoms());
            p = p.split_atom(i, rng.random_range(0.1..0.9)).unwrap();
        }
        let grid = p.common_refinement(&Partition::uniform(7));
        let f: PiecewisePolynomial = gen_piecewise(&grid, 4, &mut rng);
        let s = Projector::for_partition(&p, 1).unwrap().project(&f).unwrap();
        for (i, &(lo, hi)) in p.atoms().iter().enumerate() {
            let avg = f.integrate_over(lo, hi) / (hi - lo);
            proj_err = proj_err.max((s.coeffs()[i] - avg).abs() / avg.abs().max(1.0));
        }
    }
    let shadrin = run(ExperimentConfig { k: 1, trials: 100, levels: 12, gamma_max: 64.0, ..cfg(CheckName::Shadrin) });
    let norm_err = shadrin.reports.iter().map(|r| (r.ratio - 1.0).abs().max((r.lhs - 1.0).abs())).fold(0.0, f64::max);
    let mut stein_max: f64 = 0.0;
    let mut ok = clean(&shadrin.reports);
    for p in [1.0, 2.0] {
        let out = run(ExperimentConfig { k: 1, p, r: p, trials: 100, levels: 10, gamma_max: 64.0, ..cfg(CheckName::Stein) });
        ok &= clean(&out.reports);
        stein_max = stein_max.max(max_ratio(&out.reports));
    }
    Outcome {
        pass: ok && proj_err <= 1e-12 && norm_err <= 1e-10 && stein_max <= 1.0 + 1e-9,
        detail: format!("average error {proj_err:.2e}, |norm - 1| {norm_err:.2e}, max Stein ratio {stein_max:.6}"),
    }
}

fn g_properties() -> Outcome {
    let mut seeds = 0;
    let mut ok = true;
    let mut table = Vec::new();
    for k in 1..=3 {
        let out = run(ExperimentConfig { k, trials: 167, levels: 12, gamma_max: 4.0, ..cfg(CheckName::GProps) });
        seeds += out.reports.len();
        ok &= clean(&out.reports);
        ok &= out.reports.iter().all(|r| r.ratio.is_finite() && r.lhs >= -1e-10 && r.rhs >= -1e-10);
        table.push(format!("k={k}: max ratio {:.3} at max gamma {:.2}", out.summary.max_ratio, out.summary.max_gamma));
    }
    let f = Filtration::dyadic(1);
    let a = adapted_from_coeffs(&f, 1, vec![vec![1.0], vec![2.0, 0.0]]).unwrap();
    let fixture = verify_g(&build_g(&a, None).unwrap()).unwrap().ratios[1];
    ok &= (fixture - 1.0).abs() <= 1e-12;
    Outcome { pass: ok && seeds >= 500, detail: format!("{seeds} seeds; {}; fixture ratio {fixture:.15}", table.join(", ")) }
}

fn phi() -> Outcome {
    let out = run(ExperimentConfig { trials: 1000, levels: 10, gamma_max: 64.0, ..cfg(CheckName::Phi) });
    let exhausted = out.reports.iter().filter(|r| r.extra.contains_key("exhausted")).count();
    let worst = out.reports.iter().map(|r| r.lhs).fold(0.0, f64::max);
    Outcome {
        pass: clean(&out.reports) && exhausted == 0 && out.reports.len() == 1000,
        detail: format!("1000 instances, {exhausted} exhaustions, max measure error {worst:.2e}"),
    }
}

fn sigma1() -> Outcome {
    let mut ok = true;
    let mut table = Vec::new();
    for k in 1..=3 {
        let out = run(ExperimentConfig { k, trials: 100, levels: 8, gamma_max: 4.0, ..cfg(CheckName::Duality) });
        ok &= clean(&out.reports);
        ok &= out.reports.iter().all(|r| r.ratio.is_finite() && r.extra["sigma1"] <= r.extra["sigma1_bound"] + 1e-9);
        table.push(format!("k={k}: max ratio {:.3} (gamma <= {:.2})", out.summary.max_ratio, out.summary.max_gamma));
    }
    Outcome { pass: ok, detail: table.join(", ") }
}

fn tower() -> Outcome {
    let mut ok = true;
    let mut table = Vec::new();
    for q in [0.55, 0.7, 0.9] {
        let out = run(ExperimentConfig { k: 2, kprime: 2, q, sigma: 0.5, tau: 0.5, trials: 30, levels: 8, ..cfg(CheckName::Tower) });
        ok &= clean(&out.reports);
        table.push(format!("q={q}: C_hat <= {:.3}", out.summary.max_ratio));
    }
    let one = PiecewisePolynomial::constant(1.0);
    let single = tower_check(&Partition::trivial(), &Partition::trivial(), 1, 1, 0.5, 0.5, 0.8, &one).unwrap().c_hat;
    ok &= (single - 1.0).abs() <= 1e-12;
    Outcome { pass: ok, detail: format!("{}; single atom C_hat {single}", table.join(", ")) }
}

fn orthogonality() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    let mut ok = true;
    for k in 1..=4 {
        let out = run(ExperimentConfig { k, trials: 25, levels: 10, gamma_max: 64.0, ..cfg(CheckName::Orthogonality) });
        pairs += out.reports.len();
        ok &= clean(&out.reports);
        worst = worst.max(max_ratio(&out.reports));
    }
    Outcome { pass: ok && pairs == 100 && worst <= 1e-10, detail: format!("{pairs} pairs, max relative inner product {worst:.2e}") }
}

fn determinism() -> Outcome {
    let mut same = 0;
    let mut total = 0;
    for check in CheckName::ALL {
        let c = ExperimentConfig { trials: 6, levels: 6, ..cfg(check) };
        let a = run(c.clone()).canonical_json().unwrap();
        let b = run(c).canonical_json().unwrap();
        total += 1;
        same += usize::from(a == b);
    }
    let c = ExperimentConfig { trials: 4, levels: 5, ..cfg(CheckName::Signs) };
    let spec = SweepSpec { axis: Axis::K, values: vec![1.0, 2.0, 3.0] };
    let a = sweep(&c, &spec).unwrap().canonical_json().unwrap();
    let b = sweep(&c, &spec).unwrap().canonical_json().unwrap();
    total += 1;
    same += usize::from(a == b);
    Outcome { pass: same == total, detail: format!("{same}/{total} configs byte-identical") }
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("Lepingle constant 2 for k = k' = 1", lepingle),
        ("kernel bounds k <= K_x <= 2(k+1)/(1-q)", kernel_bounds),
        ("Remez bound and level measure", remez),
        ("Parseval and Burkholder at p = 2", parseval),
        ("conditional expectation oracle (k = 1)", conditional_expectation),
        ("g sequence properties (1)-(3)", g_properties),
        ("greedy disjoint subsets", phi),
        ("Sigma1 telescoping bound", sigma1),
        ("tower property", tower),
        ("orthogonality of differences", orthogonality),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        failed += usize::from(!o.pass);
        println!(
            "criterion {:>2} {}: {} ({}; {:.1} s)",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
