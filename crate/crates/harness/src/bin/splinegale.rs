use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use splinegale::gen::trial_rng;
use splinegale::report::Summary;
use splinegale::{gen_filtration, run_check, sweep, trial_seed, ExperimentConfig, HarnessError, RunOutput, SweepOutput};

#[derive(Parser)]
#[command(name = "splinegale", version, about = "Spline martingale inequality experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config
    #[arg(long)]
    config: PathBuf,
    /// overrides master_seed
    #[arg(long)]
    seed: Option<u64>,
    /// output directory (defaults to the config's `output`, then `out`)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one filtration and print it as JSON
    Gen(Common),
    /// Run the configured check
    Check(Common),
    /// Run the configured check over the config's sweep axis
    Sweep(Common),
    /// Summarize a report.json or sweep.json written earlier
    Report {
        /// report file, or a directory containing one
        #[arg(long)]
        input: PathBuf,
    },
}

fn load(c: &Common) -> Result<(ExperimentConfig, PathBuf), HarnessError> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.master_seed = s;
    }
    let out = c.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    Ok((cfg, out))
}

fn print_summary(label: &str, s: &Summary) {
    let pass = match s.pass {
        Some(true) => "pass",
        Some(false) => "FAIL",
        None => "recorded",
    };
    println!(
        "{label}{}: {pass} trials={} failures={} errors={} max_ratio={:.6e} median_ratio={:.6e} max_gamma={:.4}",
        s.check, s.trials, s.failures, s.errors, s.max_ratio, s.median_ratio, s.max_gamma
    );
}

fn report(input: &Path) -> Result<bool, HarnessError> {
    let path = if input.is_dir() {
        let r = input.join("report.json");
        if r.exists() {
            r
        } else {
            input.join("sweep.json")
        }
    } else {
        input.to_path_buf()
    };
    let text = std::fs::read_to_string(&path)?;
    if let Ok(run) = serde_json::from_str::<RunOutput>(&text) {
        print_summary("", &run.summary);
        return Ok(run.passed());
    }
    let sw: SweepOutput = serde_json::from_str(&text)?;
    for p in &sw.points {
        print_summary(&format!("{:?}={} ", sw.axis, p.value), &p.summary);
    }
    Ok(sw.passed())
}

fn run(cli: Cli) -> Result<bool, HarnessError> {
    match cli.command {
        Command::Gen(c) => {
            let (cfg, _) = load(&c)?;
            let g = gen_filtration(&cfg, &mut trial_rng(trial_seed(cfg.master_seed, 0, 0)))?;
            println!("{}", serde_json::to_string_pretty(&g)?);
            Ok(true)
        }
        Command::Check(c) => {
            let (cfg, out) = load(&c)?;
            let r = run_check(&cfg)?;
            r.write_files(&out)?;
            print_summary("", &r.summary);
            Ok(r.passed())
        }
        Command::Sweep(c) => {
            let (cfg, out) = load(&c)?;
            let spec = cfg.sweep.clone().ok_or_else(|| HarnessError::InvalidConfig("config has no sweep section".into()))?;
            let r = sweep(&cfg, &spec)?;
            r.write_files(&out)?;
            for p in &r.points {
                print_summary(&format!("{:?}={} ", r.axis, p.value), &p.summary);
            }
            Ok(r.passed())
        }
        Command::Report { input } => report(&input),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
