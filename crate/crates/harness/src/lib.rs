//! Config-driven experiments over random interval filtrations: instance
//! generation, dispatch to the inequality checks of `splinegale-core`,
//! parameter sweeps and JSON/CSV reports.

pub mod checks;
pub mod config;
pub mod gen;
pub mod report;

use splinegale_core::gseq::GError;
use splinegale_core::kernel::KernelError;
use splinegale_core::martingale::MartingaleError;
use splinegale_core::remez::RemezError;
use splinegale_core::{BSplineError, PartitionError, PiecewiseError, ProjectionError};
use thiserror::Error;

pub use checks::{run_check, run_trial, sweep};
pub use config::{Axis, CheckName, ExperimentConfig, SweepSpec};
pub use gen::{gen_adapted, gen_filtration, trial_seed, GeneratedFiltration};
pub use report::{CheckReport, RunOutput, Summary, SweepOutput};

#[derive(Error, Debug)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("no admissible split found for level {level}")]
    GenerationExhausted { level: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Partition(#[from] PartitionError),

    #[error(transparent)]
    BSpline(#[from] BSplineError),

    #[error(transparent)]
    Piecewise(#[from] PiecewiseError),

    #[error(transparent)]
    Projection(#[from] ProjectionError),

    #[error(transparent)]
    Kernel(#[from] KernelError),

    #[error(transparent)]
    Martingale(#[from] MartingaleError),

    #[error(transparent)]
    G(#[from] GError),

    #[error(transparent)]
    Remez(#[from] RemezError),
}
