use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::HarnessError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    Shadrin,
    Doob,
    Stein,
    Lepingle,
    Tower,
    Jensen,
    Domination,
    Duality,
    H1bmo,
    GProps,
    Phi,
    Remez,
    Burkholder,
    Stability,
    Decay,
    Kernel,
    Parseval,
    Orthogonality,
    Signs,
}

impl CheckName {
    pub const ALL: [CheckName; 19] = [
        CheckName::Shadrin,
        CheckName::Doob,
        CheckName::Stein,
        CheckName::Lepingle,
        CheckName::Tower,
        CheckName::Jensen,
        CheckName::Domination,
        CheckName::Duality,
        CheckName::H1bmo,
        CheckName::GProps,
        CheckName::Phi,
        CheckName::Remez,
        CheckName::Burkholder,
        CheckName::Stability,
        CheckName::Decay,
        CheckName::Kernel,
        CheckName::Parseval,
        CheckName::Orthogonality,
        CheckName::Signs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::Shadrin => "shadrin",
            CheckName::Doob => "doob",
            CheckName::Stein => "stein",
            CheckName::Lepingle => "lepingle",
            CheckName::Tower => "tower",
            CheckName::Jensen => "jensen",
            CheckName::Domination => "domination",
            CheckName::Duality => "duality",
            CheckName::H1bmo => "h1bmo",
            CheckName::GProps => "g_props",
            CheckName::Phi => "phi",
            CheckName::Remez => "remez",
            CheckName::Burkholder => "burkholder",
            CheckName::Stability => "stability",
            CheckName::Decay => "decay",
            CheckName::Kernel => "kernel",
            CheckName::Parseval => "parseval",
            CheckName::Orthogonality => "orthogonality",
            CheckName::Signs => "signs",
        }
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckName {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CheckName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| HarnessError::InvalidConfig(format!("unknown check {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    K,
    GammaMax,
    Levels,
    P,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub master_seed: u64,
    pub check: CheckName,
    pub k: usize,
    pub kprime: usize,
    pub levels: usize,
    pub gamma_max: f64,
    /// one atom split per level; otherwise each atom splits with `split_prob`
    pub elementary: bool,
    pub split_prob: f64,
    pub split_range: (f64, f64),
    pub trials: usize,
    pub p: f64,
    pub r: f64,
    pub q: f64,
    pub sigma: f64,
    pub tau: f64,
    pub tol_quad: f64,
    pub grid_size: usize,
    pub output: Option<PathBuf>,
    pub sweep: Option<SweepSpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA_VERSION,
            master_seed: 0,
            check: CheckName::Lepingle,
            k: 2,
            kprime: 2,
            levels: 8,
            gamma_max: 4.0,
            elementary: true,
            split_prob: 0.5,
            split_range: (0.25, 0.75),
            trials: 10,
            p: 2.0,
            r: 2.0,
            q: 0.7,
            sigma: 0.5,
            tau: 0.5,
            tol_quad: 1e-10,
            grid_size: 256,
            output: None,
            sweep: None,
        }
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, HarnessError> {
    Err(HarnessError::InvalidConfig(msg.into()))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.schema != SCHEMA_VERSION {
            return invalid(format!("schema {} is not supported (expected {SCHEMA_VERSION})", self.schema));
        }
        if !(1..=8).contains(&self.k) || !(1..=8).contains(&self.kprime) {
            return invalid("k and kprime must lie in 1..=8");
        }
        if !(1..=24).contains(&self.levels) {
            return invalid("levels must lie in 1..=24");
        }
        if !(self.gamma_max >= 1.0) || !self.gamma_max.is_finite() {
            return invalid("gamma_max must be a finite real >= 1");
        }
        let (lo, hi) = self.split_range;
        if !(0.0 < lo && lo <= hi && hi < 1.0) {
            return invalid("split_range must satisfy 0 < lo <= hi < 1");
        }
        if !(0.0 < self.split_prob && self.split_prob <= 1.0) {
            return invalid("split_prob must lie in (0, 1]");
        }
        if self.trials == 0 {
            return invalid("trials must be positive");
        }
        if !(self.p >= 1.0) || !(self.r >= 1.0) {
            return invalid("p and r must be >= 1");
        }
        for (name, v) in [("q", self.q), ("sigma", self.sigma), ("tau", self.tau)] {
            if !(0.0 < v && v < 1.0) {
                return invalid(format!("{name} must lie in (0, 1)"));
            }
        }
        if !(self.tol_quad > 0.0 && self.tol_quad < 1.0) {
            return invalid("tol_quad must lie in (0, 1)");
        }
        if self.grid_size < 2 {
            return invalid("grid_size must be at least 2");
        }
        if let Some(s) = &self.sweep {
            validate_axis(s)?;
        }
        Ok(())
    }

    /// The config with one axis set to `value`.
    pub fn with_axis(&self, axis: Axis, value: f64) -> Result<Self, HarnessError> {
        let mut c = self.clone();
        match axis {
            Axis::K => c.k = value as usize,
            Axis::GammaMax => c.gamma_max = value,
            Axis::Levels => c.levels = value as usize,
            Axis::P => c.p = value,
        }
        c.sweep = None;
        c.validate()?;
        Ok(c)
    }
}

pub fn validate_axis(s: &SweepSpec) -> Result<(), HarnessError> {
    if s.values.is_empty() {
        return invalid("sweep axis has no values");
    }
    if matches!(s.axis, Axis::K | Axis::Levels) && s.values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
        return invalid("integer axis with a non-integer value");
    }
    Ok(())
}
