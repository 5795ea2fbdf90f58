use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::config::{Axis, CheckName, ExperimentConfig};
use crate::HarnessError;

pub const CSV_COLUMNS: [&str; 11] = ["check", "seed", "k", "kprime", "gamma", "level_count", "lhs", "rhs", "ratio", "pass", "wall_ms"];

// non-finite floats are written as `null`
fn f64_or_nan<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

fn map_or_nan<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
    let m = BTreeMap::<String, Option<f64>>::deserialize(d)?;
    Ok(m.into_iter().map(|(k, v)| (k, v.unwrap_or(f64::NAN))).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: CheckName,
    pub trial: usize,
    pub seed: u64,
    pub k: usize,
    pub kprime: usize,
    /// largest `γ_k` over the levels of the generated filtration
    #[serde(deserialize_with = "f64_or_nan")]
    pub gamma: f64,
    pub level_count: usize,
    /// dimension of the finest spline space
    pub dim: usize,
    #[serde(deserialize_with = "f64_or_nan")]
    pub lhs: f64,
    #[serde(deserialize_with = "f64_or_nan")]
    pub rhs: f64,
    #[serde(deserialize_with = "f64_or_nan")]
    pub ratio: f64,
    /// `None` when the check only records an empirical constant
    pub pass: Option<bool>,
    pub error: Option<String>,
    #[serde(deserialize_with = "map_or_nan")]
    pub extra: BTreeMap<String, f64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub check: CheckName,
    pub trials: usize,
    pub failures: usize,
    pub errors: usize,
    #[serde(deserialize_with = "f64_or_nan")]
    pub max_ratio: f64,
    #[serde(deserialize_with = "f64_or_nan")]
    pub median_ratio: f64,
    #[serde(deserialize_with = "f64_or_nan")]
    pub max_gamma: f64,
    pub pass: Option<bool>,
}

impl Summary {
    pub fn from_reports(check: CheckName, reports: &[CheckReport]) -> Self {
        let mut ratios: Vec<f64> = reports.iter().map(|r| r.ratio).filter(|r| r.is_finite()).collect();
        ratios.sort_by(f64::total_cmp);
        let median_ratio = match ratios.len() {
            0 => f64::NAN,
            n if n % 2 == 1 => ratios[n / 2],
            n => 0.5 * (ratios[n / 2 - 1] + ratios[n / 2]),
        };
        let failures = reports.iter().filter(|r| r.pass == Some(false)).count();
        let errors = reports.iter().filter(|r| r.error.is_some()).count();
        let hard = reports.iter().any(|r| r.pass.is_some());
        let pass = if errors > 0 || failures > 0 {
            Some(false)
        } else if hard {
            Some(true)
        } else {
            None
        };
        Self {
            check,
            trials: reports.len(),
            failures,
            errors,
            max_ratio: ratios.last().copied().unwrap_or(f64::NAN),
            median_ratio,
            max_gamma: reports.iter().map(|r| r.gamma).fold(f64::NAN, f64::max),
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub schema: u32,
    pub seed_scheme: String,
    pub config: ExperimentConfig,
    pub summary: Summary,
    pub reports: Vec<CheckReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub summary: Summary,
    pub reports: Vec<CheckReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub schema: u32,
    pub seed_scheme: String,
    pub config: ExperimentConfig,
    pub axis: Axis,
    pub points: Vec<SweepPoint>,
}

fn zero_timing(reports: &mut [CheckReport]) {
    for r in reports {
        r.wall_ms = 0.0;
    }
}

fn pass_cell(p: Option<bool>) -> &'static str {
    match p {
        Some(true) => "true",
        Some(false) => "false",
        None => "",
    }
}

fn row(r: &CheckReport) -> Vec<String> {
    vec![
        r.check.to_string(),
        r.seed.to_string(),
        r.k.to_string(),
        r.kprime.to_string(),
        r.gamma.to_string(),
        r.level_count.to_string(),
        r.lhs.to_string(),
        r.rhs.to_string(),
        r.ratio.to_string(),
        pass_cell(r.pass).to_string(),
        r.wall_ms.to_string(),
    ]
}

impl RunOutput {
    pub fn passed(&self) -> bool {
        self.summary.pass != Some(false)
    }

    /// JSON with every timing field zeroed; identical configs give identical bytes.
    pub fn canonical_json(&self) -> Result<String, HarnessError> {
        let mut c = self.clone();
        zero_timing(&mut c.reports);
        Ok(serde_json::to_string_pretty(&c)?)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), HarnessError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_COLUMNS)?;
        for r in &self.reports {
            out.write_record(row(r))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_files(&self, dir: &Path) -> Result<(), HarnessError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)?)?;
        self.write_csv(std::fs::File::create(dir.join("report.csv"))?)
    }
}

impl SweepOutput {
    pub fn passed(&self) -> bool {
        self.points.iter().all(|p| p.summary.pass != Some(false))
    }

    pub fn canonical_json(&self) -> Result<String, HarnessError> {
        let mut c = self.clone();
        for p in &mut c.points {
            zero_timing(&mut p.reports);
        }
        Ok(serde_json::to_string_pretty(&c)?)
    }

    /// One row per trial and axis value, with the axis columns first.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), HarnessError> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["axis", "value"];
        header.extend(CSV_COLUMNS);
        out.write_record(&header)?;
        let axis = serde_json::to_value(self.axis)?.as_str().unwrap_or_default().to_string();
        for p in &self.points {
            for r in &p.reports {
                let mut rec = vec![axis.clone(), p.value.to_string()];
                rec.extend(row(r));
                out.write_record(rec)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_files(&self, dir: &Path) -> Result<(), HarnessError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("sweep.json"), serde_json::to_string_pretty(self)?)?;
        self.write_csv(std::fs::File::create(dir.join("sweep.csv"))?)
    }
}
