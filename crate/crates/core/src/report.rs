//! Run reports and their JSON/CSV serialisations. Nothing time-dependent is
//! recorded, so identical configs give byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{OutputFormat, RunConfig};
use crate::error::Result;
use crate::estimates::{EstimateReport, Verdict};
use crate::harnack::{DensityScan, HarnackScan};
use crate::liouville::{Classification, LiouvilleVerdict};
use crate::sharpness::SearchReport;

/// Process exit statuses shared by the runner and the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Pass,
    Violation,
    ConfigError,
    ConditionFails,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Pass => 0,
            ExitStatus::Violation => 1,
            ExitStatus::ConfigError => 2,
            ExitStatus::ConditionFails => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CheckDetail {
    Estimate(EstimateReport),
    Harnack { u: HarnackScan, v: HarnackScan },
    Density(DensityScan),
    Liouville(LiouvilleVerdict),
    Classify(Classification),
    Counterexample(SearchReport),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub check: String,
    pub anchor: String,
    pub verdict: Verdict,
    pub detail: CheckDetail,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub toolkit_version: String,
    pub config: RunConfig,
    pub checks: Vec<CheckResult>,
    pub status: ExitStatus,
    pub exit_code: i32,
}

impl RunReport {
    pub fn new(config: RunConfig, checks: Vec<CheckResult>) -> Self {
        let status = match Verdict::combine(checks.iter().map(|c| c.verdict)) {
            Verdict::Pass => ExitStatus::Pass,
            _ => ExitStatus::Violation,
        };
        RunReport {
            toolkit_version: crate::TOOLKIT_VERSION.into(),
            config,
            checks,
            status,
            exit_code: status.code(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn estimate_rows(&self) -> Vec<EstimateCsvRow> {
        let mut rows = Vec::new();
        for c in &self.checks {
            if let CheckDetail::Estimate(rep) = &c.detail {
                rows.extend(estimate_rows(rep));
            }
        }
        rows
    }

    /// Writes report.json (json format only) and whichever CSV tables have
    /// content; returns the paths written.
    pub fn write(&self, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        if format == OutputFormat::Json {
            let p = dir.join("report.json");
            fs::write(&p, self.to_json()? + "\n")?;
            written.push(p);
        }
        let est = self.estimate_rows();
        if !est.is_empty() {
            written.push(write_csv(&dir.join("estimates.csv"), &est)?);
        }
        let mut harnack = Vec::new();
        let mut density = Vec::new();
        for c in &self.checks {
            match &c.detail {
                CheckDetail::Harnack { u, v } => {
                    for (line, scan) in [("u", u), ("v", v)] {
                        harnack.extend((0..scan.radii.len()).map(|i| HarnackRow {
                            line,
                            radius: scan.radii[i],
                            ratio: scan.ratios[i],
                            running_max: scan.running_max[i],
                            sigma: scan.sigma,
                            samples: scan.samples,
                            seed: scan.seeds[i],
                        }));
                    }
                }
                CheckDetail::Density(d) => density.extend(density_rows(d)),
                _ => {}
            }
        }
        if !harnack.is_empty() {
            written.push(write_csv(&dir.join("harnack.csv"), &harnack)?);
        }
        if !density.is_empty() {
            written.push(write_csv(&dir.join("density.csv"), &density)?);
        }
        Ok(written)
    }
}

/// The fixed estimate table: check_id, R, lhs, rhs, margin, stderr, samples, seed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateCsvRow {
    pub check_id: String,
    #[serde(rename = "R")]
    pub radius: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

/// One row per record; the line is folded into the id as `check/u`.
pub fn estimate_rows(rep: &EstimateReport) -> Vec<EstimateCsvRow> {
    rep.records
        .iter()
        .map(|r| EstimateCsvRow {
            check_id: format!("{}/{}", r.check_id, r.line),
            radius: r.radius,
            lhs: r.lhs,
            rhs: r.rhs,
            margin: r.margin,
            stderr: r.std_error,
            samples: r.samples,
            seed: r.seed,
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
struct HarnackRow {
    line: &'static str,
    #[serde(rename = "R")]
    radius: f64,
    ratio: f64,
    running_max: f64,
    sigma: f64,
    samples: usize,
    seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
struct DensityRow {
    field: String,
    #[serde(rename = "R")]
    radius: f64,
    epsilon: f64,
    ball_fraction: f64,
    annulus_fraction: f64,
    samples: usize,
    seed: u64,
}

fn density_rows(d: &DensityScan) -> Vec<DensityRow> {
    (0..d.radii.len())
        .map(|i| DensityRow {
            field: d.field.clone(),
            radius: d.radii[i],
            epsilon: d.epsilon,
            ball_fraction: d.ball_fractions[i],
            annulus_fraction: d.annulus_fractions[i],
            samples: d.samples,
            seed: d.seeds[i],
        })
        .collect()
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<PathBuf> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(path.to_path_buf())
}

/// The estimate table as a CSV string, for printing.
pub fn estimates_csv(reports: &[&EstimateReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for rep in reports {
        for r in estimate_rows(rep) {
            w.serialize(r)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
