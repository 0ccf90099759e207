//! Experiment runners. Each returns typed results plus CSV tables; [`run`]
//! dispatches on an [`ExperimentSpec`] and [`write_run`] stores the tables next
//! to a JSON manifest.

pub mod cohort;
pub mod critical_n;
pub mod discrimination;
pub mod recovery;
pub mod ridge;

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sparse_hawkes::selection::criterion_value;
use sparse_hawkes::{Criterion, FitResult};

use crate::config::{ExperimentName, ExperimentSpec};
use crate::error::{HarnessError, Result};
use crate::table::Table;

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    /// Resolved parameters after overrides.
    pub params: Value,
    pub summary: Value,
    pub decisions: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub git_describe: String,
    pub experiment: ExperimentName,
    pub seed: u64,
    pub trials: usize,
    pub rng: &'static str,
    pub spec: &'a ExperimentSpec,
    pub params: &'a Value,
    pub decisions: &'a [String],
    pub warnings: &'a [String],
    pub outputs: Vec<String>,
    pub summary: &'a Value,
}

pub fn run(spec: &ExperimentSpec) -> Result<RunOutput> {
    match spec.experiment {
        ExperimentName::CriticalN | ExperimentName::AiccVariant => critical_n::run_spec(spec),
        ExperimentName::Discrimination => discrimination::run_spec(spec),
        ExperimentName::Recovery => recovery::run_spec(spec),
        ExperimentName::Ridge => ridge::run_spec(spec),
        ExperimentName::CohortPipeline => cohort::run_spec(spec),
    }
}

/// `git describe` of the working directory, or `"unknown"` outside a checkout.
pub fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".to_string())
}

/// Writes every table as `<name>.csv` plus `manifest.json` into `dir`.
pub fn write_run(spec: &ExperimentSpec, out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)
        .map_err(|e| HarnessError::io(format!("creating {}", dir.display()), e))?;
    let mut written = Vec::new();
    for t in &out.tables {
        written.push(t.write_to(dir)?);
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        git_describe: git_describe(),
        experiment: spec.experiment,
        seed: spec.seed,
        trials: spec.trials(),
        rng: sparse_hawkes::rng::RNG_ALGORITHM,
        spec,
        params: &out.params,
        decisions: &out.decisions,
        warnings: &out.warnings,
        outputs: written
            .iter()
            .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
            .collect(),
        summary: &out.summary,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, text + "\n")
        .map_err(|e| HarnessError::io(format!("writing {}", path.display()), e))?;
    written.push(path);
    Ok(written)
}

/// Hawkes-minus-Poisson criterion difference; `None` when AICc is undefined for either fit.
pub fn delta_criterion(
    hawkes: &FitResult,
    poisson: &FitResult,
    criterion: Criterion,
) -> Option<f64> {
    Some(criterion_value(hawkes, criterion).ok()? - criterion_value(poisson, criterion).ok()?)
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return f64::NAN;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Linear-interpolation percentile, `q` in [0, 1].
pub fn percentile(v: &[f64], q: f64) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_statistics() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(mean(&v), 2.5);
        assert!((std_dev(&v) - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 1.0), 4.0);
        assert_eq!(percentile(&v, 0.5), 2.5);
        assert!(mean(&[]).is_nan());
        assert!(std_dev(&[1.0]).is_nan());
    }
}
