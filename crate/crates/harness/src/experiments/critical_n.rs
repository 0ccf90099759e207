//! How many events a single Hawkes series needs before AIC prefers the Hawkes
//! model: mean Hawkes-minus-Poisson criterion difference versus series length.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sparse_hawkes::rng::derive_seed;
use sparse_hawkes::selection::DELTA_AIC_05;
use sparse_hawkes::{
    fit_mle, simulate_hawkes, Criterion, FitOptions, HawkesParams, ModelTag, SimConfig,
};

use super::{delta_criterion, mean, percentile, RunOutput};
use crate::config::{ExperimentName, ExperimentSpec};
use crate::error::{HarnessError, Result};
use crate::table::{num, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub lambda0: f64,
    pub alpha: f64,
    pub delta: f64,
    /// Series lengths (events).
    pub grid: Vec<usize>,
    /// Hawkes variant fitted against Poisson.
    pub model: ModelTag,
    pub criterion: Criterion,
    pub starts: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            lambda0: 1.0,
            alpha: 3.0,
            delta: 6.0,
            grid: vec![5, 10, 20, 40, 80, 160, 320, 640],
            model: ModelTag::HawkesFull,
            criterion: Criterion::Aic,
            starts: 8,
        }
    }
}

impl Params {
    pub fn aicc() -> Self {
        Self {
            criterion: Criterion::Aicc,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub n_events: usize,
    /// Criterion differences of the trials where the criterion is defined.
    pub deltas: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    pub lo: f64,
    pub hi: f64,
    pub undefined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalN {
    pub points: Vec<GridPoint>,
    /// Interpolated (in log N) length where the mean first drops below 0.
    pub crossing_basic: Option<f64>,
    /// Same for the 0.05 band edge.
    pub crossing_05: Option<f64>,
}

/// First crossing of `level` by the mean curve, interpolated linearly in `ln N`.
pub fn crossing(points: &[GridPoint], level: f64) -> Option<f64> {
    let usable: Vec<&GridPoint> = points.iter().filter(|p| p.mean.is_finite()).collect();
    let first = usable.iter().position(|p| p.mean < level)?;
    if first == 0 {
        return Some(usable[0].n_events as f64);
    }
    let (a, b) = (usable[first - 1], usable[first]);
    let (la, lb) = ((a.n_events as f64).ln(), (b.n_events as f64).ln());
    let f = (a.mean - level) / (a.mean - b.mean);
    Some((la + f * (lb - la)).exp())
}

pub fn run(params: &Params, seed: u64, trials: usize) -> Result<CriticalN> {
    if !params.model.is_hawkes() {
        return Err(HarnessError::Usage("model must be a Hawkes variant".into()));
    }
    if params.grid.iter().any(|&n| n < 1) || trials == 0 {
        return Err(HarnessError::Usage(
            "grid lengths and trials must be >= 1".into(),
        ));
    }
    let truth = HawkesParams::full_history(params.lambda0, params.alpha, params.delta)?;
    truth.stationary_mean()?;
    let points = params
        .grid
        .iter()
        .enumerate()
        .map(|(gi, &n)| {
            let outcomes: Vec<Option<f64>> = (0..trials as u64)
                .into_par_iter()
                .map(|t| -> Result<Option<f64>> {
                    let s = derive_seed(derive_seed(seed, gi as u64), t);
                    let series = simulate_hawkes(&truth, &SimConfig::events(s, n))?;
                    let opts = FitOptions {
                        starts: params.starts,
                        seed: s,
                        ..FitOptions::default()
                    };
                    let h = fit_mle(params.model, &series, &opts)?;
                    let p = fit_mle(ModelTag::Poisson, &series, &opts)?;
                    Ok(delta_criterion(&h, &p, params.criterion))
                })
                .collect::<Result<_>>()?;
            let deltas: Vec<f64> = outcomes.iter().flatten().copied().collect();
            Ok(GridPoint {
                n_events: n,
                mean: mean(&deltas),
                median: percentile(&deltas, 0.5),
                lo: percentile(&deltas, 0.025),
                hi: percentile(&deltas, 0.975),
                undefined: trials - deltas.len(),
                deltas,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CriticalN {
        crossing_basic: crossing(&points, 0.0),
        crossing_05: crossing(&points, -DELTA_AIC_05),
        points,
    })
}

impl CriticalN {
    pub fn curve_table(&self) -> Table {
        let mut t = Table::new(
            "critical_n",
            &[
                "n_events",
                "mean_delta",
                "median_delta",
                "band_lo",
                "band_hi",
                "trials",
                "undefined",
            ],
        );
        for p in &self.points {
            t.push(vec![
                p.n_events.to_string(),
                num(p.mean),
                num(p.median),
                num(p.lo),
                num(p.hi),
                (p.deltas.len() + p.undefined).to_string(),
                p.undefined.to_string(),
            ]);
        }
        t
    }

    pub fn trials_table(&self) -> Table {
        let mut t = Table::new("critical_n_trials", &["n_events", "trial", "delta"]);
        for p in &self.points {
            for (i, d) in p.deltas.iter().enumerate() {
                t.push(vec![p.n_events.to_string(), i.to_string(), num(*d)]);
            }
        }
        t
    }
}

pub fn run_spec(spec: &ExperimentSpec) -> Result<RunOutput> {
    let params: Params = match spec.experiment {
        ExperimentName::AiccVariant => {
            let mut s = spec.clone();
            s.overrides
                .entry("criterion")
                .or_insert_with(|| "aicc".into());
            s.params()?
        }
        _ => spec.params()?,
    };
    let result = run(&params, spec.seed, spec.trials())?;
    let mut warnings = Vec::new();
    for p in result.points.iter().filter(|p| p.undefined > 0) {
        warnings.push(format!(
            "n_events={}: criterion undefined in {} trial(s); excluded from the mean",
            p.n_events, p.undefined
        ));
    }
    Ok(RunOutput {
        summary: serde_json::json!({
            "crossing_basic": result.crossing_basic,
            "crossing_05": result.crossing_05,
            "band": "2.5th to 97.5th percentile across trials",
        }),
        tables: vec![result.curve_table(), result.trials_table()],
        params: serde_json::to_value(&params)?,
        decisions: vec![
            "series simulated from onset (first event at 0, full history), window ends at the last event".into(),
            format!("grid of series lengths {:?}", params.grid),
            "crossings interpolated linearly in ln N between grid points".into(),
            "trials where AICc is undefined (n <= k + 1) are excluded and counted".into(),
        ],
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(n: usize, mean: f64) -> GridPoint {
        GridPoint {
            n_events: n,
            deltas: vec![],
            mean,
            median: mean,
            lo: mean,
            hi: mean,
            undefined: 0,
        }
    }

    #[test]
    fn crossing_interpolates_in_log_n() {
        let pts = [point(10, 2.0), point(40, -2.0), point(160, -10.0)];
        assert!((crossing(&pts, 0.0).unwrap() - 20.0).abs() < 1e-9);
        assert_eq!(crossing(&pts, -20.0), None);
        assert_eq!(crossing(&pts, 5.0), Some(10.0));
    }

    #[test]
    fn small_run_is_deterministic() {
        let p = Params {
            grid: vec![5, 30],
            starts: 2,
            ..Params::default()
        };
        let a = run(&p, 3, 4).unwrap();
        let b = run(&p, 3, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.points.len(), 2);
        assert!(a.points.iter().all(|g| g.deltas.len() == 4 && g.lo <= g.hi));
    }

    #[test]
    fn aicc_undefined_trials_are_counted() {
        let p = Params {
            grid: vec![5],
            model: ModelTag::HawkesShifted,
            criterion: Criterion::Aicc,
            starts: 1,
            ..Params::default()
        };
        let r = run(&p, 1, 3).unwrap();
        assert_eq!(r.points[0].undefined, 3);
        assert!(r.points[0].mean.is_nan());
    }
}
