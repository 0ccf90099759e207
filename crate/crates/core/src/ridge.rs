//! Dense log-likelihood evaluation over the (alpha, delta) plane at fixed baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::hawkes_loglik_raw;
use crate::series::EventSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeLine {
    pub eta: f64,
    /// `(alpha, delta, loglik)` with `alpha = eta * delta`.
    pub points: Vec<(f64, f64, f64)>,
    pub variation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeScan {
    pub lambda0: f64,
    pub alphas: Vec<f64>,
    pub deltas: Vec<f64>,
    /// `loglik[i][j]` at `(alphas[i], deltas[j])`.
    pub loglik: Vec<Vec<f64>>,
    pub grid_variation: f64,
    pub lines: Vec<RidgeLine>,
}

impl RidgeScan {
    pub fn max(&self) -> (f64, f64, f64) {
        let mut best = (f64::NAN, f64::NAN, f64::NEG_INFINITY);
        for (i, row) in self.loglik.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v > best.2 {
                    best = (self.alphas[i], self.deltas[j], v);
                }
            }
        }
        best
    }
}

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

/// Full-history log-likelihood on the grid, plus its variation along each `alpha/delta = eta` line
/// (sampled at the grid's `delta` values).
pub fn likelihood_ridge_scan(
    series: &EventSeries,
    lambda0: f64,
    alphas: &[f64],
    deltas: &[f64],
    etas: &[f64],
) -> Result<RidgeScan> {
    if !(lambda0 > 0.0) || !lambda0.is_finite() {
        return Err(Error::ParameterDomain(format!(
            "lambda0 must be > 0, got {lambda0}"
        )));
    }
    if alphas.is_empty() || deltas.is_empty() {
        return Err(Error::Usage("ridge grid must be nonempty".into()));
    }
    if alphas.iter().any(|a| !(*a >= 0.0)) || deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::ParameterDomain(
            "grid needs alpha >= 0 and delta > 0".into(),
        ));
    }
    let eval =
        |a: f64, d: f64| hawkes_loglik_raw(lambda0, a, d, 0.0, series.times(), series.window_end());
    let loglik: Vec<Vec<f64>> = alphas
        .iter()
        .map(|&a| deltas.iter().map(|&d| eval(a, d)).collect())
        .collect();
    let grid_variation = spread(loglik.iter().flatten().copied());
    let lines = etas
        .iter()
        .map(|&eta| {
            let points: Vec<(f64, f64, f64)> = deltas
                .iter()
                .map(|&d| (eta * d, d, eval(eta * d, d)))
                .collect();
            let variation = spread(points.iter().map(|p| p.2));
            RidgeLine {
                eta,
                points,
                variation,
            }
        })
        .collect();
    Ok(RidgeScan {
        lambda0,
        alphas: alphas.to_vec(),
        deltas: deltas.to_vec(),
        loglik,
        grid_variation,
        lines,
    })
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::loglik_poisson;
    use crate::params::PoissonParams;

    #[test]
    fn zero_alpha_row_is_poisson() {
        let s = EventSeries::new("r", vec![0.0, 0.4, 0.5, 2.0, 6.0, 6.3], Some(10.0)).unwrap();
        let scan =
            likelihood_ridge_scan(&s, 0.3, &[0.0, 1.0], &linspace(0.5, 5.0, 10), &[0.9]).unwrap();
        let want = loglik_poisson(&PoissonParams::new(0.3).unwrap(), &s);
        assert!(scan.loglik[0].iter().all(|v| (v - want).abs() < 1e-12));
        assert_eq!(scan.lines[0].points.len(), 10);
    }

    #[test]
    fn rejects_bad_grid() {
        let s = EventSeries::new("r", vec![0.0, 1.0], None).unwrap();
        assert!(likelihood_ridge_scan(&s, 0.0, &[0.0], &[1.0], &[]).is_err());
        assert!(likelihood_ridge_scan(&s, 1.0, &[0.0], &[0.0], &[]).is_err());
    }
}
