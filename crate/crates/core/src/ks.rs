//! Two-sample Kolmogorov-Smirnov test with the asymptotic Kolmogorov p-value.
//!
//! The p-value is `Q_KS((sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) * D)` with effective
//! size `ne = n m / (n + m)` (Stephens' small-sample correction).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::InterarrivalSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// `sup_x |F_a(x) - F_b(x)|` over the pooled sample points.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    ks_statistic_sorted(&a, &b)
}

pub fn ks_statistic_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if !(lambda > 0.0) {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-theta form converges fast for small arguments
        let y = (-std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        let y8 = y.powi(8);
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda
            * (y + y.powi(9) + y8.powi(3) * y + y8.powi(6) * y);
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let x = (-2.0 * lambda * lambda).exp();
        let mut sum = 0.0;
        let mut sign = 1.0;
        for k in 1..=100 {
            let k = k as f64;
            let term = x.powf(k * k);
            sum += sign * term;
            if term < 1e-300 {
                break;
            }
            sign = -sign;
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

pub fn ks_p_value(statistic: f64, n_a: usize, n_b: usize) -> f64 {
    if statistic <= 0.0 {
        return 1.0;
    }
    let ne = (n_a * n_b) as f64 / (n_a + n_b) as f64;
    let root = ne.sqrt();
    kolmogorov_survival((root + 0.12 + 0.11 / root) * statistic)
}

pub fn ks_two_sample_slices(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData(format!(
            "two-sample KS needs nonempty samples (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    let statistic = ks_statistic(a, b);
    Ok(KsResult {
        statistic,
        p_value: ks_p_value(statistic, a.len(), b.len()),
    })
}

pub fn ks_two_sample(a: &InterarrivalSample, b: &InterarrivalSample) -> Result<KsResult> {
    ks_two_sample_slices(&a.deltas, &b.deltas).map_err(|e| match e {
        Error::InsufficientData(_) => Error::InsufficientData(format!(
            "two-sample KS needs nonempty interarrival samples ('{}' has {}, '{}' has {})",
            a.source_id,
            a.len(),
            b.source_id,
            b.len()
        )),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let a = [0.3, 1.2, 0.7, 2.2];
        let r = ks_two_sample_slices(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn disjoint_supports() {
        let r = ks_two_sample_slices(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!(r.p_value < 0.1);
    }

    #[test]
    fn ties_across_samples() {
        // F_a jumps to 1 at 1; F_b is 0.5 at 1
        assert_eq!(ks_statistic(&[1.0, 1.0], &[1.0, 2.0]), 0.5);
    }

    #[test]
    fn survival_is_continuous_across_branches() {
        let lo = kolmogorov_survival(1.18 - 1e-9);
        let hi = kolmogorov_survival(1.18 + 1e-9);
        assert!((lo - hi).abs() < 1e-7);
        // known quantile: P(K > 1.3581) ~= 0.05
        assert!((kolmogorov_survival(1.358_099) - 0.05).abs() < 1e-4);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
        assert!(kolmogorov_survival(0.2) > 0.999_999);
    }

    #[test]
    fn empty_sample_rejected() {
        assert!(ks_two_sample_slices(&[], &[1.0]).is_err());
    }
}
