//! Model parameter vectors.
//!
//! Rates are in inverse time units. A Hawkes process with exponential kernel
//! `alpha * exp(-delta * s)` is described by a baseline `lambda0`, the kernel
//! amplitude and decay, and `gamma`, the intensity at the start of the
//! observation window. The full-history variant observes the process from its
//! onset, so `gamma` is tied to `lambda0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HawkesVariant {
    /// Observed from onset; intensity starts at the baseline.
    FullHistory,
    /// Observed from mid-process; carries an explicit initial intensity.
    Shifted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHawkes", into = "RawHawkes")]
pub struct HawkesParams {
    lambda0: f64,
    alpha: f64,
    delta: f64,
    gamma: f64,
    variant: HawkesVariant,
}

#[derive(Serialize, Deserialize)]
struct RawHawkes {
    lambda0: f64,
    alpha: f64,
    delta: f64,
    #[serde(default)]
    gamma: Option<f64>,
    variant: HawkesVariant,
}

impl TryFrom<RawHawkes> for HawkesParams {
    type Error = Error;

    fn try_from(r: RawHawkes) -> Result<Self> {
        match r.variant {
            HawkesVariant::FullHistory => {
                if let Some(g) = r.gamma {
                    if g != r.lambda0 {
                        return Err(Error::ParameterDomain(format!(
                            "full-history variant requires gamma == lambda0, got gamma={g}, lambda0={}",
                            r.lambda0
                        )));
                    }
                }
                HawkesParams::full_history(r.lambda0, r.alpha, r.delta)
            }
            HawkesVariant::Shifted => {
                let gamma = r.gamma.ok_or_else(|| {
                    Error::ParameterDomain("shifted variant requires gamma".into())
                })?;
                HawkesParams::shifted(r.lambda0, r.alpha, r.delta, gamma)
            }
        }
    }
}

impl From<HawkesParams> for RawHawkes {
    fn from(p: HawkesParams) -> Self {
        RawHawkes {
            lambda0: p.lambda0,
            alpha: p.alpha,
            delta: p.delta,
            gamma: Some(p.gamma),
            variant: p.variant,
        }
    }
}

fn check(name: &str, value: f64, strictly_positive: bool) -> Result<()> {
    let ok = value.is_finite()
        && if strictly_positive {
            value > 0.0
        } else {
            value >= 0.0
        };
    if ok {
        Ok(())
    } else {
        let rel = if strictly_positive { "> 0" } else { ">= 0" };
        Err(Error::ParameterDomain(format!(
            "{name} must be finite and {rel}, got {value}"
        )))
    }
}

impl HawkesParams {
    pub fn full_history(lambda0: f64, alpha: f64, delta: f64) -> Result<Self> {
        check("lambda0", lambda0, true)?;
        check("alpha", alpha, false)?;
        check("delta", delta, true)?;
        Ok(Self {
            lambda0,
            alpha,
            delta,
            gamma: lambda0,
            variant: HawkesVariant::FullHistory,
        })
    }

    pub fn shifted(lambda0: f64, alpha: f64, delta: f64, gamma: f64) -> Result<Self> {
        check("lambda0", lambda0, true)?;
        check("alpha", alpha, false)?;
        check("delta", delta, true)?;
        check("gamma", gamma, false)?;
        Ok(Self {
            lambda0,
            alpha,
            delta,
            gamma,
            variant: HawkesVariant::Shifted,
        })
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn variant(&self) -> HawkesVariant {
        self.variant
    }

    /// `gamma - lambda0`; identically zero for the full-history variant.
    pub fn initial_excess(&self) -> f64 {
        match self.variant {
            HawkesVariant::FullHistory => 0.0,
            HawkesVariant::Shifted => self.gamma - self.lambda0,
        }
    }

    /// Expected number of direct offspring per event, `alpha / delta`.
    pub fn branching_ratio(&self) -> f64 {
        self.alpha / self.delta
    }

    pub fn is_subcritical(&self) -> bool {
        self.branching_ratio() < 1.0
    }

    /// Long-run mean intensity `lambda0 / (1 - alpha/delta)`.
    pub fn stationary_mean(&self) -> Result<f64> {
        let eta = self.branching_ratio();
        if eta >= 1.0 {
            return Err(Error::Supercritical(eta));
        }
        Ok(self.lambda0 / (1.0 - eta))
    }

    /// Same process in time units scaled by `c` (all rates divided by `c`).
    pub fn rescaled(&self, c: f64) -> Result<Self> {
        match self.variant {
            HawkesVariant::FullHistory => {
                Self::full_history(self.lambda0 / c, self.alpha / c, self.delta / c)
            }
            HawkesVariant::Shifted => Self::shifted(
                self.lambda0 / c,
                self.alpha / c,
                self.delta / c,
                self.gamma / c,
            ),
        }
    }
}

pub fn branching_ratio(params: &HawkesParams) -> f64 {
    params.branching_ratio()
}

pub fn stationary_mean(params: &HawkesParams) -> Result<f64> {
    params.stationary_mean()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoisson", into = "RawPoisson")]
pub struct PoissonParams {
    lambda_p: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPoisson {
    lambda_p: f64,
}

impl TryFrom<RawPoisson> for PoissonParams {
    type Error = Error;

    fn try_from(r: RawPoisson) -> Result<Self> {
        PoissonParams::new(r.lambda_p)
    }
}

impl From<PoissonParams> for RawPoisson {
    fn from(p: PoissonParams) -> Self {
        RawPoisson {
            lambda_p: p.lambda_p,
        }
    }
}

impl PoissonParams {
    pub fn new(lambda_p: f64) -> Result<Self> {
        check("lambda_p", lambda_p, true)?;
        Ok(Self { lambda_p })
    }

    pub fn rate(&self) -> f64 {
        self.lambda_p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationary_mean_values() {
        let p = HawkesParams::full_history(1.0, 2.0, 3.5).unwrap();
        assert!((p.stationary_mean().unwrap() - 7.0 / 3.0).abs() < 1e-14);
        let p = HawkesParams::full_history(2.0, 0.0, 1.0).unwrap();
        assert_eq!(p.stationary_mean().unwrap(), 2.0);
        let p = HawkesParams::full_history(1.0, 3.0, 6.0).unwrap();
        assert_eq!(p.stationary_mean().unwrap(), 2.0);
    }

    #[test]
    fn supercritical_mean_is_error() {
        let p = HawkesParams::full_history(1.0, 6.0, 6.0).unwrap();
        assert!(matches!(p.stationary_mean(), Err(Error::Supercritical(_))));
        let p = HawkesParams::full_history(1.0, 7.0, 6.0).unwrap();
        assert!(matches!(stationary_mean(&p), Err(Error::Supercritical(_))));
    }

    #[test]
    fn branching_ratio_values() {
        let r = |a, d| branching_ratio(&HawkesParams::full_history(1.0, a, d).unwrap());
        assert!((r(1.8, 2.0) - 0.9).abs() < 1e-15);
        assert_eq!(r(0.0, 5.0), 0.0);
        assert!((r(3.0, 10.0) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn domain_checks() {
        assert!(HawkesParams::full_history(0.0, 1.0, 1.0).is_err());
        assert!(HawkesParams::full_history(1.0, -1.0, 1.0).is_err());
        assert!(HawkesParams::full_history(1.0, 1.0, 0.0).is_err());
        assert!(HawkesParams::shifted(1.0, 1.0, 1.0, -0.1).is_err());
        assert!(HawkesParams::shifted(1.0, 0.0, 1.0, 0.0).is_ok());
        assert!(PoissonParams::new(0.0).is_err());
        assert!(PoissonParams::new(f64::INFINITY).is_err());
    }

    #[test]
    fn full_history_ties_gamma() {
        let p = HawkesParams::full_history(1.5, 1.0, 2.0).unwrap();
        assert_eq!(p.gamma(), 1.5);
        assert_eq!(p.initial_excess(), 0.0);
    }
}
