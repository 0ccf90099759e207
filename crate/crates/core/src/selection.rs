//! AIC-based choice between a Hawkes fit and its nested Poisson fit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::FitResult;

/// `-2 ln 0.05`, displayed as 6.
pub const DELTA_AIC_05: f64 = 5.991_464_547_107_982;
/// `-2 ln 0.01`, displayed as 9.2.
pub const DELTA_AIC_01: f64 = 9.210_340_371_976_182;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[default]
    Aic,
    Aicc,
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aic" => Ok(Criterion::Aic),
            "aicc" => Ok(Criterion::Aicc),
            other => Err(Error::Usage(format!("unknown criterion '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Hawkes,
    Poisson,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceLevel {
    /// Lower criterion value wins.
    Basic,
    /// `|delta| > -2 ln 0.05`.
    #[serde(rename = "0.05")]
    P05,
    /// `|delta| > -2 ln 0.01`.
    #[serde(rename = "0.01")]
    P01,
}

impl ConfidenceLevel {
    pub const ALL: [ConfidenceLevel; 3] = [
        ConfidenceLevel::Basic,
        ConfidenceLevel::P05,
        ConfidenceLevel::P01,
    ];

    pub fn threshold(&self) -> f64 {
        match self {
            ConfidenceLevel::Basic => 0.0,
            ConfidenceLevel::P05 => DELTA_AIC_05,
            ConfidenceLevel::P01 => DELTA_AIC_01,
        }
    }

    /// Rounded threshold as usually quoted.
    pub fn display_threshold(&self) -> &'static str {
        match self {
            ConfidenceLevel::Basic => "0",
            ConfidenceLevel::P05 => "6",
            ConfidenceLevel::P01 => "9.2",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ConfidenceLevel::Basic => "basic",
            ConfidenceLevel::P05 => "0.05",
            ConfidenceLevel::P01 => "0.01",
        }
    }
}

/// Verdict for `delta = criterion(Hawkes) - criterion(Poisson)` at one confidence level.
pub fn verdict_at(delta_aic: f64, level: ConfidenceLevel) -> Verdict {
    let t = level.threshold();
    if delta_aic < -t {
        Verdict::Hawkes
    } else if delta_aic > t {
        Verdict::Poisson
    } else {
        Verdict::Inconclusive
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionVerdict {
    /// Hawkes minus Poisson.
    pub delta_aic: f64,
    pub verdict: Verdict,
    /// Strongest level at which `verdict` holds.
    pub confidence_level: ConfidenceLevel,
}

impl SelectionVerdict {
    pub fn from_delta(delta_aic: f64) -> Self {
        let mut verdict = Verdict::Inconclusive;
        let mut confidence_level = ConfidenceLevel::Basic;
        for level in ConfidenceLevel::ALL {
            match verdict_at(delta_aic, level) {
                Verdict::Inconclusive => break,
                v => {
                    verdict = v;
                    confidence_level = level;
                }
            }
        }
        Self {
            delta_aic,
            verdict,
            confidence_level,
        }
    }

    pub fn at(&self, level: ConfidenceLevel) -> Verdict {
        verdict_at(self.delta_aic, level)
    }
}

pub fn criterion_value(fit: &FitResult, criterion: Criterion) -> Result<f64> {
    match criterion {
        Criterion::Aic => Ok(fit.aic),
        Criterion::Aicc => fit.aicc.ok_or_else(|| {
            Error::InsufficientData(format!(
                "AICc undefined for {} with {} events and k={}",
                fit.model_tag, fit.n_events, fit.k
            ))
        }),
    }
}

pub fn select_model(
    fit_hawkes: &FitResult,
    fit_poisson: &FitResult,
    criterion: Criterion,
) -> Result<SelectionVerdict> {
    if !fit_hawkes.model_tag.is_hawkes() || fit_poisson.model_tag.is_hawkes() {
        return Err(Error::Usage(format!(
            "expected a Hawkes fit and a Poisson fit, got {} and {}",
            fit_hawkes.model_tag, fit_poisson.model_tag
        )));
    }
    if fit_hawkes.n_events != fit_poisson.n_events {
        return Err(Error::Usage(format!(
            "fits are on different data ({} vs {} events)",
            fit_hawkes.n_events, fit_poisson.n_events
        )));
    }
    let delta = criterion_value(fit_hawkes, criterion)? - criterion_value(fit_poisson, criterion)?;
    Ok(SelectionVerdict::from_delta(delta))
}
