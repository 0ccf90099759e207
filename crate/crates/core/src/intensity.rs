use crate::error::{Error, Result};
use crate::params::HawkesParams;
use crate::series::EventSeries;

/// Conditional intensity at `t` given the events of `series` strictly before `t`.
///
/// `lambda0 + alpha * sum_{t_i < t} exp(-delta (t - t_i)) + (gamma - lambda0) exp(-delta t)`
pub fn intensity_at(params: &HawkesParams, series: &EventSeries, t: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::ParameterDomain(format!(
            "time must be finite and >= 0, got {t}"
        )));
    }
    Ok(intensity_with_history(params, series.times(), t))
}

pub(crate) fn intensity_with_history(params: &HawkesParams, times: &[f64], t: f64) -> f64 {
    let delta = params.delta();
    let mut excitation = 0.0;
    if params.alpha() > 0.0 {
        for &ti in times.iter().take_while(|&&ti| ti < t) {
            excitation += (-delta * (t - ti)).exp();
        }
    }
    let mut value = params.lambda0() + params.alpha() * excitation;
    let excess = params.initial_excess();
    if excess != 0.0 {
        value += excess * (-delta * t).exp();
    }
    value
}
