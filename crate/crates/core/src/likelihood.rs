//! Exact log-likelihoods for Poisson and exponential-kernel Hawkes models.
//!
//! Integrals run from 0 to the series' `window_end`. The first event at the
//! origin contributes `ln lambda(0) = ln gamma`.

use crate::error::{Error, Result};
use crate::params::{HawkesParams, PoissonParams};
use crate::series::EventSeries;

pub fn loglik_poisson(params: &PoissonParams, series: &EventSeries) -> f64 {
    poisson_loglik_raw(params.rate(), series.len(), series.window_end())
}

pub(crate) fn poisson_loglik_raw(rate: f64, n_events: usize, window_end: f64) -> f64 {
    n_events as f64 * rate.ln() - rate * window_end
}

/// Integrated intensity over `[0, horizon]`.
pub fn compensator(params: &HawkesParams, series: &EventSeries, horizon: f64) -> Result<f64> {
    let last = *series.times().last().expect("series is nonempty");
    if !horizon.is_finite() || horizon < last {
        return Err(Error::ParameterDomain(format!(
            "compensator horizon {horizon} precedes last event {last}"
        )));
    }
    Ok(compensator_raw(
        params.lambda0(),
        params.alpha(),
        params.delta(),
        params.initial_excess(),
        series.times(),
        horizon,
    ))
}

/// `1 - exp(-x)` without cancellation for small `x`.
#[inline]
fn one_minus_exp_neg(x: f64) -> f64 {
    -(-x).exp_m1()
}

pub(crate) fn compensator_raw(
    lambda0: f64,
    alpha: f64,
    delta: f64,
    excess: f64,
    times: &[f64],
    horizon: f64,
) -> f64 {
    let mut total = lambda0 * horizon;
    if alpha > 0.0 {
        let kernel_mass: f64 = times
            .iter()
            .map(|&ti| one_minus_exp_neg(delta * (horizon - ti)))
            .sum();
        total += alpha / delta * kernel_mass;
    }
    if excess != 0.0 {
        total += excess / delta * one_minus_exp_neg(delta * horizon);
    }
    total
}

/// Log-likelihood over `[0, window_end]` via the O(N) recursion
/// `A_i = exp(-delta (t_i - t_{i-1})) (1 + A_{i-1})`, `A_1 = 0`.
pub fn loglik_hawkes(params: &HawkesParams, series: &EventSeries) -> f64 {
    hawkes_loglik_raw(
        params.lambda0(),
        params.alpha(),
        params.delta(),
        params.initial_excess(),
        series.times(),
        series.window_end(),
    )
}

pub(crate) fn hawkes_loglik_raw(
    lambda0: f64,
    alpha: f64,
    delta: f64,
    excess: f64,
    times: &[f64],
    window_end: f64,
) -> f64 {
    let mut log_sum = 0.0;
    let mut recursion = 0.0;
    let mut prev = 0.0;
    for (i, &ti) in times.iter().enumerate() {
        if i > 0 {
            recursion = (-delta * (ti - prev)).exp() * (1.0 + recursion);
        }
        prev = ti;
        let mut intensity = lambda0 + alpha * recursion;
        if excess != 0.0 {
            intensity += excess * (-delta * ti).exp();
        }
        if !(intensity > 0.0) {
            return f64::NEG_INFINITY;
        }
        log_sum += intensity.ln();
    }
    log_sum - compensator_raw(lambda0, alpha, delta, excess, times, window_end)
}

/// Partial derivatives of the Hawkes log-likelihood.
///
/// For the full-history variant `gamma` is tied to `lambda0`: `d_gamma` is zero and
/// `d_lambda0` is the total derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HawkesGradient {
    pub d_lambda0: f64,
    pub d_alpha: f64,
    pub d_delta: f64,
    pub d_gamma: f64,
}

pub fn loglik_hawkes_gradient(
    params: &HawkesParams,
    series: &EventSeries,
) -> (f64, HawkesGradient) {
    let shifted = params.variant() == crate::params::HawkesVariant::Shifted;
    hawkes_gradient_raw(
        params.lambda0(),
        params.alpha(),
        params.delta(),
        params.gamma(),
        shifted,
        series.times(),
        series.window_end(),
    )
}

pub(crate) fn hawkes_gradient_raw(
    lambda0: f64,
    alpha: f64,
    delta: f64,
    gamma: f64,
    shifted: bool,
    times: &[f64],
    horizon: f64,
) -> (f64, HawkesGradient) {
    let excess = if shifted { gamma - lambda0 } else { 0.0 };
    let mut g = HawkesGradient {
        d_lambda0: 0.0,
        d_alpha: 0.0,
        d_delta: 0.0,
        d_gamma: 0.0,
    };
    let mut log_sum = 0.0;
    // a = sum_{j<i} e^{-delta (t_i - t_j)},  b = sum_{j<i} (t_i - t_j) e^{-delta (t_i - t_j)}
    let (mut a, mut b) = (0.0f64, 0.0f64);
    let mut prev = 0.0;
    for (i, &ti) in times.iter().enumerate() {
        if i > 0 {
            let gap = ti - prev;
            let decay = (-delta * gap).exp();
            b = decay * (b + gap * (1.0 + a));
            a = decay * (1.0 + a);
        }
        prev = ti;
        let origin_decay = (-delta * ti).exp();
        let intensity = lambda0 + alpha * a + excess * origin_decay;
        if !(intensity > 0.0) {
            let nan = f64::NAN;
            return (
                f64::NEG_INFINITY,
                HawkesGradient {
                    d_lambda0: nan,
                    d_alpha: nan,
                    d_delta: nan,
                    d_gamma: nan,
                },
            );
        }
        log_sum += intensity.ln();
        let inv = 1.0 / intensity;
        g.d_alpha += a * inv;
        g.d_delta += (-alpha * b - excess * ti * origin_decay) * inv;
        if shifted {
            g.d_lambda0 += (1.0 - origin_decay) * inv;
            g.d_gamma += origin_decay * inv;
        } else {
            g.d_lambda0 += inv;
        }
    }

    let mut kernel_mass = 0.0;
    let mut kernel_mass_dt = 0.0;
    for &ti in times {
        let lag = horizon - ti;
        let e = (-delta * lag).exp();
        kernel_mass += one_minus_exp_neg(delta * lag);
        kernel_mass_dt += lag * e;
    }
    let window_mass = one_minus_exp_neg(delta * horizon);
    let window_decay = (-delta * horizon).exp();
    let comp = lambda0 * horizon + alpha / delta * kernel_mass + excess / delta * window_mass;

    g.d_alpha -= kernel_mass / delta;
    g.d_delta -= -alpha / (delta * delta) * kernel_mass + alpha / delta * kernel_mass_dt;
    g.d_delta -= excess * (-window_mass / (delta * delta) + horizon * window_decay / delta);
    if shifted {
        g.d_lambda0 -= horizon - window_mass / delta;
        g.d_gamma -= window_mass / delta;
    } else {
        g.d_lambda0 -= horizon;
    }
    (log_sum - comp, g)
}
