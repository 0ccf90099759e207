//! Seeded generation of Poisson and Hawkes event series.
//!
//! Every generated series starts with an event at `t = 0`. Hawkes series are
//! produced by exact thinning: between events the excitation only decays, so
//! `lambda0 + S(t+) + max(excess * exp(-delta t), 0)` bounds the intensity
//! until the next candidate point.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{HawkesParams, PoissonParams};
use crate::rng::rng_from_seed;
use crate::series::EventSeries;

pub const DEFAULT_BURN_IN: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stop {
    /// Generate exactly this many events (including the one at the origin).
    Events(usize),
    /// Generate every event in `[0, T]`; the window ends at `T`.
    Horizon(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub stop: Stop,
    pub burn_in_events: usize,
}

impl SimConfig {
    pub fn events(seed: u64, n_events: usize) -> Self {
        Self {
            seed,
            stop: Stop::Events(n_events),
            burn_in_events: DEFAULT_BURN_IN,
        }
    }

    pub fn horizon(seed: u64, horizon: f64) -> Self {
        Self {
            seed,
            stop: Stop::Horizon(horizon),
            burn_in_events: DEFAULT_BURN_IN,
        }
    }

    pub fn with_burn_in(mut self, burn_in_events: usize) -> Self {
        self.burn_in_events = burn_in_events;
        self
    }

    fn validate(&self) -> Result<()> {
        match self.stop {
            Stop::Events(0) => Err(Error::Usage("n_events must be >= 1".into())),
            Stop::Horizon(h) if !(h >= 0.0) || !h.is_finite() => Err(Error::Usage(format!(
                "horizon must be finite and >= 0, got {h}"
            ))),
            _ => Ok(()),
        }
    }
}

fn series_id(kind: &str, seed: u64) -> String {
    format!("{kind}-{seed}")
}

pub fn simulate_poisson(params: &PoissonParams, config: &SimConfig) -> Result<EventSeries> {
    config.validate()?;
    let mut rng = rng_from_seed(config.seed);
    let gap = Exp::new(params.rate()).map_err(|e| Error::ParameterDomain(e.to_string()))?;
    let mut times = vec![0.0];
    let mut t = 0.0;
    let window_end = match config.stop {
        Stop::Events(n) => {
            times.reserve(n);
            while times.len() < n {
                t += gap.sample(&mut rng);
                times.push(t);
            }
            None
        }
        Stop::Horizon(h) => {
            loop {
                t += gap.sample(&mut rng);
                if t > h {
                    break;
                }
                times.push(t);
            }
            Some(h)
        }
    };
    EventSeries::new(series_id("poisson", config.seed), times, window_end)
}

pub fn simulate_hawkes(params: &HawkesParams, config: &SimConfig) -> Result<EventSeries> {
    let eta = params.branching_ratio();
    if eta >= 1.0 {
        return Err(Error::Supercritical(eta));
    }
    config.validate()?;
    let mut rng = rng_from_seed(config.seed);
    let (lambda0, alpha, delta) = (params.lambda0(), params.alpha(), params.delta());
    let excess = params.initial_excess();

    let (max_events, horizon) = match config.stop {
        Stop::Events(n) => (n, f64::INFINITY),
        Stop::Horizon(h) => (usize::MAX, h),
    };
    let mut times = vec![0.0];
    let mut t = 0.0;
    // excitation from past events, evaluated just after the current time
    let mut excitation = alpha;
    while times.len() < max_events {
        let shift = excess * (-delta * t).exp();
        let bound = lambda0 + excitation + shift.max(0.0);
        let u: f64 = rng.random();
        let wait = -(1.0 - u).ln() / bound;
        let candidate = t + wait;
        if candidate > horizon {
            break;
        }
        excitation *= (-delta * wait).exp();
        t = candidate;
        let intensity = lambda0 + excitation + excess * (-delta * t).exp();
        let accept: f64 = rng.random();
        if accept * bound <= intensity {
            times.push(t);
            excitation += alpha;
        }
    }
    let window_end = horizon.is_finite().then_some(horizon);
    EventSeries::new(series_id("hawkes", config.seed), times, window_end)
}

/// Contiguous block of `n_events` taken after `config.burn_in_events`, re-anchored at zero.
///
/// The start is drawn uniformly from the admissible positions using `config.seed`.
/// When the parent has an event after the block, the excerpt's window runs up to
/// that event (exclusive), so the excerpt holds exactly `n_events` events over
/// `n_events` gaps; otherwise it ends at the block's last event.
pub fn extract_excerpt(
    series: &EventSeries,
    n_events: usize,
    config: &SimConfig,
) -> Result<EventSeries> {
    if n_events == 0 {
        return Err(Error::Usage("excerpt length must be >= 1".into()));
    }
    let needed = config.burn_in_events + n_events;
    if series.len() < needed {
        return Err(Error::InsufficientData(format!(
            "series '{}' has {} events; excerpt needs {} (burn-in {} + {})",
            series.id(),
            series.len(),
            needed,
            config.burn_in_events,
            n_events
        )));
    }
    // prefer starts that leave a following event to close the window
    let slack = (series.len() - needed).saturating_sub(1);
    let offset = if slack == 0 {
        0
    } else {
        rng_from_seed(config.seed).random_range(0..=slack)
    };
    let start = config.burn_in_events + offset;
    let end = start + n_events;
    let times = series.times();
    let origin = times[start];
    let block: Vec<f64> = times[start..end].iter().map(|t| t - origin).collect();
    let window_end = times.get(end).map(|next| next - origin);
    EventSeries::new(
        format!("{}[{}..{}]", series.id(), start, end),
        block,
        window_end,
    )
}

/// Simulates a Hawkes run long enough for `burn_in` events, an `n_events` excerpt,
/// and the event closing the excerpt's window, and returns the excerpt.
pub fn simulate_hawkes_excerpt(
    params: &HawkesParams,
    n_events: usize,
    burn_in: usize,
    seed: u64,
) -> Result<EventSeries> {
    let config = SimConfig::events(seed, burn_in + n_events + 1).with_burn_in(burn_in);
    let full = simulate_hawkes(params, &config)?;
    extract_excerpt(&full, n_events, &config)
}

/// Poisson counterpart of [`simulate_hawkes_excerpt`]; no burn-in is needed.
pub fn simulate_poisson_excerpt(
    params: &PoissonParams,
    n_events: usize,
    seed: u64,
) -> Result<EventSeries> {
    let config = SimConfig::events(seed, n_events + 1).with_burn_in(0);
    let full = simulate_poisson(params, &config)?;
    extract_excerpt(&full, n_events, &config)
}
