//! Maximum-likelihood fitting for one series or a pooled group of series.
//!
//! Hawkes fits run in log-parameter space. Each start is a Nelder-Mead search
//! followed by a BFGS polish on the analytic gradient. The stability
//! constraint `alpha/delta <= 1 - margin` and the box bounds are enforced by
//! projection plus a quadratic penalty on the distance to the feasible set.
//! The `alpha = 0` face (where the model reduces to Poisson) cannot be
//! reached in log space, so its exact optimum is always scored as an extra
//! candidate, and a shifted fit also starts from the full-history optimum.
//!
//! Box bounds are multiples of the pooled empirical rate `r = sum N / sum T`.
//! The shifted model additionally keeps `gamma` at or below the stationary
//! mean `lambda0 / (1 - alpha/delta)`. Without it, letting `gamma` and `delta`
//! grow together puts an ever narrower, ever taller spike on the event at the
//! origin and the likelihood grows without limit, for any data.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{hawkes_gradient_raw, hawkes_loglik_raw, poisson_loglik_raw};
use crate::optimize::{Bfgs, NelderMead};
use crate::params::{HawkesParams, PoissonParams};
use crate::rng::rng_from_seed;
use crate::series::EventSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTag {
    Poisson,
    HawkesFull,
    HawkesShifted,
}

impl ModelTag {
    /// Free parameters of a single-series (or shared-gamma pooled) fit.
    pub fn dof(&self) -> usize {
        match self {
            ModelTag::Poisson => 1,
            ModelTag::HawkesFull => 3,
            ModelTag::HawkesShifted => 4,
        }
    }

    pub fn is_hawkes(&self) -> bool {
        !matches!(self, ModelTag::Poisson)
    }
}

impl std::fmt::Display for ModelTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelTag::Poisson => "poisson",
            ModelTag::HawkesFull => "hawkes_full",
            ModelTag::HawkesShifted => "hawkes_shifted",
        })
    }
}

impl std::str::FromStr for ModelTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poisson" => Ok(ModelTag::Poisson),
            "hawkes_full" | "full" => Ok(ModelTag::HawkesFull),
            "hawkes_shifted" | "shifted" => Ok(ModelTag::HawkesShifted),
            other => Err(Error::Usage(format!("unknown model '{other}'"))),
        }
    }
}

/// How the initial intensity is shared in pooled shifted fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaMode {
    #[default]
    Shared,
    PerMember,
}

/// Box bounds as multiples of the pooled empirical rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBounds {
    pub lambda0: (f64, f64),
    pub alpha: (f64, f64),
    pub delta: (f64, f64),
    pub gamma: (f64, f64),
}

impl Default for RateBounds {
    fn default() -> Self {
        Self {
            lambda0: (1e-6, 1e3),
            alpha: (1e-10, 1e3),
            delta: (1e-3, 1e3),
            gamma: (1e-6, 1e3),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub stability_margin: f64,
    pub bounds: RateBounds,
    pub gamma_mode: GammaMode,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            seed: 0x5eed,
            max_iterations: 400,
            tolerance: 1e-8,
            stability_margin: 1e-6,
            bounds: RateBounds::default(),
            gamma_mode: GammaMode::Shared,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FittedParams {
    Poisson(PoissonParams),
    Hawkes(HawkesParams),
}

impl FittedParams {
    pub fn hawkes(&self) -> Option<&HawkesParams> {
        match self {
            FittedParams::Hawkes(h) => Some(h),
            FittedParams::Poisson(_) => None,
        }
    }

    pub fn poisson(&self) -> Option<&PoissonParams> {
        match self {
            FittedParams::Poisson(p) => Some(p),
            FittedParams::Hawkes(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartTrace {
    /// `None` marks the exact `alpha = 0` boundary candidate.
    pub start: Option<usize>,
    pub initial: Vec<f64>,
    pub simplex_iterations: usize,
    pub simplex_converged: bool,
    pub polish_iterations: usize,
    pub polish_converged: bool,
    pub loglik: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model_tag: ModelTag,
    pub params: FittedParams,
    /// Per-member initial intensities when fitted with [`GammaMode::PerMember`].
    pub member_gammas: Option<Vec<f64>>,
    pub loglik: f64,
    pub n_events: usize,
    pub k: usize,
    pub aic: f64,
    /// `None` when `n_events <= k + 1`.
    pub aicc: Option<f64>,
    pub optimizer_trace: Vec<StartTrace>,
    pub converged: bool,
    pub at_stability_boundary: bool,
    pub at_box_bound: bool,
    /// Fewer than two events: the Hawkes parameters are not identifiable.
    pub degenerate: bool,
}

pub fn aic_value(k: usize, loglik: f64) -> f64 {
    2.0 * k as f64 - 2.0 * loglik
}

pub fn aicc_value(k: usize, n_events: usize, aic: f64) -> Option<f64> {
    (n_events > k + 1).then(|| {
        let k = k as f64;
        aic + 2.0 * k * (k + 1.0) / (n_events as f64 - k - 1.0)
    })
}

pub fn aic(fit: &FitResult) -> f64 {
    aic_value(fit.k, fit.loglik)
}

pub fn aicc(fit: &FitResult) -> Option<f64> {
    aicc_value(fit.k, fit.n_events, aic(fit))
}

/// Relative likelihood `exp(-delta_aic / 2)` of the worse model.
pub fn relative_likelihood(delta_aic: f64) -> f64 {
    (-delta_aic / 2.0).exp()
}

pub fn fit_mle(model: ModelTag, series: &EventSeries, options: &FitOptions) -> Result<FitResult> {
    fit_pooled(model, &[series], options)
}

/// Maximizes the sum of member log-likelihoods at shared parameters.
pub fn fit_pooled(
    model: ModelTag,
    members: &[&EventSeries],
    options: &FitOptions,
) -> Result<FitResult> {
    let data = Pooled::new(members)?;
    match model {
        ModelTag::Poisson => Ok(data.fit_poisson()),
        ModelTag::HawkesFull | ModelTag::HawkesShifted => data.fit_hawkes(model, options),
    }
}

struct Pooled<'a> {
    members: &'a [&'a EventSeries],
    total_events: usize,
    rate: f64,
    mean_gap: Option<f64>,
}

#[derive(Clone, Copy)]
struct Layout {
    shifted: bool,
    per_member: bool,
    members: usize,
}

impl Layout {
    fn dim(&self) -> usize {
        match (self.shifted, self.per_member) {
            (false, _) => 3,
            (true, false) => 4,
            (true, true) => 3 + self.members,
        }
    }

    fn gamma_index(&self, member: usize) -> Option<usize> {
        match (self.shifted, self.per_member) {
            (false, _) => None,
            (true, false) => Some(3),
            (true, true) => Some(3 + member),
        }
    }
}

struct Box4 {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl<'a> Pooled<'a> {
    fn new(members: &'a [&'a EventSeries]) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Usage("cannot fit an empty group".into()));
        }
        let total_events: usize = members.iter().map(|s| s.len()).sum();
        let total_window: f64 = members.iter().map(|s| s.window_end()).sum();
        if !(total_window > 0.0) {
            return Err(Error::InsufficientData(format!(
                "observation window has zero length ({} event(s)); set a window end to fit",
                total_events
            )));
        }
        let (gap_sum, gap_count) = members.iter().fold((0.0, 0usize), |(s, c), m| {
            let t = m.times();
            (s + (t[t.len() - 1] - t[0]), c + t.len() - 1)
        });
        let mean_gap = (gap_count > 0 && gap_sum > 0.0).then(|| gap_sum / gap_count as f64);
        Ok(Self {
            members,
            total_events,
            rate: total_events as f64 / total_window,
            mean_gap,
        })
    }

    fn fit_poisson(&self) -> FitResult {
        let rate = self.rate;
        let loglik: f64 = self
            .members
            .iter()
            .map(|s| poisson_loglik_raw(rate, s.len(), s.window_end()))
            .sum();
        let k = 1;
        let aic = aic_value(k, loglik);
        FitResult {
            model_tag: ModelTag::Poisson,
            params: FittedParams::Poisson(PoissonParams::new(rate).expect("positive rate")),
            member_gammas: None,
            loglik,
            n_events: self.total_events,
            k,
            aic,
            aicc: aicc_value(k, self.total_events, aic),
            optimizer_trace: Vec::new(),
            converged: true,
            at_stability_boundary: false,
            at_box_bound: false,
            degenerate: false,
        }
    }

    fn bounds(&self, layout: Layout, b: &RateBounds) -> Box4 {
        let r = self.rate;
        let mut lo = vec![
            (b.lambda0.0 * r).ln(),
            (b.alpha.0 * r).ln(),
            (b.delta.0 * r).ln(),
        ];
        let mut hi = vec![
            (b.lambda0.1 * r).ln(),
            (b.alpha.1 * r).ln(),
            (b.delta.1 * r).ln(),
        ];
        for _ in 3..layout.dim() {
            lo.push((b.gamma.0 * r).ln());
            hi.push((b.gamma.1 * r).ln());
        }
        Box4 { lo, hi }
    }

    /// Projects onto the feasible set; returns the squared distance moved.
    fn project(z: &[f64], bx: &Box4, log_margin: f64) -> (Vec<f64>, f64) {
        let mut p: Vec<f64> = z
            .iter()
            .zip(bx.lo.iter().zip(&bx.hi))
            .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
            .collect();
        // alpha <= (1 - margin) delta
        let cap = p[2] + log_margin;
        if p[1] > cap {
            p[1] = cap;
        }
        // gamma <= lambda0 / (1 - alpha/delta)
        let gamma_cap = p[0] - (-(p[1] - p[2]).exp()).ln_1p();
        for g in p.iter_mut().skip(3) {
            if *g > gamma_cap {
                *g = gamma_cap;
            }
        }
        let dist = z.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum();
        (p, dist)
    }

    fn loglik_at(&self, layout: Layout, z: &[f64]) -> f64 {
        let (l0, a, d) = (z[0].exp(), z[1].exp(), z[2].exp());
        self.members
            .iter()
            .enumerate()
            .map(|(j, s)| {
                let excess = layout.gamma_index(j).map_or(0.0, |gi| z[gi].exp() - l0);
                hawkes_loglik_raw(l0, a, d, excess, s.times(), s.window_end())
            })
            .sum()
    }

    fn loglik_and_grad(&self, layout: Layout, z: &[f64]) -> (f64, Vec<f64>) {
        let (l0, a, d) = (z[0].exp(), z[1].exp(), z[2].exp());
        let mut grad = vec![0.0; z.len()];
        let mut total = 0.0;
        for (j, s) in self.members.iter().enumerate() {
            let gi = layout.gamma_index(j);
            let gamma = gi.map_or(l0, |i| z[i].exp());
            let (v, g) =
                hawkes_gradient_raw(l0, a, d, gamma, layout.shifted, s.times(), s.window_end());
            total += v;
            grad[0] += g.d_lambda0 * l0;
            grad[1] += g.d_alpha * a;
            grad[2] += g.d_delta * d;
            if let Some(i) = gi {
                grad[i] += g.d_gamma * gamma;
            }
        }
        (total, grad)
    }

    fn fit_hawkes(&self, model: ModelTag, options: &FitOptions) -> Result<FitResult> {
        let shifted = model == ModelTag::HawkesShifted;
        let layout = Layout {
            shifted,
            per_member: shifted && options.gamma_mode == GammaMode::PerMember,
            members: self.members.len(),
        };
        let dim = layout.dim();
        let bx = self.bounds(layout, &options.bounds);
        let log_margin = (1.0 - options.stability_margin).ln();
        const PENALTY: f64 = 1e4;

        let objective = |z: &[f64]| -> f64 {
            let (p, dist) = Self::project(z, &bx, log_margin);
            let ll = self.loglik_at(layout, &p);
            if ll.is_finite() {
                -ll + PENALTY * dist
            } else {
                f64::INFINITY
            }
        };
        let feasible = |z: &[f64]| -> bool {
            let gamma_cap = z[0] - (-(z[1] - z[2]).exp()).ln_1p();
            z.iter()
                .zip(bx.lo.iter().zip(&bx.hi))
                .all(|(v, (lo, hi))| v >= lo && v <= hi)
                && z[1] <= z[2] + log_margin
                && z.iter().skip(3).all(|g| *g <= gamma_cap)
        };
        let smooth = |z: &[f64]| -> (f64, Vec<f64>) {
            if !feasible(z) {
                return (f64::INFINITY, vec![0.0; z.len()]);
            }
            let (ll, g) = self.loglik_and_grad(layout, z);
            (-ll, g.into_iter().map(|v| -v).collect())
        };

        let simplex = NelderMead {
            max_iterations: options.max_iterations,
            f_tolerance: options.tolerance,
            initial_step: 0.5,
        };
        let polish = Bfgs::default();
        let mut rng = rng_from_seed(options.seed);
        let base_decay = self.mean_gap.map_or(self.rate, |g| 1.0 / g);

        let mut starts: Vec<Vec<f64>> = (0..options.starts.max(1))
            .map(|_| {
                let u: f64 = rng.random_range(0.1..0.9);
                let v: f64 = rng.random_range(0.5..1.5);
                let mut z0 = vec![
                    (self.rate * (1.0 - u)).ln(),
                    (base_decay * u).ln(),
                    base_decay.ln(),
                ];
                z0.resize(dim, (self.rate * v).ln());
                z0
            })
            .collect();
        if shifted {
            // the full-history optimum is the gamma = lambda0 slice of this model
            let nested = self.fit_hawkes(ModelTag::HawkesFull, options)?;
            let h = nested.params.hawkes().expect("hawkes fit");
            if h.alpha() > 0.0 {
                let mut z0 = vec![h.lambda0().ln(), h.alpha().ln(), h.delta().ln()];
                z0.resize(dim, h.lambda0().ln());
                starts.push(z0);
            }
        }

        let mut trace = Vec::with_capacity(starts.len() + 1);
        let mut best: Option<(Vec<f64>, f64, bool)> = None;
        for (start, z0) in starts.into_iter().enumerate() {
            let (z0, _) = Self::project(&z0, &bx, log_margin);

            let coarse = simplex.minimize(objective, &z0);
            let (mut z, value) = (Self::project(&coarse.x, &bx, log_margin).0, coarse.value);
            let mut polish_iterations = 0;
            let mut polish_converged = false;
            if feasible(&z) {
                let refined = polish.minimize(smooth, &z);
                polish_iterations = refined.iterations;
                polish_converged = refined.converged;
                if refined.value <= value {
                    z = refined.x;
                }
            }
            let ll = self.loglik_at(layout, &z);
            let converged = coarse.converged || polish_converged;
            trace.push(StartTrace {
                start: Some(start),
                initial: z0.iter().map(|v| v.exp()).collect(),
                simplex_iterations: coarse.iterations,
                simplex_converged: coarse.converged,
                polish_iterations,
                polish_converged,
                loglik: ll,
            });
            if best.as_ref().is_none_or(|(_, b, _)| ll > *b) {
                best = Some((z, ll, converged));
            }
        }
        let (z, mut loglik, mut converged) = best.expect("at least one start");

        // exact alpha = 0 face: Poisson at the pooled rate
        let nested_ll: f64 = self
            .members
            .iter()
            .map(|s| poisson_loglik_raw(self.rate, s.len(), s.window_end()))
            .sum();
        trace.push(StartTrace {
            start: None,
            initial: vec![self.rate, 0.0, base_decay],
            simplex_iterations: 0,
            simplex_converged: true,
            polish_iterations: 0,
            polish_converged: true,
            loglik: nested_ll,
        });

        let (lambda0, mut alpha, delta) = (z[0].exp(), z[1].exp(), z[2].exp());
        let mut gammas: Vec<f64> = (3..dim).map(|i| z[i].exp()).collect();
        let mut lambda0 = lambda0;
        let mut delta = delta;
        let mut at_box_bound = z
            .iter()
            .zip(bx.lo.iter().zip(&bx.hi))
            .enumerate()
            .any(|(i, (v, (lo, hi)))| i != 1 && ((v - lo).abs() < 1e-6 || (hi - v).abs() < 1e-6));
        if nested_ll > loglik {
            loglik = nested_ll;
            converged = true;
            lambda0 = self.rate;
            alpha = 0.0;
            delta = base_decay;
            gammas.iter_mut().for_each(|g| *g = self.rate);
            at_box_bound = false;
        }

        let params = if shifted {
            let shared = if layout.per_member {
                lambda0
            } else {
                gammas[0]
            };
            HawkesParams::shifted(lambda0, alpha, delta, shared)?
        } else {
            HawkesParams::full_history(lambda0, alpha, delta)?
        };
        let k = dim;
        let aic = aic_value(k, loglik);
        Ok(FitResult {
            model_tag: model,
            params: FittedParams::Hawkes(params),
            member_gammas: layout.per_member.then_some(gammas),
            loglik,
            n_events: self.total_events,
            k,
            aic,
            aicc: aicc_value(k, self.total_events, aic),
            optimizer_trace: trace,
            converged,
            at_stability_boundary: params.branching_ratio() >= 1.0 - 1e-4,
            at_box_bound,
            degenerate: self.total_events < 2,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::{loglik_hawkes, loglik_poisson};
    use crate::simulation::{simulate_hawkes, simulate_poisson, SimConfig};

    #[test]
    fn poisson_closed_form() {
        let times: Vec<f64> = (0..10).map(|i| i as f64 * 0.5).collect();
        let s = EventSeries::new("p", times, Some(5.0)).unwrap();
        let fit = fit_mle(ModelTag::Poisson, &s, &FitOptions::default()).unwrap();
        assert_eq!(fit.params.poisson().unwrap().rate(), 2.0);
        let n = 10.0f64;
        assert!((fit.aic - (2.0 - 2.0 * (n * (n / 5.0).ln() - n))).abs() < 1e-12);
    }

    #[test]
    fn aic_formulas() {
        assert_eq!(aic_value(1, -10.0), 22.0);
        let a = 17.3;
        assert!((aicc_value(4, 30, a).unwrap() - (a + 40.0 / 25.0)).abs() < 1e-12);
        assert_eq!(aicc_value(4, 5, a), None);
        assert!((relative_likelihood(6.0) - 0.0498).abs() < 1e-4);
    }

    #[test]
    fn zero_window_is_insufficient() {
        let s = EventSeries::new("one", vec![0.0], None).unwrap();
        assert!(matches!(
            fit_mle(ModelTag::Poisson, &s, &FitOptions::default()),
            Err(Error::InsufficientData(_))
        ));
        let s = s.with_window_end(2.0).unwrap();
        let fit = fit_mle(ModelTag::HawkesShifted, &s, &FitOptions::default()).unwrap();
        assert!(fit.degenerate);
    }

    #[test]
    fn reported_loglik_matches_params() {
        let p = HawkesParams::full_history(1.0, 3.0, 6.0).unwrap();
        let s = simulate_hawkes(&p, &SimConfig::events(3, 200)).unwrap();
        for model in [ModelTag::HawkesFull, ModelTag::HawkesShifted] {
            let fit = fit_mle(model, &s, &FitOptions::default()).unwrap();
            let h = fit.params.hawkes().unwrap();
            assert!((loglik_hawkes(h, &s) - fit.loglik).abs() < 1e-9 * fit.loglik.abs().max(1.0));
            assert!(fit.converged);
        }
    }

    #[test]
    fn nesting_order_holds() {
        let p = HawkesParams::full_history(1.0, 2.0, 4.0).unwrap();
        for seed in 0..5 {
            let s = simulate_hawkes(&p, &SimConfig::events(seed, 40)).unwrap();
            let o = FitOptions::default();
            let lp = fit_mle(ModelTag::Poisson, &s, &o).unwrap().loglik;
            let lf = fit_mle(ModelTag::HawkesFull, &s, &o).unwrap().loglik;
            let ls = fit_mle(ModelTag::HawkesShifted, &s, &o).unwrap().loglik;
            assert!(lf >= lp - 1e-6, "full {lf} < poisson {lp}");
            assert!(ls >= lf - 1e-6, "shifted {ls} < full {lf}");
        }
    }

    #[test]
    fn poisson_data_gains_little() {
        let mut gains = Vec::new();
        for seed in 0..50 {
            let s = simulate_poisson(
                &PoissonParams::new(2.0).unwrap(),
                &SimConfig::events(seed, 60),
            )
            .unwrap();
            let o = FitOptions::default();
            let lp = fit_mle(ModelTag::Poisson, &s, &o).unwrap();
            let lh = fit_mle(ModelTag::HawkesFull, &s, &o).unwrap();
            assert!((lp.loglik - loglik_poisson(lp.params.poisson().unwrap(), &s)).abs() < 1e-12);
            gains.push(lh.loglik - lp.loglik);
        }
        gains.sort_by(f64::total_cmp);
        let median = gains[gains.len() / 2];
        assert!(median < 3.0, "median gain {median}");
    }

    #[test]
    fn per_member_gamma_dof() {
        let p = HawkesParams::full_history(1.0, 1.0, 3.0).unwrap();
        let a = simulate_hawkes(&p, &SimConfig::events(1, 30)).unwrap();
        let b = simulate_hawkes(&p, &SimConfig::events(2, 30)).unwrap();
        let opts = FitOptions {
            gamma_mode: GammaMode::PerMember,
            ..FitOptions::default()
        };
        let fit = fit_pooled(ModelTag::HawkesShifted, &[&a, &b], &opts).unwrap();
        assert_eq!(fit.k, 5);
        assert_eq!(fit.member_gammas.as_ref().unwrap().len(), 2);
    }

    #[test]
    fn deterministic_fit() {
        let p = HawkesParams::full_history(1.0, 3.0, 6.0).unwrap();
        let s = simulate_hawkes(&p, &SimConfig::events(5, 80)).unwrap();
        let a = fit_mle(ModelTag::HawkesShifted, &s, &FitOptions::default()).unwrap();
        let b = fit_mle(ModelTag::HawkesShifted, &s, &FitOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
