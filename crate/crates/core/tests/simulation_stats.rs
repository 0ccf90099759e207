mod common;

use common::*;
use sparse_hawkes::ks::kolmogorov_survival;
use sparse_hawkes::simulation::DEFAULT_BURN_IN;
use sparse_hawkes::{
    extract_excerpt, simulate_hawkes, simulate_hawkes_excerpt, simulate_poisson, HawkesParams,
    PoissonParams, SimConfig,
};

fn one_sample_p(sample: &[f64], rate: f64) -> f64 {
    let d = one_sample_ks(sample, |x| 1.0 - (-rate * x).exp());
    let n = (sample.len() as f64).sqrt();
    kolmogorov_survival((n + 0.12 + 0.11 / n) * d)
}

fn mean_rate(times: &[f64]) -> f64 {
    (times.len() - 1) as f64 / times[times.len() - 1]
}

#[test]
fn poisson_gaps_are_exponential() {
    let p = PoissonParams::new(2.0).unwrap();
    let s = simulate_poisson(&p, &SimConfig::events(11, 10_000)).unwrap();
    let gaps = s.interarrivals().unwrap();
    assert!(one_sample_p(&gaps.deltas, 2.0) > 0.01);
    let sd = 0.5 / (gaps.len() as f64).sqrt();
    assert!((gaps.mean() - 0.5).abs() < 3.0 * sd);
}

#[test]
fn poisson_mean_gap_long_run() {
    let p = PoissonParams::new(2.0).unwrap();
    let s = simulate_poisson(&p, &SimConfig::events(3, 100_000)).unwrap();
    let g = s.interarrivals().unwrap();
    assert!((g.mean() - 0.5).abs() < 3.0 * 0.5 / (g.len() as f64).sqrt());
}

#[test]
fn unexcited_hawkes_behaves_like_poisson() {
    let p = HawkesParams::full_history(1.5, 0.0, 4.0).unwrap();
    let s = simulate_hawkes(&p, &SimConfig::events(5, 10_000)).unwrap();
    assert!(one_sample_p(&s.interarrivals().unwrap().deltas, 1.5) > 0.01);
}

#[test]
fn stationary_rate_one_three_six() {
    let p = HawkesParams::full_history(1.0, 3.0, 6.0).unwrap();
    let s = simulate_hawkes(&p, &SimConfig::events(2024, 100_000)).unwrap();
    let rate = mean_rate(s.times());
    assert!((rate - 2.0).abs() / 2.0 < 0.02, "rate {rate}");
}

#[test]
fn stationary_rate_one_two_three_half() {
    let p = HawkesParams::full_history(1.0, 2.0, 3.5).unwrap();
    let s = simulate_hawkes(&p, &SimConfig::events(77, 100_000)).unwrap();
    let rate = mean_rate(s.times());
    assert!((rate - 7.0 / 3.0).abs() / (7.0 / 3.0) < 0.05, "rate {rate}");
}

#[test]
fn excitation_raises_the_rate() {
    for seed in 0..5 {
        let p = HawkesParams::full_history(1.0, 0.5, 2.0).unwrap();
        let s = simulate_hawkes(&p, &SimConfig::events(seed, 20_000)).unwrap();
        assert!(mean_rate(s.times()) > 1.0);
    }
}

#[test]
fn shifted_start_is_seeded_with_gamma() {
    // a large initial intensity front-loads events
    let hot = HawkesParams::shifted(0.5, 0.5, 1.0, 20.0).unwrap();
    let cold = HawkesParams::shifted(0.5, 0.5, 1.0, 0.5).unwrap();
    let early = |p: &HawkesParams| -> f64 {
        (0..200)
            .map(|seed| {
                let s = simulate_hawkes(p, &SimConfig::horizon(seed, 1.0)).unwrap();
                s.len() as f64
            })
            .sum::<f64>()
            / 200.0
    };
    assert!(early(&hot) > 2.0 * early(&cold));
}

#[test]
fn determinism_across_threads() {
    let p = HawkesParams::shifted(1.0, 2.0, 3.5, 2.5).unwrap();
    let cfg = SimConfig::events(99, 2_000);
    let reference = simulate_hawkes(&p, &cfg).unwrap();
    let handles: Vec<_> = (0..4)
        .map(|_| std::thread::spawn(move || simulate_hawkes(&p, &cfg).unwrap()))
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap(), reference);
    }
}

#[test]
fn excerpt_gaps_come_from_parent() {
    let p = HawkesParams::full_history(1.0, 3.0, 10.0).unwrap();
    let cfg = SimConfig::events(8, DEFAULT_BURN_IN + 100);
    let parent = simulate_hawkes(&p, &cfg).unwrap();
    let ex = extract_excerpt(&parent, 16, &cfg).unwrap();
    assert_eq!(ex.times()[0], 0.0);
    assert!(ex.times().windows(2).all(|w| w[1] > w[0]));
    let parent_gaps = parent.interarrivals().unwrap().deltas;
    for g in ex.interarrivals().unwrap().deltas {
        assert!(parent_gaps
            .iter()
            .any(|pg| (pg - g).abs() <= 1e-9 * pg.max(1.0)));
    }
    assert!(ex.window_end() > ex.times()[15]);
}

#[test]
fn excerpt_is_seed_deterministic() {
    let p = HawkesParams::full_history(1.0, 3.0, 10.0).unwrap();
    let a = simulate_hawkes_excerpt(&p, 16, DEFAULT_BURN_IN, 4).unwrap();
    let b = simulate_hawkes_excerpt(&p, 16, DEFAULT_BURN_IN, 4).unwrap();
    let c = simulate_hawkes_excerpt(&p, 16, DEFAULT_BURN_IN, 5).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.times(), c.times());
}
