#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sparse_hawkes::{intensity_at, EventSeries, HawkesParams};

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 50)
}

/// Integral of the conditional intensity over `[0, horizon]`, piecewise between events
/// (the integrand is smooth on each piece).
pub fn quadrature_compensator(p: &HawkesParams, s: &EventSeries, horizon: f64) -> f64 {
    let mut knots: Vec<f64> = s.times().to_vec();
    knots.push(horizon);
    let mut total = 0.0;
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        // evaluate just inside the piece so the event at `a` is counted
        let f = |t: f64| intensity_at(p, s, t.max(a + f64::EPSILON * a.max(1.0)).min(b)).unwrap();
        total += adaptive_simpson(&f, a, b, 1e-14);
    }
    total
}

/// O(N^2) direct double sum.
pub fn brute_force_loglik(p: &HawkesParams, s: &EventSeries) -> f64 {
    let t = s.times();
    let (l0, a, d, ex) = (p.lambda0(), p.alpha(), p.delta(), p.initial_excess());
    let mut log_sum = 0.0;
    for i in 0..t.len() {
        let mut lam = l0 + ex * (-d * t[i]).exp();
        for j in 0..i {
            lam += a * (-d * (t[i] - t[j])).exp();
        }
        log_sum += lam.ln();
    }
    let big_t = s.window_end();
    let mut comp = l0 * big_t + ex / d * (1.0 - (-d * big_t).exp());
    for &ti in t {
        comp += a / d * (1.0 - (-d * (big_t - ti)).exp());
    }
    log_sum - comp
}

pub fn random_series<R: Rng>(rng: &mut R, n: usize, extra_window: bool) -> EventSeries {
    let mut times = vec![0.0];
    let mut t = 0.0;
    for _ in 1..n {
        t += -(1.0 - rng.random::<f64>()).ln() * rng.random_range(0.05..2.0);
        times.push(t);
    }
    let window = if extra_window {
        Some(t + rng.random_range(0.0..3.0))
    } else {
        None
    };
    EventSeries::new("rand", times, window).unwrap()
}

pub fn random_params<R: Rng>(rng: &mut R, shifted: bool) -> HawkesParams {
    let l0 = rng.random_range(0.1..3.0);
    let d = rng.random_range(0.2..8.0);
    let a = d * rng.random_range(0.0..0.95);
    if shifted {
        HawkesParams::shifted(l0, a, d, rng.random_range(0.05..6.0)).unwrap()
    } else {
        HawkesParams::full_history(l0, a, d).unwrap()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    sparse_hawkes::rng::rng_from_seed(seed)
}

/// One-sample KS statistic against a continuous CDF.
pub fn one_sample_ks<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Exact permutation p-value of the two-sample KS statistic: fraction of all
/// relabelings of the pooled sample whose statistic is at least the observed one.
pub fn exact_permutation_ks_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    let k = a.len();
    let observed = sparse_hawkes::ks::ks_statistic(a, b);
    let (mut hits, mut total) = (0u64, 0u64);
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let mut left = Vec::with_capacity(k);
        let mut right = Vec::with_capacity(n - k);
        let mut next = 0;
        for (i, v) in pooled.iter().enumerate() {
            if next < k && idx[next] == i {
                left.push(*v);
                next += 1;
            } else {
                right.push(*v);
            }
        }
        total += 1;
        if sparse_hawkes::ks::ks_statistic(&left, &right) >= observed - 1e-12 {
            hits += 1;
        }
        // next k-combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return hits as f64 / total as f64;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            r[o] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
