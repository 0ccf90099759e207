//! Unconstrained minimizers used by the likelihood fits: a Nelder-Mead simplex
//! search and a BFGS polish with backtracking line search.

#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub max_iterations: usize,
    /// Stop when `f_max - f_min` across the simplex falls below this.
    pub f_tolerance: f64,
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            max_iterations: 400,
            f_tolerance: 1e-8,
            initial_step: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

impl NelderMead {
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, mut f: F, x0: &[f64]) -> Minimum {
        let n = x0.len();
        assert!(n >= 1, "Nelder-Mead needs at least one dimension");
        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        simplex.push(x0.to_vec());
        for i in 0..n {
            let mut v = x0.to_vec();
            v[i] += self.initial_step;
            simplex.push(v);
        }
        let mut values: Vec<f64> = simplex.iter().map(|v| sanitize(f(v))).collect();
        let mut order: Vec<usize> = (0..=n).collect();

        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iterations {
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            let (best, worst, second) = (order[0], order[n], order[n - 1]);
            let spread = values[worst] - values[best];
            if spread.is_finite() && spread <= self.f_tolerance {
                converged = true;
                break;
            }
            iterations += 1;

            let mut centroid = vec![0.0; n];
            for &idx in &order[..n] {
                for (c, x) in centroid.iter_mut().zip(&simplex[idx]) {
                    *c += x / n as f64;
                }
            }
            let along = |coef: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[worst])
                    .map(|(c, w)| c + coef * (c - w))
                    .collect()
            };

            let reflected = along(1.0);
            let fr = sanitize(f(&reflected));
            if fr < values[best] {
                let expanded = along(2.0);
                let fe = sanitize(f(&expanded));
                if fe < fr {
                    simplex[worst] = expanded;
                    values[worst] = fe;
                } else {
                    simplex[worst] = reflected;
                    values[worst] = fr;
                }
                continue;
            }
            if fr < values[second] {
                simplex[worst] = reflected;
                values[worst] = fr;
                continue;
            }
            let (contracted, fc) = if fr < values[worst] {
                let c = along(0.5);
                let fc = sanitize(f(&c));
                (c, fc)
            } else {
                let c = along(-0.5);
                let fc = sanitize(f(&c));
                (c, fc)
            };
            if fc < values[worst].min(fr) {
                simplex[worst] = contracted;
                values[worst] = fc;
                continue;
            }
            // shrink toward the best vertex
            let anchor = simplex[best].clone();
            for &idx in &order[1..] {
                for (x, a) in simplex[idx].iter_mut().zip(&anchor) {
                    *x = a + 0.5 * (*x - a);
                }
                values[idx] = sanitize(f(&simplex[idx]));
            }
        }
        let best = (0..=n)
            .min_by(|&a, &b| values[a].total_cmp(&values[b]))
            .unwrap();
        Minimum {
            x: simplex[best].clone(),
            value: values[best],
            iterations,
            converged,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Bfgs {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
}

impl Default for Bfgs {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gradient_tolerance: 1e-7,
        }
    }
}

impl Bfgs {
    /// `f` returns the value and gradient; infeasible points report `+inf`.
    pub fn minimize<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(&self, mut f: F, x0: &[f64]) -> Minimum {
        let n = x0.len();
        let mut x = x0.to_vec();
        let (mut fx, mut g) = f(&x);
        let mut h = identity(n);
        let mut iterations = 0;
        let mut converged = false;
        if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Minimum {
                x,
                value: sanitize(fx),
                iterations,
                converged,
            };
        }
        while iterations < self.max_iterations {
            let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if gnorm <= self.gradient_tolerance * (1.0 + fx.abs()) {
                converged = true;
                break;
            }
            iterations += 1;
            let mut dir: Vec<f64> = (0..n)
                .map(|i| -(0..n).map(|j| h[i][j] * g[j]).sum::<f64>())
                .collect();
            let mut slope: f64 = dir.iter().zip(&g).map(|(d, gi)| d * gi).sum();
            if !(slope < 0.0) {
                h = identity(n);
                dir = g.iter().map(|v| -v).collect();
                slope = -g.iter().map(|v| v * v).sum::<f64>();
            }
            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
                let (ft, gt) = f(&trial);
                if ft.is_finite()
                    && ft <= fx + 1e-4 * step * slope
                    && gt.iter().all(|v| v.is_finite())
                {
                    accepted = Some((trial, ft, gt));
                    break;
                }
                step *= 0.5;
            }
            let Some((xn, fnew, gn)) = accepted else {
                break;
            };
            let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
            let improvement = fx - fnew;
            x = xn;
            fx = fnew;
            g = gn;
            if sy > 1e-12 {
                let hy: Vec<f64> = (0..n)
                    .map(|i| (0..n).map(|j| h[i][j] * y[j]).sum())
                    .collect();
                let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
                let rho = 1.0 / sy;
                for i in 0..n {
                    for j in 0..n {
                        h[i][j] += (1.0 + yhy * rho) * rho * s[i] * s[j]
                            - rho * (hy[i] * s[j] + s[i] * hy[j]);
                    }
                }
            }
            if improvement.abs() <= 1e-14 * (1.0 + fx.abs()) {
                let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                converged = gnorm <= 1e-4 * (1.0 + fx.abs());
                break;
            }
        }
        Minimum {
            x,
            value: fx,
            iterations,
            converged,
        }
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    fn rosenbrock_grad(x: &[f64]) -> (f64, Vec<f64>) {
        let g0 = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]);
        let g1 = 200.0 * (x[1] - x[0] * x[0]);
        (rosenbrock(x), vec![g0, g1])
    }

    #[test]
    fn nelder_mead_quadratic() {
        let nm = NelderMead {
            max_iterations: 2000,
            f_tolerance: 1e-14,
            initial_step: 0.5,
        };
        let m = nm.minimize(
            |x| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2) + (x[2] - 0.5).powi(2),
            &[0.0, 0.0, 0.0],
        );
        assert!(m.converged);
        assert!(
            (m.x[0] - 3.0).abs() < 1e-5
                && (m.x[1] + 1.0).abs() < 1e-5
                && (m.x[2] - 0.5).abs() < 1e-5
        );
    }

    #[test]
    fn nelder_mead_handles_infeasible_regions() {
        let nm = NelderMead {
            max_iterations: 2000,
            f_tolerance: 1e-12,
            initial_step: 0.3,
        };
        let m = nm.minimize(
            |x| {
                if x[0] < 0.0 {
                    f64::INFINITY
                } else {
                    (x[0] - 1.0).powi(2) + x[1].powi(2)
                }
            },
            &[0.5, 0.5],
        );
        assert!((m.x[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn bfgs_rosenbrock() {
        let m = Bfgs {
            max_iterations: 500,
            gradient_tolerance: 1e-10,
        }
        .minimize(rosenbrock_grad, &[-1.2, 1.0]);
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6);
    }
}
