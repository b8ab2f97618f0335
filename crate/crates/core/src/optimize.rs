//! Projected L-BFGS with box bounds.
//!
//! Variables sitting on a bound with the gradient pushing outward are
//! frozen for the step; the two-loop recursion runs on the rest, and an
//! Armijo backtracking search follows the projected path.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LbfgsConfig {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when the projected gradient infinity norm falls below this.
    pub gtol: f64,
    /// Stop when `|f_k - f_{k+1}| <= ftol * max(|f_k|, |f_{k+1}|, 1)`.
    pub ftol: f64,
    pub max_line_search: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iter: 1000,
            gtol: 1e-9,
            ftol: 1e-12,
            max_line_search: 40,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptStatus {
    GradientTolerance,
    EnergyTolerance,
    MaxIterations,
    LineSearchFailed,
}

impl OptStatus {
    pub fn converged(self) -> bool {
        matches!(self, OptStatus::GradientTolerance | OptStatus::EnergyTolerance)
    }
}

#[derive(Clone, Debug)]
pub struct OptResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: OptStatus,
}

/// Per-variable bounds; use infinities for a free variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn unbounded(n: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    fn project(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }

    fn projected_gradient_norm(&self, x: &[f64], g: &[f64]) -> f64 {
        let mut m = 0.0f64;
        for i in 0..x.len() {
            let step = (x[i] - g[i]).clamp(self.lower[i], self.upper[i]) - x[i];
            m = m.max(step.abs());
        }
        m
    }

    fn frozen(&self, x: &[f64], g: &[f64], i: usize) -> bool {
        (x[i] <= self.lower[i] && g[i] > 0.0) || (x[i] >= self.upper[i] && g[i] < 0.0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f` from `x0`. `f` returns the value and gradient.
pub fn minimize<F>(mut f: F, x0: &[f64], bounds: &Bounds, cfg: &LbfgsConfig) -> OptResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    assert_eq!(bounds.lower.len(), n);
    assert_eq!(bounds.upper.len(), n);
    let mut x = x0.to_vec();
    bounds.project(&mut x);
    let (mut fx, mut g) = f(&x);
    let mut evaluations = 1;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();

    let done = |x: Vec<f64>, f: f64, grad: Vec<f64>, it: usize, ev: usize, status| OptResult {
        x,
        f,
        grad,
        iterations: it,
        evaluations: ev,
        status,
    };

    for iter in 0..cfg.max_iter {
        if bounds.projected_gradient_norm(&x, &g) < cfg.gtol {
            return done(x, fx, g, iter, evaluations, OptStatus::GradientTolerance);
        }
        let free: Vec<bool> = (0..n).map(|i| !bounds.frozen(&x, &g, i)).collect();
        let masked = |v: &[f64]| -> Vec<f64> {
            v.iter().zip(&free).map(|(a, &ok)| if ok { *a } else { 0.0 }).collect()
        };

        // Two-loop recursion on the free subspace.
        let mut q = masked(&g);
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(&masked(s), &q);
            for (qi, yi) in q.iter_mut().zip(masked(y)) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = history
            .back()
            .map(|(s, y, _)| dot(s, y) / dot(y, y))
            .unwrap_or(1.0);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(&masked(y), &q);
            for (qi, si) in q.iter_mut().zip(masked(s)) {
                *qi += (a - b) * si;
            }
        }
        let mut d: Vec<f64> = masked(&q).iter().map(|v| -v).collect();
        if !(dot(&d, &g) < 0.0) {
            history.clear();
            d = masked(&g).iter().map(|v| -v).collect();
        }

        let mut t = if history.is_empty() {
            let norm = d.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if norm > 1.0 { 1.0 / norm } else { 1.0 }
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..cfg.max_line_search {
            let mut xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            bounds.project(&mut xn);
            let step: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            let decrease = dot(&g, &step);
            if decrease >= 0.0 {
                t *= 0.5;
                continue;
            }
            let (fn_, gn) = f(&xn);
            evaluations += 1;
            if fn_ <= fx + 1e-4 * decrease {
                accepted = Some((xn, fn_, gn, step));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fn_, gn, s)) = accepted else {
            return done(x, fx, g, iter, evaluations, OptStatus::LineSearchFailed);
        };
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
            if history.len() == cfg.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        let change = (fx - fn_).abs();
        let scale = fx.abs().max(fn_.abs()).max(1.0);
        x = xn;
        fx = fn_;
        g = gn;
        if change <= cfg.ftol * scale {
            let status = if bounds.projected_gradient_norm(&x, &g) < cfg.gtol {
                OptStatus::GradientTolerance
            } else {
                OptStatus::EnergyTolerance
            };
            return done(x, fx, g, iter + 1, evaluations, status);
        }
    }
    let status = if bounds.projected_gradient_norm(&x, &g) < cfg.gtol {
        OptStatus::GradientTolerance
    } else {
        OptStatus::MaxIterations
    };
    done(x, fx, g, cfg.max_iter, evaluations, status)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> (f64, Vec<f64>) {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![
            -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
            200.0 * (b - a * a),
        ];
        (f, g)
    }

    #[test]
    fn unconstrained_rosenbrock() {
        let r = minimize(rosenbrock, &[-1.2, 1.0], &Bounds::unbounded(2), &LbfgsConfig::default());
        assert!(r.status.converged(), "{:?}", r.status);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{:?}", r.x);
    }

    #[test]
    fn active_bound() {
        // Minimum of (x - 3)^2 + (y + 1)^2 on [-1, 1]^2 is (1, -1).
        let f = |x: &[f64]| {
            (
                (x[0] - 3.0).powi(2) + (x[1] + 1.0).powi(2),
                vec![2.0 * (x[0] - 3.0), 2.0 * (x[1] + 1.0)],
            )
        };
        let b = Bounds {
            lower: vec![-1.0, -1.0],
            upper: vec![1.0, 1.0],
        };
        let r = minimize(f, &[0.0, 0.5], &b, &LbfgsConfig::default());
        assert!(r.status.converged());
        assert_eq!(r.x[0], 1.0);
        assert!((r.x[1] + 1.0).abs() < 1e-9);
        assert!((r.f - 4.0).abs() < 1e-12);
    }

    #[test]
    fn start_at_optimum() {
        let f = |x: &[f64]| (x[0] * x[0], vec![2.0 * x[0]]);
        let r = minimize(f, &[0.0], &Bounds::unbounded(1), &LbfgsConfig::default());
        assert_eq!(r.iterations, 0);
        assert_eq!(r.status, OptStatus::GradientTolerance);
    }

    #[test]
    fn cosine_energy() {
        // E(theta) = cos(2 theta) on [-pi, pi]: minimum -1 at +-pi/2.
        let f = |x: &[f64]| ((2.0 * x[0]).cos(), vec![-2.0 * (2.0 * x[0]).sin()]);
        let pi = std::f64::consts::PI;
        let b = Bounds {
            lower: vec![-pi],
            upper: vec![pi],
        };
        let r = minimize(f, &[0.1], &b, &LbfgsConfig::default());
        assert!((r.f + 1.0).abs() < 1e-14);
        assert!((r.x[0] - pi / 2.0).abs() < 1e-6);
    }
}
