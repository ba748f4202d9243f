//! Projected Newton for box-constrained smooth convex minimization.
//!
//! Bertsekas' scheme: variables at a bound whose gradient pushes outward form
//! the active set and take a scaled gradient step; the rest take a truncated
//! CG Newton step. Steps are projected onto the box and backtracked along the
//! projection arc with an Armijo test.

use crate::error::{Error, Result};
use crate::linalg::{pcg_with, IncompleteCholesky};

use super::functional::Functional;
use super::StepRule;

pub(crate) struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Variables the solver may move; the rest stay at their start value.
    pub free: Vec<bool>,
}

impl Bounds {
    #[inline]
    fn clamp(&self, i: usize, x: f64) -> f64 {
        x.max(self.lower[i]).min(self.upper[i])
    }

    /// `max |x - P(x - g)|` over free variables.
    pub fn kkt(&self, x: &[f64], g: &[f64]) -> f64 {
        let mut r: f64 = 0.0;
        for i in 0..x.len() {
            if self.free[i] {
                r = r.max((x[i] - self.clamp(i, x[i] - g[i])).abs());
            }
        }
        r
    }
}

pub(crate) struct Settings {
    pub tol_energy: f64,
    pub tol_kkt: f64,
    pub tol_step: f64,
    pub max_iter: usize,
    pub step_rule: StepRule,
}

pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub kkt: f64,
    /// `(value, kkt)` after every accepted iterate, starting with the initial point.
    pub history: Vec<(f64, f64)>,
}

const ARMIJO: f64 = 1e-4;

pub(crate) fn minimize(
    f: &Functional<'_>,
    bounds: &Bounds,
    mut x: Vec<f64>,
    s: &Settings,
) -> Result<Outcome> {
    let n = x.len();
    for i in 0..n {
        if bounds.free[i] {
            x[i] = bounds.clamp(i, x[i]);
        }
    }
    let mut g = vec![0.0; n];
    let mut gabs = vec![0.0; n];
    let mut value = f.value(&x);
    f.gradient(&x, &mut g, &mut gabs);
    let mut kkt = bounds.kkt(&x, &g);
    let kkt0 = kkt;
    let mut history = vec![(value, kkt)];
    let floor = |gabs: &[f64]| {
        256.0
            * f64::EPSILON
            * gabs
                .iter()
                .zip(&bounds.free)
                .filter(|(_, &fr)| fr)
                .fold(0.0f64, |m, (a, _)| m.max(*a))
    };
    let mut noise = floor(&gabs);
    if kkt <= noise || !bounds.free.iter().any(|&b| b) {
        return Ok(Outcome {
            x,
            iterations: 0,
            kkt,
            history,
        });
    }

    let mut d = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut mask = vec![false; n];
    let mut iterations = 0;
    while iterations < s.max_iter {
        iterations += 1;
        let eps_act = kkt.min(1e-3);
        for i in 0..n {
            mask[i] = false;
            if !bounds.free[i] {
                continue;
            }
            let at_lower = x[i] - bounds.lower[i] <= eps_act && g[i] > 0.0;
            let at_upper = bounds.upper[i] - x[i] <= eps_act && g[i] < 0.0;
            mask[i] = !(at_lower || at_upper);
        }
        let hess = f.hessian(&x);
        let diag = hess.diagonal(n);
        for i in 0..n {
            rhs[i] = if mask[i] { -g[i] } else { 0.0 };
            d[i] = 0.0;
        }
        let eta = (kkt / kkt0.max(f64::MIN_POSITIVE))
            .sqrt()
            .clamp(1e-12, 0.1)
            .min(kkt.sqrt());
        let h = hess.assemble(&mask);
        let ic = IncompleteCholesky::new(&h);
        let cg = pcg_with(
            |v, o| h.mul_vec(v, o),
            |r, z| ic.solve(r, z),
            &rhs,
            &mut d,
            eta.max(1e-14),
            4 * n + 200,
        );
        if cg.hit_nonpositive_curvature && d.iter().all(|&v| v == 0.0) {
            for i in 0..n {
                if mask[i] {
                    d[i] = -g[i] / diag[i].max(f64::MIN_POSITIVE);
                }
            }
        }
        for i in 0..n {
            if bounds.free[i] && !mask[i] {
                d[i] = -g[i] / if diag[i] > 0.0 { diag[i] } else { 1.0 };
            }
        }
        if !d.iter().all(|v| v.is_finite()) {
            for i in 0..n {
                d[i] = if bounds.free[i] { -g[i] } else { 0.0 };
            }
        }

        let accepted = match s.step_rule {
            StepRule::Fixed(alpha) => {
                project_step(bounds, &x, &d, alpha, &mut trial);
                Some(f.value(&trial))
            }
            StepRule::Backtracking => {
                armijo(f, bounds, &x, &g, &d, value, &mut trial).or_else(|| {
                    // projected gradient fallback
                    for i in 0..n {
                        d[i] = if bounds.free[i] {
                            -g[i] / if diag[i] > 0.0 { diag[i] } else { 1.0 }
                        } else {
                            0.0
                        };
                    }
                    armijo(f, bounds, &x, &g, &d, value, &mut trial)
                })
            }
        };
        let Some(new_value) = accepted else {
            // no measurable decrease along any direction: rounding floor
            if kkt <= 1e3 * noise.max(s.tol_kkt * kkt0) {
                break;
            }
            return Err(Error::NotConverged { iterations, kkt });
        };
        let decrease = (value - new_value) / value.abs().max(f64::MIN_POSITIVE);
        let mut step: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..n {
            if bounds.free[i] {
                step = step.max((trial[i] - x[i]).abs());
                scale = scale.max(trial[i].abs());
            }
        }
        std::mem::swap(&mut x, &mut trial);
        value = new_value;
        f.gradient(&x, &mut g, &mut gabs);
        kkt = bounds.kkt(&x, &g);
        noise = floor(&gabs);
        history.push((value, kkt));
        let kkt_ok = kkt <= (s.tol_kkt * kkt0).max(noise);
        let still = step <= s.tol_step * scale.max(f64::MIN_POSITIVE);
        if still && (kkt <= noise || (kkt_ok && decrease.abs() <= s.tol_energy)) {
            break;
        }
    }
    if kkt > (s.tol_kkt * kkt0).max(noise) * 1e3 {
        return Err(Error::NotConverged { iterations, kkt });
    }
    Ok(Outcome {
        x,
        iterations,
        kkt,
        history,
    })
}

fn project_step(bounds: &Bounds, x: &[f64], d: &[f64], alpha: f64, out: &mut [f64]) {
    for i in 0..x.len() {
        out[i] = if bounds.free[i] {
            bounds.clamp(i, x[i] + alpha * d[i])
        } else {
            x[i]
        };
    }
}

/// Backtracking along `P(x + a d)`; returns the accepted value in `trial`.
fn armijo(
    f: &Functional<'_>,
    bounds: &Bounds,
    x: &[f64],
    g: &[f64],
    d: &[f64],
    value: f64,
    trial: &mut [f64],
) -> Option<f64> {
    let slack = 8.0 * f64::EPSILON * value.abs();
    let mut alpha = 1.0;
    for _ in 0..60 {
        project_step(bounds, x, d, alpha, trial);
        let mut model = 0.0;
        for i in 0..x.len() {
            model += g[i] * (trial[i] - x[i]);
        }
        if model >= 0.0 && trial.iter().zip(x).all(|(a, b)| a == b) {
            return None;
        }
        let v = f.value(trial);
        if v <= value + ARMIJO * model.min(0.0) + slack
            && v.is_finite()
            && (model < 0.0 || v < value)
        {
            return Some(refine(f, bounds, x, d, alpha, v, trial));
        }
        alpha *= 0.5;
    }
    None
}

/// Keeps halving an accepted step while that still lowers the value. Newton
/// steps overshoot on `|v|^p` with `p < 2`; this stops the resulting
/// oscillation at the cost of one extra evaluation on well-scaled steps.
fn refine(
    f: &Functional<'_>,
    bounds: &Bounds,
    x: &[f64],
    d: &[f64],
    mut alpha: f64,
    mut v: f64,
    trial: &mut [f64],
) -> f64 {
    let mut cand = vec![0.0; x.len()];
    for _ in 0..30 {
        alpha *= 0.5;
        project_step(bounds, x, d, alpha, &mut cand);
        let w = f.value(&cand);
        if !(w < v) {
            break;
        }
        v = w;
        trial.copy_from_slice(&cand);
    }
    v
}
