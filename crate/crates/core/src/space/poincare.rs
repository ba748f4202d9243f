//! Best constant in `sum mu |u|^p <= C * energy(u)` over functions vanishing
//! off `E`.

use crate::error::{Error, Result};
use crate::linalg::lowest_generalized_eigen;
use crate::solver::{minimize, Bounds, Functional, Settings, StepRule};

use super::{Diff, Space, Stencil, VertexSet};

#[derive(Clone, Debug)]
pub struct PoincareEstimate {
    /// Best available estimate of the constant.
    pub value: f64,
    /// Rayleigh quotient of an explicit test function; never exceeds the constant.
    pub certified_lower: f64,
    /// Extrapolated value; equals `value` for `p = 2`.
    pub heuristic: f64,
    /// The maximizing function, zero off `E`.
    pub extremal: Vec<f64>,
    pub iterations: usize,
}

/// Stencil on the unknowns of `E` with every outside vertex merged into one
/// grounded index `m`, so functions pinned to zero off `E` become vectors of
/// length `m + 1` with a trailing zero.
fn grounded(n: usize, set: &VertexSet, stencil: &Stencil) -> (Vec<usize>, Stencil) {
    let idx: Vec<usize> = set.iter().collect();
    let m = idx.len();
    let mut map = vec![m; n];
    for (k, &v) in idx.iter().enumerate() {
        map[v] = k;
    }
    let mut st = Stencil::new();
    let mut buf = Vec::new();
    for (w, comps) in stencil.terms() {
        buf.clear();
        buf.extend(
            comps
                .iter()
                .map(|d| Diff {
                    tail: map[d.tail],
                    head: map[d.head],
                    inv_len: d.inv_len,
                })
                .filter(|d| d.head != d.tail),
        );
        st.push(w, &buf);
    }
    (idx, st)
}

fn quotient(st: &Stencil, mass: &[f64], x: &[f64], p: f64) -> f64 {
    let num: f64 = mass.iter().zip(x).map(|(m, v)| m * v.abs().powf(p)).sum();
    let den = st.energy(x, p);
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

pub fn poincare_constant(space: &Space, set: &VertexSet, p: f64) -> Result<PoincareEstimate> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    if set.universe() != space.n_vertices() {
        return Err(Error::LengthMismatch {
            expected: space.n_vertices(),
            got: set.universe(),
        });
    }
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let free = space.isolated_components(set);
    if let Some(c) = free
        .iter()
        .find(|c| c.iter().any(|&v| space.measure()[v] > 0.0))
    {
        return Err(Error::FreeProblem(format!(
            "{} vertices of E (first {}) are not tied to the complement; constants there make the ratio infinite",
            c.len(),
            c[0]
        )));
    }
    poincare_constant_with(&space.problem_stencil(set), space.measure(), set, p)
}

/// Same constant for an explicit energy stencil and vertex measure, both
/// indexed like `set`. The caller makes sure every part of `E` with
/// positive mass is tied to the complement.
pub fn poincare_constant_with(
    stencil: &Stencil,
    measure: &[f64],
    set: &VertexSet,
    p: f64,
) -> Result<PoincareEstimate> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    let n = set.universe();
    if measure.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: measure.len(),
        });
    }
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let (idx, st) = grounded(n, set, stencil);
    let m = idx.len();
    let mut mass: Vec<f64> = idx.iter().map(|&v| measure[v]).collect();
    mass.push(0.0);
    if mass.iter().all(|&x| x == 0.0) {
        let extremal = vec![0.0; n];
        return Ok(PoincareEstimate {
            value: 0.0,
            certified_lower: 0.0,
            heuristic: 0.0,
            extremal,
            iterations: 0,
        });
    }
    let mut mask = vec![true; m + 1];
    mask[m] = false;
    let expand = |x: &[f64]| {
        let mut out = vec![0.0; n];
        for (k, &v) in idx.iter().enumerate() {
            out[v] = x[k];
        }
        out
    };

    if p == 2.0 {
        let zero = vec![0.0; m + 1];
        let f = Functional {
            stencil: &st,
            p: 2.0,
            eps2: 0.0,
            mass: None,
            linear: None,
        };
        let hess = f.hessian(&zero);
        let diag = hess.diagonal(m + 1);
        let k_diag: Vec<f64> = diag[..m].iter().map(|d| 0.5 * d).collect();
        let mut buf = vec![0.0; m + 1];
        let mut out = vec![0.0; m + 1];
        let cell = std::cell::RefCell::new((buf.as_mut_slice(), out.as_mut_slice()));
        let apply = |x: &[f64], y: &mut [f64]| {
            let mut guard = cell.borrow_mut();
            let (b, o) = &mut *guard;
            b[..m].copy_from_slice(x);
            b[m] = 0.0;
            hess.apply(b, o, &mask);
            for i in 0..m {
                y[i] = 0.5 * o[i];
            }
        };
        let ep = lowest_generalized_eigen(apply, &k_diag, &mass[..m], 1e-13, 2000);
        let mut x = ep.vector.clone();
        x.push(0.0);
        let certified = quotient(&st, &mass, &x, 2.0);
        let value = 1.0 / ep.value;
        return Ok(PoincareEstimate {
            value,
            certified_lower: certified.min(value),
            heuristic: value,
            extremal: expand(&x[..m]),
            iterations: ep.iterations,
        });
    }

    // inverse power iteration: solve -Delta_p v = mu |u|^(p-2) u, normalize
    let mut x = mass
        .iter()
        .map(|&w| if w > 0.0 { 1.0 } else { 0.0 })
        .collect::<Vec<f64>>();
    x[m] = 0.0;
    let bounds = Bounds {
        lower: vec![f64::NEG_INFINITY; m + 1],
        upper: vec![f64::INFINITY; m + 1],
        free: mask.clone(),
    };
    let settings = Settings {
        tol_energy: 1e-14,
        tol_kkt: 1e-11,
        tol_step: 1e-10,
        max_iter: 400,
        step_rule: StepRule::Backtracking,
    };
    let eps = if p < 2.0 {
        1e-10 / st.min_length()
    } else {
        0.0
    };
    let mut rq = vec![quotient(&st, &mass, &x, p)];
    let mut best = (rq[0], x.clone());
    let mut iterations = 0;
    for it in 0..200 {
        iterations = it + 1;
        let c: Vec<f64> = mass
            .iter()
            .zip(&x)
            .map(|(w, v)| -w * v.signum() * v.abs().powf(p - 1.0))
            .collect();
        let f = Functional {
            stencil: &st,
            p,
            eps2: eps * eps,
            mass: None,
            linear: Some(&c),
        };
        let out = minimize(&f, &bounds, x.clone(), &settings)?;
        let mut y = out.x;
        let norm = mass
            .iter()
            .zip(&y)
            .map(|(w, v)| w * v.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p);
        if !(norm > 0.0) {
            break;
        }
        y.iter_mut().for_each(|v| *v /= norm);
        let q = quotient(&st, &mass, &y, p);
        x = y;
        if q > best.0 {
            best = (q, x.clone());
        }
        let prev = *rq.last().expect("nonempty");
        rq.push(q);
        if (q - prev).abs() <= 1e-12 * q {
            break;
        }
    }
    let heuristic = aitken(&rq).unwrap_or(best.0).max(best.0);
    Ok(PoincareEstimate {
        value: best.0,
        certified_lower: best.0,
        heuristic,
        extremal: expand(&best.1[..m]),
        iterations,
    })
}

fn aitken(seq: &[f64]) -> Option<f64> {
    let n = seq.len();
    if n < 3 {
        return None;
    }
    let (a, b, c) = (seq[n - 3], seq[n - 2], seq[n - 1]);
    let den = c - 2.0 * b + a;
    if den.abs() < f64::MIN_POSITIVE || !(b - a).is_finite() {
        return None;
    }
    let x = c - (c - b) * (c - b) / den;
    x.is_finite().then_some(x)
}
