use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::solver::{solve, ObstacleProblem, SolverConfig};
use crate::space::{ObstacleField, ScalarField, Space, VertexSet};

use super::variational_capacity;

/// `int phi^p dcap(., E)` for a nonnegative step function `phi` on `E`,
/// evaluated exactly level by level.
#[derive(Clone, Debug)]
pub struct ChoquetIntegral {
    /// Distinct positive values `t_1 < ... < t_m`.
    pub levels: Vec<f64>,
    /// `capacities[k] = cap({phi >= t_(k+1)}, E)`, the capacity on `(t_k, t_(k+1))`.
    pub capacities: Vec<f64>,
    /// `sum_k capacities[k] * (t_(k+1)^p - t_k^p)`, that is
    /// `p * int_0^inf t^(p-1) cap({phi > t}, E) dt`.
    pub value: f64,
    /// `phi = +inf` on a set of positive capacity.
    pub infinite: bool,
    pub p: f64,
}

impl ChoquetIntegral {
    /// `int_0^inf t^(p-1) cap({phi > t}, E) dt`.
    pub fn level_integral(&self) -> f64 {
        self.value / self.p
    }
}

fn distinct_levels(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut t: Vec<f64> = values.filter(|x| *x > 0.0 && x.is_finite()).collect();
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

/// Choquet integral of `phi` against `cap_p(., E)`, one capacity solve per
/// distinct level, run in parallel.
pub(crate) fn choquet(
    space: &Space,
    phi: &[f64],
    e: &VertexSet,
    p: f64,
    config: &SolverConfig,
) -> Result<ChoquetIntegral> {
    let levels = distinct_levels(e.iter().map(|v| phi[v]));
    let n = space.n_vertices();
    let capacities: Vec<f64> = levels
        .par_iter()
        .map(|&t| {
            let a = VertexSet::from_predicate(n, |v| e.contains(v) && phi[v] >= t);
            variational_capacity(space, &a, e, p, config).map(|c| c.value)
        })
        .collect::<Result<_>>()?;
    let mut value = 0.0;
    let mut prev = 0.0f64;
    for (k, &t) in levels.iter().enumerate() {
        value += capacities[k] * (t.powf(p) - prev.powf(p));
        prev = t;
    }
    let inf_set = VertexSet::from_predicate(n, |v| e.contains(v) && phi[v] == f64::INFINITY);
    let infinite =
        !inf_set.is_empty() && variational_capacity(space, &inf_set, e, p, config)?.value > 0.0;
    if infinite {
        value = f64::INFINITY;
    }
    Ok(ChoquetIntegral {
        levels,
        capacities,
        value,
        infinite,
        p,
    })
}

/// Adams' integral `int (psi - f)_+^p dcap(., E)` on the domain `E`.
pub fn adams_integral(
    space: &Space,
    psi: &ObstacleField,
    f: &ScalarField,
    e: &VertexSet,
    p: f64,
    config: &SolverConfig,
) -> Result<ChoquetIntegral> {
    super::check_p(p)?;
    super::check_universe(space, &[e])?;
    for len in [psi.len(), f.len()] {
        if len != space.n_vertices() {
            return Err(Error::LengthMismatch {
                expected: space.n_vertices(),
                got: len,
            });
        }
    }
    let gap: Vec<f64> = (0..space.n_vertices())
        .map(|v| {
            let g = psi[v] - f[v];
            if g.is_nan() {
                0.0
            } else {
                g.max(0.0)
            }
        })
        .collect();
    choquet(space, &gap, e, p, config)
}

/// `p^p log p / (p-1)^p`.
pub fn mazya_constant(p: f64) -> f64 {
    (p / (p - 1.0)).powf(p) * p.ln()
}

/// `log a / (a-1)^p`.
pub fn lemma_constant(a: f64, p: f64) -> f64 {
    a.ln() / (a - 1.0).powf(p)
}

#[derive(Clone, Debug)]
pub struct LemmaCheck {
    pub a: f64,
    /// `int_0^inf t^(p-1) cap(E_(at), E_t) dt`.
    pub lhs: f64,
    pub constant: f64,
    pub rhs: f64,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct MazyaReport {
    pub p: f64,
    /// `int_0^inf t^(p-1) cap({|u| > t}, E) dt`.
    pub lhs: f64,
    /// Energy of `u` over the whole space.
    pub energy: f64,
    pub constant: f64,
    pub rhs: f64,
    pub passed: bool,
    pub lemma: Vec<LemmaCheck>,
    pub levels: usize,
}

/// Maz'ya's capacitary inequality for `u` vanishing off `E`, together with
/// the two-level family over `a in {2, p, 4}`.
pub fn mazya_check(
    space: &Space,
    u: &ScalarField,
    e: &VertexSet,
    p: f64,
    config: &SolverConfig,
) -> Result<MazyaReport> {
    super::check_p(p)?;
    super::check_universe(space, &[e])?;
    let n = space.n_vertices();
    if u.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: u.len(),
        });
    }
    if let Some(v) = (0..n).find(|&v| !e.contains(v) && u[v] != 0.0) {
        return Err(Error::Constraint(format!(
            "u must vanish off E, but u({v}) = {}",
            u[v]
        )));
    }
    let abs: Vec<f64> = u.iter().map(|x| x.abs()).collect();
    let energy = space.ambient_energy(u, p)?;
    let choq = choquet(space, &abs, e, p, config)?;
    let lhs = choq.level_integral();
    let constant = mazya_constant(p);
    let rhs = constant * energy;
    let mut lemma = Vec::new();
    for a in [2.0, p, 4.0] {
        let l = two_level_integral(space, &abs, a, p, config)?;
        let c = lemma_constant(a, p);
        lemma.push(LemmaCheck {
            a,
            lhs: l,
            constant: c,
            rhs: c * energy,
            passed: l <= c * energy * (1.0 + 1e-9) + 1e-300,
        });
    }
    Ok(MazyaReport {
        p,
        lhs,
        energy,
        constant,
        rhs,
        passed: lhs <= rhs * (1.0 + 1e-9) + 1e-300,
        lemma,
        levels: choq.levels.len(),
    })
}

/// `int_0^inf t^(p-1) cap(E_(at), E_t) dt` with `E_t = {|u| > t}`. Both sets
/// are constant between consecutive points of `{t_k} U {t_k / a}`.
fn two_level_integral(
    space: &Space,
    abs: &[f64],
    a: f64,
    p: f64,
    config: &SolverConfig,
) -> Result<f64> {
    let levels = distinct_levels(abs.iter().copied());
    let mut br: Vec<f64> = levels.iter().flat_map(|&t| [t, t / a]).collect();
    br.push(0.0);
    br.sort_by(f64::total_cmp);
    br.dedup();
    let n = space.n_vertices();
    let parts: Vec<f64> = br
        .par_windows(2)
        .map(|w| {
            let s = 0.5 * (w[0] + w[1]);
            let inner = VertexSet::from_predicate(n, |v| abs[v] > a * s);
            if inner.is_empty() {
                return Ok(0.0);
            }
            let outer = VertexSet::from_predicate(n, |v| abs[v] > s);
            let c = variational_capacity(space, &inner, &outer, p, config)?.value;
            Ok(c * (w[1].powf(p) - w[0].powf(p)) / p)
        })
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum())
}

#[derive(Clone, Debug)]
pub struct AdamsReport {
    pub integral: ChoquetIntegral,
    /// Energy of `u - f` over the whole space for the single-obstacle solution `u`.
    pub gap_energy: f64,
    /// `integral / (p^(p+1) log p / (p-1)^p)`.
    pub bound: f64,
    pub passed: bool,
}

/// Solves the single-obstacle problem `u >= psi` on `E` with data `f` and
/// checks `energy(u - f) >= int (psi-f)_+^p dcap / (p^(p+1) log p/(p-1)^p)`.
pub fn adams_check(problem: &ObstacleProblem, config: &SolverConfig) -> Result<AdamsReport> {
    let space = &problem.space;
    let integral = adams_integral(
        space,
        &problem.psi1,
        &problem.f,
        &problem.domain,
        problem.p,
        config,
    )?;
    let sol = solve(problem, config)?;
    let diff: Vec<f64> = sol
        .u
        .iter()
        .zip(problem.f.iter())
        .map(|(a, b)| a - b)
        .collect();
    let gap_energy = space.ambient_energy(&diff, problem.p)?;
    let bound = integral.value / (problem.p * mazya_constant(problem.p));
    Ok(AdamsReport {
        passed: gap_energy >= bound * (1.0 - 1e-9),
        integral,
        gap_energy,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::build_grid;

    #[test]
    fn constant_at_two_is_four_log_two() {
        assert!((mazya_constant(2.0) - 4.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn single_vertex_integral_is_power_times_capacity() {
        let s = build_grid(&[(0.0, 1.0)], 0.125, &|_| 1.0).unwrap();
        let n = s.n_vertices();
        let e = VertexSet::from_predicate(n, |v| v > 0 && v + 1 < n);
        let mut psi = vec![f64::NEG_INFINITY; n];
        psi[3] = 0.7;
        let c = SolverConfig::default();
        let p = 2.5;
        let ch = adams_integral(
            &s,
            &ObstacleField::new(psi).unwrap(),
            &ScalarField::zeros(n),
            &e,
            p,
            &c,
        )
        .unwrap();
        let cap = variational_capacity(&s, &VertexSet::from_indices(n, [3]).unwrap(), &e, p, &c)
            .unwrap()
            .value;
        assert!((ch.value - 0.7f64.powf(p) * cap).abs() < 1e-12 * ch.value);
    }

    #[test]
    fn gap_below_data_gives_zero() {
        let s = build_grid(&[(0.0, 1.0)], 0.125, &|_| 1.0).unwrap();
        let n = s.n_vertices();
        let e = VertexSet::from_predicate(n, |v| v > 0 && v + 1 < n);
        let ch = adams_integral(
            &s,
            &ObstacleField::new(vec![-1.0; n]).unwrap(),
            &ScalarField::zeros(n),
            &e,
            2.0,
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(ch.value, 0.0);
        assert!(ch.levels.is_empty());
    }
}
