//! Double-obstacle and Dirichlet problems for the discrete p-energy.
//!
//! The admissible set is `{v : v = f off E, psi1 <= v <= psi2 on E}`. Only the
//! stencil terms touching `E` depend on the unknowns, so the solver minimizes
//! their sum; this equals the energy over `E` plus the fixed interface terms,
//! the discrete form of requiring `v - f` to vanish outside `E`.

mod functional;
mod newton;

pub(crate) use functional::Functional;
pub(crate) use newton::{minimize, Bounds, Settings};

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{ObstacleField, ScalarField, Space, Stencil, VertexSet};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Constant step length along the projected Newton direction.
    Fixed(f64),
    Backtracking,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Stop once the relative energy decrease falls below this.
    pub tol_energy: f64,
    /// Allowed obstacle violation in the returned solution.
    pub tol_feasibility: f64,
    /// Projected-gradient norm, relative to its initial value.
    pub tol_kkt: f64,
    /// Largest update still counted as converged, relative to the sup norm
    /// of the iterate. Catches the linear rate of Newton on `|v|^p`, `p > 2`,
    /// where a tiny gradient can hide a sizeable error.
    pub tol_step: f64,
    pub max_iter: usize,
    pub step_rule: StepRule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_energy: 1e-12,
            tol_feasibility: 0.0,
            tol_kkt: 1e-10,
            tol_step: 1e-10,
            max_iter: 500,
            step_rule: StepRule::Backtracking,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_energy > 0.0)
            || !(self.tol_kkt > 0.0)
            || !(self.tol_step > 0.0)
            || !(self.tol_feasibility >= 0.0)
            || self.max_iter == 0
        {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        if let StepRule::Fixed(a) = self.step_rule {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::Config(format!("fixed step {a} must be positive")));
            }
        }
        Ok(())
    }

    pub(crate) fn settings(&self) -> Settings {
        Settings {
            tol_energy: self.tol_energy,
            tol_kkt: self.tol_kkt,
            tol_step: self.tol_step,
            max_iter: self.max_iter,
            step_rule: self.step_rule,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ObstacleProblem {
    pub space: Arc<Space>,
    pub domain: VertexSet,
    /// Boundary data, read outside the domain; also the default start inside.
    pub f: ScalarField,
    pub psi1: ObstacleField,
    pub psi2: ObstacleField,
    pub p: f64,
}

impl ObstacleProblem {
    pub fn new(
        space: Arc<Space>,
        domain: VertexSet,
        f: ScalarField,
        psi1: ObstacleField,
        psi2: ObstacleField,
        p: f64,
    ) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidExponent(p));
        }
        let n = space.n_vertices();
        for len in [domain.universe(), f.len(), psi1.len(), psi2.len()] {
            if len != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: len,
                });
            }
        }
        if domain.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(Self {
            space,
            domain,
            f,
            psi1,
            psi2,
            p,
        })
    }

    /// No obstacles.
    pub fn dirichlet(space: Arc<Space>, domain: VertexSet, f: ScalarField, p: f64) -> Result<Self> {
        let n = space.n_vertices();
        Self::new(
            space,
            domain,
            f,
            ObstacleField::lower_free(n),
            ObstacleField::upper_free(n),
            p,
        )
    }

    /// Components of the domain that the pinned data cannot reach. A nonempty
    /// answer means the energy does not see constants there and uniqueness fails.
    pub fn free_components(&self) -> Vec<Vec<usize>> {
        self.space.isolated_components(&self.domain)
    }

    pub fn is_free(&self) -> bool {
        !self.free_components().is_empty()
    }

    /// Terms of the energy that depend on the unknowns.
    pub fn stencil(&self) -> Stencil {
        self.space.problem_stencil(&self.domain)
    }

    pub fn energy_of(&self, u: &[f64]) -> f64 {
        self.stencil().energy(u, self.p)
    }

    /// Largest obstacle violation of `u` on the domain.
    pub fn feasibility_violation(&self, u: &[f64]) -> f64 {
        self.domain.iter().fold(0.0f64, |m, v| {
            m.max(self.psi1[v] - u[v]).max(u[v] - self.psi2[v])
        })
    }
}

#[derive(Clone, Debug)]
pub struct Admissibility {
    pub feasible: bool,
    /// `f` clamped into `[psi1, psi2]` on the domain.
    pub witness: Option<ScalarField>,
    /// Energy of the witness, the terms touching the domain.
    pub witness_energy: Option<f64>,
    pub violating: Vec<usize>,
}

/// Feasibility sweep: a vertex is infeasible when no finite value fits
/// between its obstacles.
pub fn admissible_exists(problem: &ObstacleProblem) -> Admissibility {
    let violating: Vec<usize> = problem
        .domain
        .iter()
        .filter(|&v| {
            let (a, b) = (problem.psi1[v], problem.psi2[v]);
            a > b || a == f64::INFINITY || b == f64::NEG_INFINITY
        })
        .collect();
    if !violating.is_empty() {
        return Admissibility {
            feasible: false,
            witness: None,
            witness_energy: None,
            violating,
        };
    }
    let w = clamp_into(problem, problem.f.values());
    let energy = problem.energy_of(&w);
    let witness = ScalarField::new(w).expect("clamped finite data stays finite");
    Admissibility {
        feasible: true,
        witness: Some(witness),
        witness_energy: Some(energy),
        violating,
    }
}

fn clamp_into(problem: &ObstacleProblem, x: &[f64]) -> Vec<f64> {
    let mut out = problem.f.values().to_vec();
    for v in problem.domain.iter() {
        out[v] = x[v].max(problem.psi1[v]).min(problem.psi2[v]);
    }
    out
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub u: ScalarField,
    /// Energy of the terms touching the domain, without regularization.
    pub energy_value: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub feasibility_violation: f64,
    /// Smoothing `eps` in `(|v|^2 + eps^2)^(p/2)`; zero when `p >= 2`.
    pub regularization: f64,
    /// `(energy, kkt)` per iteration, regularized energy.
    pub history: Vec<(f64, f64)>,
    /// The domain has components the boundary data cannot reach.
    pub free_problem: bool,
}

pub fn solve(problem: &ObstacleProblem, config: &SolverConfig) -> Result<Solution> {
    solve_from(problem, config, None)
}

/// Solves starting from `start` (clamped into the admissible set), or from
/// the admissibility witness.
pub fn solve_from(
    problem: &ObstacleProblem,
    config: &SolverConfig,
    start: Option<&[f64]>,
) -> Result<Solution> {
    config.validate()?;
    let adm = admissible_exists(problem);
    if !adm.feasible {
        return Err(Error::Infeasible(adm.violating));
    }
    let x0 = match start {
        Some(s) => {
            if s.len() != problem.space.n_vertices() {
                return Err(Error::LengthMismatch {
                    expected: problem.space.n_vertices(),
                    got: s.len(),
                });
            }
            clamp_into(problem, s)
        }
        None => adm.witness.expect("feasible").into_inner(),
    };
    let stencil = problem.stencil();
    let out = minimize_box(
        &stencil,
        problem.p,
        None,
        x0,
        problem.psi1.values().to_vec(),
        problem.psi2.values().to_vec(),
        problem.domain.bits().to_vec(),
        config,
    )?;
    finish(problem, config, &stencil, out)
}

/// Working result of a box-constrained minimization.
pub(crate) struct BoxOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub kkt: f64,
    pub eps: f64,
    pub history: Vec<(f64, f64)>,
}

/// Minimizes the stencil energy (plus `lambda sum mu |u|^p` when `mass` is
/// given) over `lower <= x <= upper` on the `free` vertices, the rest fixed
/// at `x0`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn minimize_box(
    stencil: &Stencil,
    p: f64,
    mass: Option<(&[f64], f64)>,
    x0: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    free: Vec<bool>,
    config: &SolverConfig,
) -> Result<BoxOutcome> {
    config.validate()?;
    let eps = regularization(stencil, p, &x0);
    let f = Functional {
        stencil,
        p,
        eps2: eps * eps,
        mass,
        linear: None,
    };
    let bounds = Bounds { lower, upper, free };
    let out = minimize(&f, &bounds, x0, &config.settings())?;
    Ok(BoxOutcome {
        x: out.x,
        iterations: out.iterations,
        kkt: out.kkt,
        eps,
        history: out.history,
    })
}

fn finish(
    problem: &ObstacleProblem,
    config: &SolverConfig,
    stencil: &Stencil,
    out: BoxOutcome,
) -> Result<Solution> {
    let u = out.x;
    let violation = problem.feasibility_violation(&u);
    if violation > config.tol_feasibility {
        return Err(Error::Constraint(format!(
            "solution violates the obstacles by {violation}"
        )));
    }
    let energy_value = stencil.energy(&u, problem.p);
    Ok(Solution {
        u: ScalarField::new(u)?,
        energy_value,
        iterations: out.iterations,
        kkt_residual: out.kkt,
        feasibility_violation: violation,
        regularization: out.eps,
        history: out.history,
        free_problem: problem.is_free(),
    })
}

/// `eps = 1e-10 * scale` for `p < 2`, where `scale` is the typical slope of
/// the start; zero otherwise.
fn regularization(stencil: &Stencil, p: f64, x0: &[f64]) -> f64 {
    if p >= 2.0 {
        return 0.0;
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (_, comps) in stencil.terms() {
        for d in comps {
            for v in [d.head, d.tail] {
                lo = lo.min(x0[v]);
                hi = hi.max(x0[v]);
            }
        }
    }
    let len = stencil.min_length();
    let range = if hi > lo { hi - lo } else { 1.0 };
    let slope = if len.is_finite() {
        range.max(stencil.max_slope(x0) * len) / len
    } else {
        range
    };
    1e-10 * slope.max(f64::MIN_POSITIVE)
}

/// Gradient of the problem energy at `u`, restricted to the domain, and the
/// per-vertex sum of absolute contributions it is made of.
pub fn p_laplacian_residual(problem: &ObstacleProblem, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let stencil = problem.stencil();
    let f = Functional {
        stencil: &stencil,
        p: problem.p,
        eps2: 0.0,
        mass: None,
        linear: None,
    };
    let n = u.len();
    let mut g = vec![0.0; n];
    let mut scale = vec![0.0; n];
    f.gradient(u, &mut g, &mut scale);
    for v in 0..n {
        if !problem.domain.contains(v) {
            g[v] = 0.0;
            scale[v] = 0.0;
        }
    }
    (g, scale)
}

#[derive(Clone, Debug)]
pub struct UniquenessReport {
    pub trials: usize,
    /// Largest pairwise sup-norm distance between solutions.
    pub max_distance: f64,
    pub relative_distance: f64,
    pub passed: bool,
    /// Components of the domain the boundary data cannot reach.
    pub free_components: Vec<Vec<usize>>,
}

/// Solves from `trials` random feasible starts, `f` plus uniform noise of
/// the data's amplitude clamped into the obstacles.
pub fn verify_uniqueness(
    problem: &ObstacleProblem,
    config: &SolverConfig,
    trials: usize,
    seed: u64,
) -> Result<UniquenessReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = problem.f.sup_norm().max(1.0);
    let mut sols: Vec<Vec<f64>> = Vec::with_capacity(trials);
    for _ in 0..trials.max(1) {
        let start: Vec<f64> = problem
            .f
            .iter()
            .map(|&x| x + amp * rng.gen_range(-1.0..1.0))
            .collect();
        sols.push(solve_from(problem, config, Some(&start))?.u.into_inner());
    }
    let mut max_distance: f64 = 0.0;
    for i in 0..sols.len() {
        for j in i + 1..sols.len() {
            let d = problem
                .domain
                .iter()
                .fold(0.0f64, |m, v| m.max((sols[i][v] - sols[j][v]).abs()));
            max_distance = max_distance.max(d);
        }
    }
    let scale = problem
        .domain
        .iter()
        .fold(0.0f64, |m, v| m.max(sols[0][v].abs()))
        .max(problem.f.sup_norm())
        .max(1e-12);
    let relative_distance = max_distance / scale;
    Ok(UniquenessReport {
        trials: sols.len(),
        max_distance,
        relative_distance,
        passed: relative_distance < 1e-6,
        free_components: problem.free_components(),
    })
}

#[derive(Clone, Debug)]
pub struct ComparisonReport {
    /// `max (u_a - u_b)_+` over the domain.
    pub max_violation: f64,
    pub passed: bool,
    pub solution_a: Solution,
    pub solution_b: Solution,
}

/// Checks `u_a <= u_b` on the domain for problems with ordered obstacles and
/// ordered interface data.
pub fn verify_comparison(
    a: &ObstacleProblem,
    b: &ObstacleProblem,
    config: &SolverConfig,
) -> Result<ComparisonReport> {
    if !Arc::ptr_eq(&a.space, &b.space) && a.space.n_vertices() != b.space.n_vertices() {
        return Err(Error::Constraint(
            "problems live on different spaces".into(),
        ));
    }
    if a.domain != b.domain {
        return Err(Error::Constraint("problems have different domains".into()));
    }
    if (a.p - b.p).abs() > 0.0 {
        return Err(Error::Constraint(
            "problems have different exponents".into(),
        ));
    }
    for v in a.domain.iter() {
        if a.psi1[v] > b.psi1[v] || a.psi2[v] > b.psi2[v] {
            return Err(Error::Constraint(format!(
                "obstacles not ordered at vertex {v}"
            )));
        }
    }
    let interface = a.space.outer_boundary(&a.domain);
    let mut touched = interface.clone();
    for (_, comps) in a.stencil().terms() {
        for d in comps {
            for v in [d.head, d.tail] {
                if !a.domain.contains(v) {
                    touched.insert(v);
                }
            }
        }
    }
    for v in touched.iter() {
        if a.f[v] > b.f[v] {
            return Err(Error::Constraint(format!(
                "boundary data not ordered at vertex {v}"
            )));
        }
    }
    let solution_a = solve(a, config)?;
    let solution_b = solve(b, config)?;
    let max_violation = a
        .domain
        .iter()
        .fold(0.0f64, |m, v| m.max(solution_a.u[v] - solution_b.u[v]));
    Ok(ComparisonReport {
        max_violation,
        passed: max_violation <= 1e-8,
        solution_a,
        solution_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::build_grid;

    fn unit_path(n: usize) -> Arc<Space> {
        Arc::new(build_grid(&[(0.0, 1.0)], 1.0 / n as f64, &|_| 1.0).unwrap())
    }

    fn interior(s: &Space) -> VertexSet {
        let n = s.n_vertices();
        VertexSet::from_predicate(n, |v| v > 0 && v + 1 < n)
    }

    #[test]
    fn dirichlet_path_is_linear() {
        let s = unit_path(20);
        let n = s.n_vertices();
        let mut f = vec![0.0; n];
        f[n - 1] = 1.0;
        for p in [1.2, 1.5, 2.0, 3.0, 4.5] {
            let prob = ObstacleProblem::dirichlet(
                s.clone(),
                interior(&s),
                ScalarField::new(f.clone()).unwrap(),
                p,
            )
            .unwrap();
            let sol = solve(&prob, &SolverConfig::default()).unwrap();
            for v in 0..n {
                assert!(
                    (sol.u[v] - v as f64 / 20.0).abs() < 1e-7,
                    "p={p} v={v} u={}",
                    sol.u[v]
                );
            }
            assert!(
                (sol.energy_value - 1.0).abs() < 1e-9,
                "p={p} e={}",
                sol.energy_value
            );
            let h = &sol.history;
            assert!(h
                .windows(2)
                .all(|w| w[1].0 <= w[0].0 * (1.0 + 1e-14) + 1e-300));
        }
    }

    #[test]
    fn pinched_obstacles_fix_the_solution() {
        let s = unit_path(10);
        let n = s.n_vertices();
        let f: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let psi = ObstacleField::new(f.clone()).unwrap();
        let prob = ObstacleProblem::new(
            s.clone(),
            interior(&s),
            ScalarField::new(f.clone()).unwrap(),
            psi.clone(),
            psi,
            1.7,
        )
        .unwrap();
        let sol = solve(&prob, &SolverConfig::default()).unwrap();
        assert_eq!(sol.u.values(), &f[..]);
    }

    #[test]
    fn crossing_obstacles_are_infeasible() {
        let s = unit_path(4);
        let n = s.n_vertices();
        let mut lo = vec![f64::NEG_INFINITY; n];
        lo[2] = f64::INFINITY;
        let prob = ObstacleProblem::new(
            s.clone(),
            interior(&s),
            ScalarField::zeros(n),
            ObstacleField::new(lo).unwrap(),
            ObstacleField::upper_free(n),
            2.0,
        )
        .unwrap();
        assert!(!admissible_exists(&prob).feasible);
        assert!(
            matches!(solve(&prob, &SolverConfig::default()), Err(Error::Infeasible(v)) if v == vec![2])
        );
    }

    #[test]
    fn exponent_at_most_one_rejected() {
        let s = unit_path(4);
        let r = ObstacleProblem::dirichlet(s.clone(), interior(&s), ScalarField::zeros(5), 1.0);
        assert!(matches!(r, Err(Error::InvalidExponent(_))));
    }
}
