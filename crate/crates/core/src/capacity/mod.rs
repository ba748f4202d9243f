//! Sobolev, variational and condenser capacities, the Choquet integral of
//! obstacle gaps, and capacitary inequalities.

mod choquet;
mod suite;

pub use choquet::{
    adams_check, adams_integral, lemma_constant, mazya_check, mazya_constant, AdamsReport,
    ChoquetIntegral, LemmaCheck, MazyaReport,
};
pub use suite::{capacity_property_suite, PropertySuiteReport};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::solver::{minimize_box, SolverConfig};
use crate::space::{ScalarField, Space, VertexSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityKind {
    Sobolev,
    Variational,
    Condenser,
}

impl CapacityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sobolev => "sobolev",
            Self::Variational => "variational",
            Self::Condenser => "condenser",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CapacityResult {
    pub value: f64,
    /// Minimizer with values in `[0, 1]`.
    pub minimizer: ScalarField,
    pub kind: CapacityKind,
    /// Grid spacing, when the space is a grid.
    pub h: Option<f64>,
    pub n_vertices: usize,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub regularization: f64,
}

fn check_universe(space: &Space, sets: &[&VertexSet]) -> Result<()> {
    for s in sets {
        if s.universe() != space.n_vertices() {
            return Err(Error::LengthMismatch {
                expected: space.n_vertices(),
                got: s.universe(),
            });
        }
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    Ok(())
}

fn result(
    space: &Space,
    kind: CapacityKind,
    value: f64,
    u: Vec<f64>,
    it: usize,
    kkt: f64,
    eps: f64,
) -> Result<CapacityResult> {
    Ok(CapacityResult {
        value,
        minimizer: ScalarField::new(u)?,
        kind,
        h: space.grid().map(|g| g.h),
        n_vertices: space.n_vertices(),
        iterations: it,
        kkt_residual: kkt,
        regularization: eps,
    })
}

/// `C_p(A) = min sum mu |u|^p + energy(u)` over `u = 1` on `A`.
pub fn sobolev_capacity(
    space: &Space,
    a: &VertexSet,
    p: f64,
    config: &SolverConfig,
) -> Result<CapacityResult> {
    check_p(p)?;
    check_universe(space, &[a])?;
    let n = space.n_vertices();
    let x0: Vec<f64> = (0..n)
        .map(|v| if a.contains(v) { 1.0 } else { 0.0 })
        .collect();
    if a.is_empty() {
        return result(space, CapacityKind::Sobolev, 0.0, x0, 0, 0.0, 0.0);
    }
    let stencil = space.stencil(None);
    let free: Vec<bool> = (0..n).map(|v| !a.contains(v)).collect();
    let out = minimize_box(
        &stencil,
        p,
        Some((space.measure(), 1.0)),
        x0,
        vec![0.0; n],
        vec![1.0; n],
        free,
        config,
    )?;
    let mass: f64 = space
        .measure()
        .iter()
        .zip(&out.x)
        .map(|(m, u)| m * u.powf(p))
        .sum();
    let value = mass + stencil.energy(&out.x, p);
    result(
        space,
        CapacityKind::Sobolev,
        value,
        out.x,
        out.iterations,
        out.kkt,
        out.eps,
    )
}

/// `cap_p(A, E) = min energy(u)` over `u = 0` off `E`, `u >= 1` on `A`.
pub fn variational_capacity(
    space: &Space,
    a: &VertexSet,
    e: &VertexSet,
    p: f64,
    config: &SolverConfig,
) -> Result<CapacityResult> {
    check_p(p)?;
    check_universe(space, &[a, e])?;
    if !a.is_subset(e) {
        return Err(Error::NotSubset("capacity set A must lie inside E".into()));
    }
    let n = space.n_vertices();
    let x0: Vec<f64> = (0..n)
        .map(|v| if a.contains(v) { 1.0 } else { 0.0 })
        .collect();
    if a.is_empty() {
        return result(space, CapacityKind::Variational, 0.0, x0, 0, 0.0, 0.0);
    }
    let stencil = space.problem_stencil(e);
    let free: Vec<bool> = (0..n).map(|v| e.contains(v) && !a.contains(v)).collect();
    let out = minimize_box(
        &stencil,
        p,
        None,
        x0,
        vec![0.0; n],
        vec![1.0; n],
        free,
        config,
    )?;
    let value = stencil.energy(&out.x, p);
    result(
        space,
        CapacityKind::Variational,
        value,
        out.x,
        out.iterations,
        out.kkt,
        out.eps,
    )
}

/// Capacity of the condenser `(A0, A1, Omega)`: energy within `Omega` over
/// `0 <= u <= 1`, `u = 0` on `A0`, `u = 1` on `A1`.
///
/// The problem is solved in a canonical orientation (the plate holding the
/// smaller vertex index is grounded), so swapping the plates returns the
/// same value bit for bit and the minimizer `1 - u`.
pub fn condenser_capacity(
    space: &Space,
    a0: &VertexSet,
    a1: &VertexSet,
    omega: &VertexSet,
    p: f64,
    config: &SolverConfig,
) -> Result<CapacityResult> {
    check_p(p)?;
    check_universe(space, &[a0, a1, omega])?;
    if !a0.is_disjoint(a1) {
        let v = a0.intersection(a1).iter().next().expect("nonempty");
        return Err(Error::Overlap(format!(
            "A0 and A1 (first shared vertex {v})"
        )));
    }
    if !a0.is_subset(omega) || !a1.is_subset(omega) {
        return Err(Error::NotSubset(
            "condenser plates must lie inside Omega".into(),
        ));
    }
    let n = space.n_vertices();
    let swap = match (a0.iter().next(), a1.iter().next()) {
        (Some(x), Some(y)) => y < x,
        (None, Some(_)) => true,
        _ => false,
    };
    let (ground, lifted) = if swap { (a1, a0) } else { (a0, a1) };
    let x0: Vec<f64> = (0..n)
        .map(|v| if lifted.contains(v) { 1.0 } else { 0.0 })
        .collect();
    let (value, mut u, it, kkt, eps) = if lifted.is_empty() {
        (0.0, x0, 0, 0.0, 0.0)
    } else {
        let stencil = space.stencil(Some(omega));
        let free: Vec<bool> = (0..n)
            .map(|v| omega.contains(v) && !ground.contains(v) && !lifted.contains(v))
            .collect();
        let out = minimize_box(
            &stencil,
            p,
            None,
            x0,
            vec![0.0; n],
            vec![1.0; n],
            free,
            config,
        )?;
        (
            stencil.energy(&out.x, p),
            out.x,
            out.iterations,
            out.kkt,
            out.eps,
        )
    };
    if swap {
        u.iter_mut().for_each(|x| *x = 1.0 - *x);
    }
    result(space, CapacityKind::Condenser, value, u, it, kkt, eps)
}

/// Richardson extrapolation from spacings `h` and `h/2` with convergence
/// order `order`; returns the extrapolated value and the error estimate of
/// the fine value.
pub fn richardson(coarse: f64, fine: f64, order: f64) -> (f64, f64) {
    let err = (fine - coarse) / (2f64.powf(order) - 1.0);
    (fine + err, err.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::build_grid;

    #[test]
    fn sobolev_capacity_of_whole_space_is_its_measure() {
        let s = build_grid(&[(0.0, 1.0)], 0.1, &|x| 1.0 + x[0]).unwrap();
        let c = sobolev_capacity(&s, &s.full_set(), 1.7, &SolverConfig::default()).unwrap();
        let total: f64 = s.measure().iter().sum();
        assert!((c.value - total).abs() < 1e-12);
    }

    #[test]
    fn isolated_vertex_capacity_is_its_mass() {
        let s = Space::build_graph(&[(0, 1)], &[1.0], vec![1.0, 1.0, 0.4]).unwrap();
        let a = VertexSet::from_indices(3, [2]).unwrap();
        let c = sobolev_capacity(&s, &a, 2.5, &SolverConfig::default()).unwrap();
        assert!((c.value - 0.4).abs() < 1e-14);
    }

    #[test]
    fn tent_capacity_on_an_interval() {
        // A = {1/2}, E = (0, 1): two slopes 1/L with L = 1/2
        let s = build_grid(&[(0.0, 1.0)], 1.0 / 64.0, &|_| 1.0).unwrap();
        let n = s.n_vertices();
        let e = VertexSet::from_predicate(n, |v| v > 0 && v + 1 < n);
        let a = VertexSet::from_indices(n, [32]).unwrap();
        let c = variational_capacity(&s, &a, &e, 2.0, &SolverConfig::default()).unwrap();
        assert!((c.value - 4.0).abs() < 1e-9, "{}", c.value);
    }

    #[test]
    fn condenser_is_symmetric_and_rejects_overlap() {
        let s = build_grid(&[(0.0, 1.0), (0.0, 1.0)], 0.125, &|_| 1.0).unwrap();
        let n = s.n_vertices();
        let g = s.grid().unwrap().clone();
        let a0 = VertexSet::from_predicate(n, |v| g.coord(v, 0) == 0);
        let a1 = VertexSet::from_predicate(n, |v| g.coord(v, 0) == 8);
        let full = s.full_set();
        let c = SolverConfig::default();
        let x = condenser_capacity(&s, &a0, &a1, &full, 1.6, &c).unwrap();
        let y = condenser_capacity(&s, &a1, &a0, &full, 1.6, &c).unwrap();
        assert_eq!(x.value, y.value);
        assert!((x.value - 1.0).abs() < 1e-8, "{}", x.value);
        assert!(condenser_capacity(&s, &a0, &a0, &full, 2.0, &c).is_err());
    }

    #[test]
    fn richardson_removes_first_order_error() {
        let (x, err) = richardson(1.0 + 0.2, 1.0 + 0.1, 1.0);
        assert!((x - 1.0).abs() < 1e-15);
        assert!((err - 0.1).abs() < 1e-15);
    }
}
