//! Small fixtures whose answers are known in closed form.

use finepot::capacity::condenser_capacity;
use finepot::line2d::{jump_residual, laplace_solve, LineMeasureSpace};
use finepot::oned::{dirichlet_atom_invariance, p_to_one_demo, poincare_bound_1d, Measure1D};
use finepot::solver::SolverConfig;
use finepot::space::{build_grid, VertexSet};

/// Minimizer of `int (1+x)|u'|^p` with `u(0) = 0`, `u(1) = 1` has
/// `u' = c (1+x)^(-a)`, `a = 1/(p-1)`; the energy is `c^(p-1)`.
fn weighted_profile(p: f64) -> (f64, f64) {
    let a = 1.0 / (p - 1.0);
    let integral = |x: f64| {
        if a == 1.0 {
            x.ln_1p()
        } else {
            ((1.0 + x).powf(1.0 - a) - 1.0) / (1.0 - a)
        }
    };
    let c = 1.0 / integral(1.0);
    (c.powf(p - 1.0), integral(0.1) / integral(1.0))
}

#[test]
fn interval_poincare_sides_for_the_identity() {
    let m = Measure1D::from_fn(0.0, 1.0, 1.0 / 64.0, &|_| 1.0, &[]).unwrap();
    let u: Vec<f64> = (0..m.n_vertices()).map(|v| m.x(v)).collect();
    let b = poincare_bound_1d(&u, &m, (0.0, 1.0), 2.0, 2.0).unwrap();
    assert!(
        (b.lhs - (1.0f64 / 12.0).sqrt()).abs() < 1e-12,
        "lhs {}",
        b.lhs
    );
    assert!((b.rhs - 2.0).abs() < 1e-12, "rhs {}", b.rhs);
}

#[test]
fn a_heavy_atom_raises_capacity_but_not_the_solution() {
    let m = Measure1D::from_fn(0.0, 1.0, 1.0 / 64.0, &|_| 1.0, &[(0.5, 10.0)]).unwrap();
    let r = dirichlet_atom_invariance(&m, 0.0, 1.0, 2.0, &SolverConfig::default()).unwrap();
    assert!(r.bitwise_identical);
    // the capacitary potential is 1 at the atom, which alone adds mass 10
    assert!(
        r.capacity_with - r.capacity_without > 9.0,
        "{} vs {}",
        r.capacity_with,
        r.capacity_without
    );
}

#[test]
fn p_one_energies_and_weighted_minimizers() {
    let report = p_to_one_demo(
        (-10f64).exp2(),
        &[1, 4, 256],
        &[2.0, 1.5, 1.1],
        &SolverConfig::default(),
    )
    .unwrap();
    for row in &report.energies {
        let exact = 1.0 + 1.0 / (2.0 * row.j as f64);
        assert!(
            (row.energy - exact).abs() < 1e-12,
            "j = {}: {}",
            row.j,
            row.energy
        );
    }
    assert!((report.solves[0].energy - 1.0 / 2f64.ln()).abs() < 1e-5);
    for s in &report.solves {
        let (energy, left) = weighted_profile(s.p);
        assert!(
            (s.energy - energy).abs() <= 1e-3 * energy,
            "p = {}: {} vs {energy}",
            s.p,
            s.energy
        );
        assert!(
            (s.left_fraction - left).abs() <= 0.01,
            "p = {}: {} vs {left}",
            s.p,
            s.left_fraction
        );
    }
}

#[test]
fn harmonic_linear_data_has_no_jump() {
    let lms = LineMeasureSpace::constant((0.0, 1.0), (-0.5, 0.5), 1.0 / 16.0, 1.0).unwrap();
    let g = lms.space.grid().unwrap();
    let u: Vec<f64> = (0..lms.n_vertices()).map(|v| g.point(v)[0]).collect();
    assert!(jump_residual(&lms, &u).unwrap().max_norm <= 1e-12);
}

#[test]
fn discrete_laplace_reproduces_quadratics() {
    // the five-point stencil is exact on x^2 - y^2
    let space = build_grid(&[(0.0, 1.0), (0.0, 1.0)], 0.125, &|_| 1.0).unwrap();
    let g = space.grid().unwrap();
    let f: Vec<f64> = (0..space.n_vertices())
        .map(|v| {
            let q = g.point(v);
            q[0] * q[0] - q[1] * q[1]
        })
        .collect();
    let u = laplace_solve(&space, &f).unwrap();
    let err = u
        .iter()
        .zip(&f)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-9, "error {err}");
}

#[test]
fn one_dimensional_condenser() {
    // u(x) = x on [0, 1] with unit density: energy 1 for every p
    let space = build_grid(&[(0.0, 1.0)], 1.0 / 32.0, &|_| 1.0).unwrap();
    let n = space.n_vertices();
    let a0 = VertexSet::from_indices(n, [0]).unwrap();
    let a1 = VertexSet::from_indices(n, [n - 1]).unwrap();
    for p in [1.5, 2.0, 3.0] {
        let c = condenser_capacity(
            &space,
            &a0,
            &a1,
            &space.full_set(),
            p,
            &SolverConfig::default(),
        )
        .unwrap();
        assert!((c.value - 1.0).abs() < 1e-8, "p = {p}: {}", c.value);
    }
}
