use std::sync::Arc;

use finepot::battery::{random_domain, random_graph, random_obstacle_problem};
use finepot::capacity::{sobolev_capacity, variational_capacity};
use finepot::finetop::{wiener_sum, SwissCheeseSpec};
use finepot::line2d::{line_energy, LineMeasureSpace};
use finepot::oned::{dirichlet_atom_invariance, poincare_bound_1d, Measure1D};
use finepot::solver::{solve, ObstacleProblem, SolverConfig};
use finepot::space::{build_grid, ScalarField, VertexSet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn field(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn energy_is_p_homogeneous_and_shift_invariant(seed in any::<u64>(), c in -3.0f64..3.0, p in 1.1f64..4.0) {
        let mut r = rng(seed);
        let space = random_graph(&mut r, 30).unwrap();
        let u = field(&mut r, 30);
        let e = random_domain(&mut r, &space, 0.6);
        let base = space.energy(&u, &e, p).unwrap();
        let scaled: Vec<f64> = u.iter().map(|x| c * x).collect();
        let shifted: Vec<f64> = u.iter().map(|x| x + c).collect();
        let tol = 1e-9 * (1.0 + base);
        prop_assert!((space.energy(&scaled, &e, p).unwrap() - c.abs().powf(p) * base).abs() <= tol * (1.0 + c.abs().powf(p)));
        prop_assert!((space.energy(&shifted, &e, p).unwrap() - base).abs() <= tol);
    }

    #[test]
    fn restriction_drops_energy(seed in any::<u64>(), p in 1.1f64..3.0) {
        let mut r = rng(seed);
        let space = random_graph(&mut r, 40).unwrap();
        let u = field(&mut r, 40);
        let big = random_domain(&mut r, &space, 0.8);
        let small = VertexSet::from_predicate(40, |v| big.contains(v) && r.gen_bool(0.7));
        let full = space.ambient_energy(&u, p).unwrap();
        let on_big = space.energy(&u, &big, p).unwrap();
        let on_small = space.energy(&u, &small, p).unwrap();
        prop_assert!(on_small <= on_big + 1e-12 && on_big <= full + 1e-12);
    }

    #[test]
    fn grid_gradient_on_subset_agrees_inside(seed in any::<u64>()) {
        let mut r = rng(seed);
        let space = build_grid(&[(0.0, 1.0), (0.0, 1.0)], 0.125, &|_| 1.0).unwrap();
        let n = space.n_vertices();
        let u = field(&mut r, n);
        let e = VertexSet::from_predicate(n, |_| r.gen_bool(0.6));
        let g_full = space.gradient(&u, &space.full_set()).unwrap();
        let g_e = space.gradient(&u, &e).unwrap();
        // a vertex whose whole forward stencil lies in E sees the full gradient
        let g = space.grid().unwrap();
        for v in e.iter() {
            let inside = (0..2).all(|axis| g.forward(v, axis).is_none_or(|w| e.contains(w)));
            if inside {
                prop_assert_eq!(g_full.get(v), g_e.get(v));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn solutions_are_feasible_and_keep_boundary_data(seed in any::<u64>(), p_idx in 0usize..3) {
        let p = [1.5, 2.0, 3.0][p_idx];
        let mut r = rng(seed);
        let space = Arc::new(random_graph(&mut r, 60).unwrap());
        let problem = random_obstacle_problem(&mut r, space, p).unwrap();
        let sol = solve(&problem, &SolverConfig::default()).unwrap();
        prop_assert!(sol.feasibility_violation <= 1e-12);
        let u = sol.u.values();
        for v in 0..u.len() {
            if !problem.domain.contains(v) {
                prop_assert_eq!(u[v], problem.f[v]);
            }
        }
    }

    #[test]
    fn dirichlet_solution_obeys_maximum_principle(seed in any::<u64>(), p in 1.3f64..3.5) {
        let mut r = rng(seed);
        let space = Arc::new(random_graph(&mut r, 50).unwrap());
        let e = random_domain(&mut r, &space, 0.7);
        let f = field(&mut r, 50);
        let (lo, hi) = (0..50).filter(|v| !e.contains(*v)).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(f[v]), b.max(f[v])));
        let problem = ObstacleProblem::dirichlet(space, e, ScalarField::new(f).unwrap(), p).unwrap();
        let sol = solve(&problem, &SolverConfig::default()).unwrap();
        for &x in sol.u.values() {
            prop_assert!(x >= lo - 1e-8 && x <= hi + 1e-8);
        }
    }

    #[test]
    fn capacities_are_monotone(seed in any::<u64>(), p in 1.5f64..3.0) {
        let mut r = rng(seed);
        let space = random_graph(&mut r, 40).unwrap();
        let cfg = SolverConfig::default();
        let a1 = VertexSet::from_predicate(40, |_| r.gen_bool(0.1));
        let a2 = a1.union(&VertexSet::from_predicate(40, |_| r.gen_bool(0.1)));
        let c1 = sobolev_capacity(&space, &a1, p, &cfg).unwrap().value;
        let c2 = sobolev_capacity(&space, &a2, p, &cfg).unwrap().value;
        prop_assert!(c1 <= c2 * (1.0 + 1e-8) + 1e-12);
        // the variational capacity of a fixed set drops as the ambient set grows
        let e_small = a1.union(&VertexSet::from_predicate(40, |_| r.gen_bool(0.5)));
        let e_big = e_small.union(&VertexSet::from_predicate(40, |_| r.gen_bool(0.5)));
        let v_small = variational_capacity(&space, &a1, &e_small, p, &cfg).unwrap().value;
        let v_big = variational_capacity(&space, &a1, &e_big, p, &cfg).unwrap().value;
        prop_assert!(v_big <= v_small * (1.0 + 1e-8) + 1e-12);
    }

    #[test]
    fn atoms_leave_dirichlet_solutions_unchanged(seed in any::<u64>(), p in 1.5f64..3.0, count in 1usize..5) {
        let mut r = rng(seed);
        let weights: Vec<f64> = (0..64).map(|_| r.gen_range(0.5..3.0)).collect();
        let atoms: Vec<(f64, f64)> = (0..count).map(|_| (r.gen_range(1..64) as f64 / 64.0, r.gen_range(0.1..5.0))).collect();
        let m = Measure1D::from_cells(0.0, 1.0, 1.0 / 64.0, weights, &atoms).unwrap();
        let inv = dirichlet_atom_invariance(&m, 0.0, 1.0, p, &SolverConfig::default()).unwrap();
        prop_assert!(inv.bitwise_identical);
        prop_assert!(inv.capacity_with >= inv.capacity_without);
    }

    #[test]
    fn poincare_sides_scale_together(seed in any::<u64>(), p in 1.2f64..3.0, c in 0.1f64..10.0) {
        let mut r = rng(seed);
        let m = Measure1D::from_fn(0.0, 1.0, 1.0 / 128.0, &|x| 1.0 + x * x, &[(0.5, 0.3)]).unwrap();
        let u = field(&mut r, m.n_vertices());
        let cu: Vec<f64> = u.iter().map(|x| c * x + 7.0).collect();
        let a = poincare_bound_1d(&u, &m, (0.25, 0.75), p, p).unwrap();
        let b = poincare_bound_1d(&cu, &m, (0.25, 0.75), p, p).unwrap();
        prop_assert!(a.passed && b.passed);
        prop_assert!((b.lhs - c * a.lhs).abs() <= 1e-9 * c * a.lhs);
        prop_assert!((b.rhs - c * a.rhs).abs() <= 1e-9 * c * a.rhs);
    }

    #[test]
    fn line_term_only_adds_energy(seed in any::<u64>(), alpha in 0.0f64..10.0, p in 1.0f64..3.0) {
        let mut r = rng(seed);
        let lms = LineMeasureSpace::constant((0.0, 1.0), (-0.5, 0.5), 0.0625, alpha).unwrap();
        let u = field(&mut r, lms.n_vertices());
        let area = lms.space.ambient_energy(&u, p).unwrap();
        prop_assert!(line_energy(&lms, &u, p).unwrap() >= area * (1.0 - 1e-12));
    }

    #[test]
    fn subcritical_radii_are_dyadic_powers(k in 1u32..12, alpha in 3.5f64..8.0) {
        let spec = SwissCheeseSpec { n: 2, p: 1.5, delta: 0.1, alpha, theta: 0.1, k_max: 12, regime: finepot::finetop::Regime::Subcritical };
        let expected = 0.1 * (-alpha * k as f64).exp2();
        prop_assert!((spec.radius(k) - expected).abs() <= 1e-12 * expected);
        prop_assert!(spec.radius(k + 1) < spec.radius(k));
    }
}

#[test]
fn thinness_sums_shrink_as_the_set_grows() {
    let space = build_grid(&[(-1.0, 1.0), (-1.0, 1.0)], 1.0 / 32.0, &|_| 1.0).unwrap();
    let n = space.n_vertices();
    let x = space.nearest_vertex(&[0.0, 0.0]).unwrap();
    let cfg = SolverConfig::default();
    let sector = |cut: f64| {
        VertexSet::from_predicate(n, |v| {
            let q = space.point(v).unwrap();
            q[1] < cut * q[0].abs() || q.iter().all(|c| c.abs() < 1e-12)
        })
    };
    let mut last = f64::INFINITY;
    for cut in [-0.5, 0.0, 1.0] {
        let s = wiener_sum(&space, x, &sector(cut), 1..=3, 2.0, &cfg)
            .unwrap()
            .partial_sum;
        assert!(s <= last + 1e-9, "sum {s} after {last}");
        last = s;
    }
}
