use std::sync::Arc;

use finepot::finetop::solutions_coincide_experiment;
use finepot::solver::{ObstacleProblem, SolverConfig};
use finepot::space::{build_grid, ScalarField, VertexSet};

/// Energy gap between the problem on the open square and the one with
/// `removed` pinned to 1 (data 0 elsewhere); this is a condenser capacity.
fn gap(h: f64, removed: impl Fn(&[f64]) -> bool) -> f64 {
    let space = Arc::new(build_grid(&[(-1.0, 1.0), (-1.0, 1.0)], h, &|_| 1.0).unwrap());
    let n = space.n_vertices();
    let g = space.grid().unwrap();
    let pinned = VertexSet::from_predicate(n, |v| removed(space.point(v).unwrap()));
    let e = VertexSet::from_predicate(n, |v| !g.is_on_boundary(v));
    let e0 = e.difference(&pinned);
    let f = ScalarField::new(
        (0..n)
            .map(|v| if pinned.contains(v) { 1.0 } else { 0.0 })
            .collect(),
    )
    .unwrap();
    let problem = ObstacleProblem::dirichlet(space, e, f, 2.0).unwrap();
    solutions_coincide_experiment(&problem, &e0, &SolverConfig::default())
        .unwrap()
        .energy_difference()
}

#[test]
fn removing_a_point_costs_vanishing_energy_in_the_plane() {
    let gaps: Vec<f64> = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0]
        .iter()
        .map(|&h| gap(h, |x| x.iter().all(|c| c.abs() < 1e-12)))
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < 0.9 * w[0]), "{gaps:?}");
}

#[test]
fn removing_a_segment_does_not() {
    let gaps: Vec<f64> = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0]
        .iter()
        .map(|&h| gap(h, |x| x[0].abs() < 1e-12 && x[1].abs() <= 0.5))
        .collect();
    // a unit segment has positive 2-capacity; the gap stays bounded below
    assert!(gaps.iter().all(|&g| g > 2.0), "{gaps:?}");
}
