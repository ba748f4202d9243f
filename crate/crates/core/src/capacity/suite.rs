use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::solver::SolverConfig;
use crate::space::{Edge, EnergyModel, Space, VertexSet};

use super::{sobolev_capacity, variational_capacity};

#[derive(Clone, Debug, Default)]
pub struct PropertySuiteReport {
    pub instances: usize,
    pub monotonicity_failures: usize,
    pub subadditivity_failures: usize,
    pub chain_failures: usize,
    pub zero_equivalence_failures: usize,
    pub empty_set_failures: usize,
    /// Worst `cap(A1 u A2) / (cap(A1) + cap(A2))` seen.
    pub worst_subadditivity_ratio: f64,
    pub passed: bool,
}

/// Random connected graph with a detached cluster of zero-measure vertices
/// (vertices `n..n+3`), the discrete stand-in for a capacity-null set.
fn random_instance(rng: &mut ChaCha8Rng) -> Result<(Space, usize)> {
    let n = rng.gen_range(8..20);
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        edges.push(Edge {
            a: u,
            b: v,
            length: rng.gen_range(0.5..1.5),
        });
    }
    for _ in 0..n / 2 {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b {
            edges.push(Edge {
                a,
                b,
                length: rng.gen_range(0.5..1.5),
            });
        }
    }
    for k in 0..2 {
        edges.push(Edge {
            a: n + k,
            b: n + k + 1,
            length: 1.0,
        });
    }
    let mut measure: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    measure.extend([0.0; 3]);
    Ok((
        Space::from_parts(measure, edges, None, EnergyModel::EdgeBased, None)?,
        n,
    ))
}

fn random_subset(rng: &mut ChaCha8Rng, pool: &[usize], total: usize, k: usize) -> VertexSet {
    let mut p = pool.to_vec();
    p.shuffle(rng);
    let mut s = VertexSet::empty(total);
    for &v in p.iter().take(k) {
        s.insert(v);
    }
    s
}

/// Monotonicity, finite subadditivity, nested-chain limits and the
/// zero-capacity equivalence on random graphs.
pub fn capacity_property_suite(
    seed: u64,
    instances: usize,
    p: f64,
    config: &SolverConfig,
) -> Result<PropertySuiteReport> {
    super::check_p(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = PropertySuiteReport {
        instances,
        ..Default::default()
    };
    let tol = |x: f64| 1e-8 * x.abs() + 1e-12;
    for _ in 0..instances {
        let (space, n) = random_instance(&mut rng)?;
        let total = space.n_vertices();
        // E: most of the connected part plus the null cluster, leaving a nonempty complement
        let main: Vec<usize> = (0..n).collect();
        let mut e = {
            let k_ = n - rng.gen_range(1..=n / 3);
            random_subset(&mut rng, &main, total, k_)
        };
        for v in n..total {
            e.insert(v);
        }
        let inside: Vec<usize> = e.iter().filter(|&v| v < n).collect();
        let cap = |a: &VertexSet| variational_capacity(&space, a, &e, p, config).map(|c| c.value);

        // nested chain A1 c A2 c A3
        let k = inside.len().max(1);
        let a3 = {
            let k_ = rng.gen_range(1..=k);
            random_subset(&mut rng, &inside, total, k_)
        };
        let a3v: Vec<usize> = a3.iter().collect();
        let a2 = random_subset(&mut rng, &a3v, total, (a3v.len() * 2).div_ceil(3));
        let a2v: Vec<usize> = a2.iter().collect();
        let a1 = random_subset(&mut rng, &a2v, total, a2v.len().div_ceil(2));
        let (c1, c2, c3) = (cap(&a1)?, cap(&a2)?, cap(&a3)?);
        if c1 > c2 + tol(c2) || c2 > c3 + tol(c3) {
            rep.monotonicity_failures += 1;
        }
        let chain_limit = cap(&a1.union(&a2).union(&a3))?;
        if (chain_limit - c3).abs() > tol(c3) {
            rep.chain_failures += 1;
        }

        // antitone in E
        let bigger_e = e.union(&VertexSet::from_indices(
            total,
            main.iter().copied().filter(|_| rng.gen_bool(0.5)),
        )?);
        if bigger_e.len() < total {
            let c_big = variational_capacity(&space, &a3, &bigger_e, p, config)?.value;
            if c_big > c3 + tol(c3) {
                rep.monotonicity_failures += 1;
            }
        }

        // subadditivity of two random pieces
        let b1 = {
            let k_ = rng.gen_range(1..=k);
            random_subset(&mut rng, &inside, total, k_)
        };
        let b2 = {
            let k_ = rng.gen_range(1..=k);
            random_subset(&mut rng, &inside, total, k_)
        };
        let (d1, d2, d12) = (cap(&b1)?, cap(&b2)?, cap(&b1.union(&b2))?);
        if d12 > d1 + d2 + tol(d1 + d2) {
            rep.subadditivity_failures += 1;
        }
        rep.worst_subadditivity_ratio = rep.worst_subadditivity_ratio.max(d12 / (d1 + d2));

        // zero capacity: the null cluster versus a set of positive measure
        for a in [VertexSet::from_indices(total, [n, n + 1])?, a1.clone()] {
            let sob = sobolev_capacity(&space, &a, p, config)?.value;
            let var = cap(&a)?;
            if (sob == 0.0) != (var == 0.0) {
                rep.zero_equivalence_failures += 1;
            }
        }
        if cap(&VertexSet::empty(total))? != 0.0
            || sobolev_capacity(&space, &VertexSet::empty(total), p, config)?.value != 0.0
        {
            rep.empty_set_failures += 1;
        }
    }
    rep.passed = rep.monotonicity_failures == 0
        && rep.subadditivity_failures == 0
        && rep.chain_failures == 0
        && rep.zero_equivalence_failures == 0
        && rep.empty_set_failures == 0;
    Ok(rep)
}
