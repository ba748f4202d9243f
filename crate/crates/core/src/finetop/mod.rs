//! Wiener-type thinness sums, fine-interior classification, the
//! nontriviality test, Swiss-cheese sets and the solutions-coincide study.

mod swiss;

pub use swiss::{
    nearest_center, swiss_cheese, unit_ball_volume, CapacitySumRow, Regime, SwissCheeseReport,
    SwissCheeseSpec,
};

use std::ops::RangeInclusive;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::capacity::variational_capacity;
use crate::error::{Error, Result};
use crate::solver::{solve, ObstacleProblem, Solution, SolverConfig};
use crate::space::{build_grid, Space, VertexSet};

#[derive(Clone, Debug)]
pub struct WienerTerm {
    pub j: u32,
    pub radius: f64,
    /// `cap(B_r \ E, B_2r)`.
    pub numerator: f64,
    /// `cap(B_r, B_2r)`.
    pub denominator: f64,
    /// `numerator / denominator`, clamped to `[0, 1]`.
    pub ratio: f64,
    /// `ln 2 * ratio^(1/(p-1))`.
    pub term: f64,
}

#[derive(Clone, Debug)]
pub struct WienerSum {
    pub center: Vec<f64>,
    pub p: f64,
    pub terms: Vec<WienerTerm>,
    pub partial_sum: f64,
    /// Bound on the terms beyond the last computed scale, when one is known.
    pub tail_bound: Option<f64>,
}

impl WienerSum {
    fn from_terms(
        center: Vec<f64>,
        p: f64,
        mut terms: Vec<WienerTerm>,
        tail_bound: Option<f64>,
    ) -> Self {
        terms.sort_by_key(|t| t.j);
        let partial_sum = terms.iter().map(|t| t.term).sum();
        Self {
            center,
            p,
            terms,
            partial_sum,
            tail_bound,
        }
    }

    pub fn max_ratio(&self) -> f64 {
        self.terms.iter().map(|t| t.ratio).fold(0.0, f64::max)
    }
}

/// Slack allowed for `numerator > denominator` before monotonicity is
/// reported as violated; both come from iterative solves.
const MONOTONE_SLACK: f64 = 1e-6;

fn wiener_term(
    space: &Space,
    x: &[f64],
    e: &VertexSet,
    j: u32,
    p: f64,
    config: &SolverConfig,
) -> Result<WienerTerm> {
    let r = (-(j as f64)).exp2();
    let b = space.ball(x, r)?;
    let b2 = space.ball(x, 2.0 * r)?;
    let denominator = variational_capacity(space, &b, &b2, p, config)?.value;
    let hole = b.difference(e);
    let numerator = if hole.is_empty() {
        0.0
    } else {
        variational_capacity(space, &hole, &b2, p, config)?.value
    };
    if numerator > denominator * (1.0 + MONOTONE_SLACK) {
        return Err(Error::Constraint(format!(
            "capacity monotonicity violated at scale 2^-{j}: {numerator} > {denominator}"
        )));
    }
    let ratio = if denominator > 0.0 {
        (numerator / denominator).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(WienerTerm {
        j,
        radius: r,
        numerator,
        denominator,
        ratio,
        term: std::f64::consts::LN_2 * ratio.powf(1.0 / (p - 1.0)),
    })
}

/// Whether the closed ball `B(x, radius)` lies inside the space's bounding box.
fn ball_fits(space: &Space, x: &[f64], radius: f64) -> bool {
    let slack = 1e-12 * radius.max(1.0);
    if let Some(g) = space.grid() {
        return (0..g.dim()).all(|a| {
            let lo = g.origin[a];
            let hi = lo + (g.shape[a] - 1) as f64 * g.h;
            x[a] - radius >= lo - slack && x[a] + radius <= hi + slack
        });
    }
    (0..space.dim()).all(|a| {
        let (lo, hi) = (0..space.n_vertices())
            .filter_map(|v| space.point(v).map(|pt| pt[a]))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), c| {
                (l.min(c), h.max(c))
            });
        x[a] - radius >= lo - slack && x[a] + radius <= hi + slack
    })
}

/// Dyadic thinness sum of `X \ E` at vertex `x`: the scale `(2^-(j+1), 2^-j)`
/// contributes `ln 2` times the capacity ratio frozen at `r = 2^-j`.
///
/// When the smallest ball already misses the complement, every finer term
/// vanishes and the tail bound is 0.
pub fn wiener_sum(
    space: &Space,
    x: usize,
    e: &VertexSet,
    j_range: RangeInclusive<u32>,
    p: f64,
    config: &SolverConfig,
) -> Result<WienerSum> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    if e.universe() != space.n_vertices() {
        return Err(Error::LengthMismatch {
            expected: space.n_vertices(),
            got: e.universe(),
        });
    }
    let center = space
        .point(x)
        .ok_or_else(|| Error::InvalidSpace("thinness sums need vertex coordinates".into()))?
        .to_vec();
    let r_max = (1.0 - *j_range.start() as f64).exp2();
    if !ball_fits(space, &center, r_max) {
        return Err(Error::BallEscapes {
            center: x,
            radius: r_max,
        });
    }
    let terms = j_range
        .clone()
        .into_par_iter()
        .map(|j| wiener_term(space, &center, e, j, p, config))
        .collect::<Result<Vec<_>>>()?;
    let smallest = space.ball(&center, (-(*j_range.end() as f64)).exp2())?;
    let tail = smallest.is_subset(e).then_some(0.0);
    Ok(WienerSum::from_terms(center, p, terms, tail))
}

/// Grid of spacing `h` centred on `x` (a vertex) covering `B(x, reach)`.
pub fn local_grid(x: &[f64], reach: f64, h: f64) -> Result<Space> {
    let l = (reach / h).ceil() + 1.0;
    let bounds: Vec<(f64, f64)> = x.iter().map(|&c| (c - l * h, c + l * h)).collect();
    build_grid(&bounds, h, &|_| 1.0)
}

/// Thinness sum of the complement of a set given by a membership oracle,
/// each scale on its own grid with `m` cells per radius.
pub fn wiener_sum_local(
    contains: &(dyn Fn(&[f64]) -> bool + Sync),
    x: &[f64],
    j_range: RangeInclusive<u32>,
    p: f64,
    m: usize,
    config: &SolverConfig,
) -> Result<WienerSum> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    let terms = j_range
        .into_par_iter()
        .map(|j| {
            let r = (-(j as f64)).exp2();
            let space = local_grid(x, 2.0 * r, r / m as f64)?;
            let n = space.n_vertices();
            let e =
                VertexSet::from_predicate(n, |v| contains(space.point(v).expect("grid coords")));
            let c = space
                .grid()
                .expect("grid")
                .nearest(x)
                .expect("center on grid");
            let xc = space.point(c).expect("grid coords").to_vec();
            wiener_term(&space, &xc, &e, j, p, config)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WienerSum::from_terms(x.to_vec(), p, terms, None))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FineLabel {
    FinelyInterior,
    NotFinelyInterior,
    Inconclusive,
}

impl FineLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::FinelyInterior => "finely_interior",
            Self::NotFinelyInterior => "not_finely_interior",
            Self::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FineOptions {
    /// Budget for `partial_sum + tail_bound`.
    pub threshold: f64,
    /// A single capacity ratio at or above this marks the complement as
    /// non-thin at the point.
    pub divergence_trigger: f64,
}

impl Default for FineOptions {
    fn default() -> Self {
        Self {
            threshold: 10.0,
            divergence_trigger: 0.5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FinePoint {
    pub center: Vec<f64>,
    pub vertex: Option<usize>,
    pub label: FineLabel,
    pub evidence: Option<WienerSum>,
}

#[derive(Clone, Debug, Default)]
pub struct FineClassification {
    pub points: Vec<FinePoint>,
}

impl FineClassification {
    pub fn count(&self, label: FineLabel) -> usize {
        self.points.iter().filter(|p| p.label == label).count()
    }
}

fn label(in_e: bool, sum: Option<&WienerSum>, opts: &FineOptions) -> FineLabel {
    let Some(sum) = sum.filter(|_| in_e) else {
        return FineLabel::NotFinelyInterior;
    };
    if sum.max_ratio() >= opts.divergence_trigger {
        return FineLabel::NotFinelyInterior;
    }
    match sum.tail_bound {
        Some(t) if sum.partial_sum + t < opts.threshold => FineLabel::FinelyInterior,
        _ => FineLabel::Inconclusive,
    }
}

/// Classifies sample vertices. A set of measure zero has no finely interior
/// points; otherwise the label follows the thinness sum of the complement.
pub fn fine_interior(
    space: &Space,
    e: &VertexSet,
    samples: &[usize],
    j_range: RangeInclusive<u32>,
    p: f64,
    opts: &FineOptions,
    config: &SolverConfig,
) -> Result<FineClassification> {
    let null = space.measure_of(e) == 0.0;
    let points = samples
        .par_iter()
        .map(|&v| {
            let center = space.point(v).map(<[f64]>::to_vec).unwrap_or_default();
            if null || !e.contains(v) {
                return Ok(FinePoint {
                    center,
                    vertex: Some(v),
                    label: FineLabel::NotFinelyInterior,
                    evidence: None,
                });
            }
            let sum = wiener_sum(space, v, e, j_range.clone(), p, config)?;
            let label = label(true, Some(&sum), opts);
            Ok(FinePoint {
                center,
                vertex: Some(v),
                label,
                evidence: Some(sum),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FineClassification { points })
}

/// Classifies points of a Swiss cheese. The tail beyond the last scale is
/// the analytic majorant `C sum_{j > j_max} 2^(-j beta)` with `C` calibrated
/// as the largest `term_j 2^(j beta)` among the computed scales.
pub fn fine_interior_swiss(
    spec: &SwissCheeseSpec,
    points: &[Vec<f64>],
    j_range: RangeInclusive<u32>,
    m: usize,
    opts: &FineOptions,
    config: &SolverConfig,
) -> Result<FineClassification> {
    spec.validate()?;
    let beta = spec.majorant_exponent();
    let q = (-beta).exp2();
    let j_max = *j_range.end();
    let contains = |x: &[f64]| spec.contains(x);
    let mut out = Vec::with_capacity(points.len());
    for x in points {
        if !spec.contains(x) {
            out.push(FinePoint {
                center: x.clone(),
                vertex: None,
                label: FineLabel::NotFinelyInterior,
                evidence: None,
            });
            continue;
        }
        let mut sum = wiener_sum_local(&contains, x, j_range.clone(), spec.p, m, config)?;
        let c = sum
            .terms
            .iter()
            .map(|t| t.term * (t.j as f64 * beta).exp2())
            .fold(0.0, f64::max);
        sum.tail_bound = Some(c * ((j_max + 1) as f64 * -beta).exp2() / (1.0 - q));
        let label = label(true, Some(&sum), opts);
        out.push(FinePoint {
            center: x.clone(),
            vertex: None,
            label,
            evidence: Some(sum),
        });
    }
    Ok(FineClassification { points: out })
}

#[derive(Clone, Debug)]
pub struct Witness {
    pub vertex: usize,
    pub s: f64,
    pub numerator: f64,
    pub denominator: f64,
}

#[derive(Clone, Debug, Default)]
pub struct NontrivialityReport {
    pub candidates: usize,
    pub witnesses: Vec<Witness>,
}

impl NontrivialityReport {
    pub fn found(&self) -> bool {
        !self.witnesses.is_empty()
    }
}

/// Searches `x in E` and dyadic `s = 2^-j` for
/// `cap(B(x,s) \ E, B(x,2s)) < cap(B(x,s), B(x,2s))` beyond a relative gap
/// of `1e-6`. Up to `max_candidates` vertices of `E` are tried, evenly spread.
pub fn nontriviality_test(
    space: &Space,
    e: &VertexSet,
    j_range: RangeInclusive<u32>,
    p: f64,
    max_candidates: usize,
    config: &SolverConfig,
) -> Result<NontrivialityReport> {
    let members: Vec<usize> = e.iter().collect();
    let stride = members.len().div_ceil(max_candidates.max(1)).max(1);
    let candidates: Vec<usize> = members.iter().copied().step_by(stride).collect();
    nontriviality_test_at(space, e, &candidates, j_range, p, config)
}

/// [`nontriviality_test`] over an explicit candidate list.
pub fn nontriviality_test_at(
    space: &Space,
    e: &VertexSet,
    candidates: &[usize],
    j_range: RangeInclusive<u32>,
    p: f64,
    config: &SolverConfig,
) -> Result<NontrivialityReport> {
    if let Some(&v) = candidates
        .iter()
        .find(|&&v| v >= e.universe() || !e.contains(v))
    {
        return Err(Error::NotSubset(format!(
            "candidate vertex {v} is not in E"
        )));
    }
    let witnesses: Vec<Vec<Witness>> = candidates
        .par_iter()
        .map(|&v| {
            let Some(x) = space.point(v) else {
                return Ok(Vec::new());
            };
            let mut found = Vec::new();
            for j in j_range.clone() {
                let s = (-(j as f64)).exp2();
                if !ball_fits(space, x, 2.0 * s) {
                    continue;
                }
                let t = wiener_term(space, x, e, j, p, config)?;
                if t.denominator > 0.0 && t.numerator < t.denominator * (1.0 - MONOTONE_SLACK) {
                    found.push(Witness {
                        vertex: v,
                        s,
                        numerator: t.numerator,
                        denominator: t.denominator,
                    });
                    break;
                }
            }
            Ok(found)
        })
        .collect::<Result<_>>()?;
    Ok(NontrivialityReport {
        candidates: candidates.len(),
        witnesses: witnesses.into_iter().flatten().collect(),
    })
}

#[derive(Clone, Debug)]
pub struct CoincideReport {
    /// `mu(E \ E0)`.
    pub measure_gap: f64,
    pub sup_difference: f64,
    /// `(sum mu |u_E - u_E0|^p)^(1/p)`.
    pub lp_difference: f64,
    /// Energies over the whole space.
    pub energy_e: f64,
    pub energy_e0: f64,
    pub solution_e: Solution,
    pub solution_e0: Solution,
}

impl CoincideReport {
    pub fn energy_difference(&self) -> f64 {
        (self.energy_e - self.energy_e0).abs()
    }
}

/// Solves the obstacle problem on `E` and on `E0 c E`; on `E \ E0` the
/// second problem keeps the data `f` pinned.
pub fn solutions_coincide_experiment(
    problem: &ObstacleProblem,
    e0: &VertexSet,
    config: &SolverConfig,
) -> Result<CoincideReport> {
    if !e0.is_subset(&problem.domain) {
        return Err(Error::NotSubset("E0 must lie inside E".into()));
    }
    let space: &Arc<Space> = &problem.space;
    let sub = ObstacleProblem::new(
        space.clone(),
        e0.clone(),
        problem.f.clone(),
        problem.psi1.clone(),
        problem.psi2.clone(),
        problem.p,
    )?;
    let (a, b) = rayon::join(|| solve(problem, config), || solve(&sub, config));
    let (a, b) = (a?, b?);
    let p = problem.p;
    let lp: f64 = space
        .measure()
        .iter()
        .zip(a.u.iter().zip(b.u.iter()))
        .map(|(m, (x, y))| m * (x - y).abs().powf(p))
        .sum();
    Ok(CoincideReport {
        measure_gap: space.measure_of(&problem.domain.difference(e0)),
        sup_difference: a.u.sup_distance(&b.u),
        lp_difference: lp.powf(1.0 / p),
        energy_e: space.ambient_energy(&a.u, p)?,
        energy_e0: space.ambient_energy(&b.u, p)?,
        solution_e: a,
        solution_e0: b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(h: f64) -> Space {
        build_grid(&[(-1.0, 1.0), (-1.0, 1.0)], h, &|_| 1.0).unwrap()
    }

    #[test]
    fn whole_space_gives_zero_sum() {
        let s = square(1.0 / 16.0);
        let c = s.nearest_vertex(&[0.0, 0.0]).unwrap();
        let w = wiener_sum(&s, c, &s.full_set(), 2..=4, 2.0, &SolverConfig::default()).unwrap();
        assert_eq!(w.partial_sum, 0.0);
        assert_eq!(w.tail_bound, Some(0.0));
    }

    #[test]
    fn escaping_ball_is_rejected() {
        let s = square(1.0 / 8.0);
        let c = s.nearest_vertex(&[0.5, 0.0]).unwrap();
        let err =
            wiener_sum(&s, c, &s.full_set(), 0..=2, 2.0, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::BallEscapes { .. }));
    }

    #[test]
    fn half_space_ratio_is_scale_invariant_and_large() {
        let w = wiener_sum_local(
            &|x: &[f64]| x[0] > 0.0,
            &[0.0, 0.0],
            1..=3,
            2.0,
            8,
            &SolverConfig::default(),
        )
        .unwrap();
        let r: Vec<f64> = w.terms.iter().map(|t| t.ratio).collect();
        assert!(r.iter().all(|&x| x > 0.5 && x < 1.0), "{r:?}");
        assert!((r[0] - r[2]).abs() < 1e-8);
    }

    #[test]
    fn solid_square_interior_is_finely_interior() {
        let s = square(1.0 / 16.0);
        let n = s.n_vertices();
        let e =
            VertexSet::from_predicate(n, |v| s.point(v).unwrap().iter().all(|c| c.abs() < 0.75));
        let c = s.nearest_vertex(&[0.0, 0.0]).unwrap();
        let outside = s.nearest_vertex(&[0.875, 0.0]).unwrap();
        let f = fine_interior(
            &s,
            &e,
            &[c, outside],
            2..=3,
            2.0,
            &FineOptions::default(),
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(f.points[0].label, FineLabel::FinelyInterior);
        assert_eq!(f.points[1].label, FineLabel::NotFinelyInterior);
    }

    #[test]
    fn null_set_has_no_finely_interior_points() {
        let s = square(1.0 / 8.0);
        let c = s.nearest_vertex(&[0.0, 0.0]).unwrap();
        let mut mu = s.measure().to_vec();
        mu[c] = 0.0;
        let s = s.with_measure(mu).unwrap();
        let e = VertexSet::from_indices(s.n_vertices(), [c]).unwrap();
        let f = fine_interior(
            &s,
            &e,
            &[c],
            2..=2,
            2.0,
            &FineOptions::default(),
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(f.count(FineLabel::FinelyInterior), 0);
    }

    #[test]
    fn nontriviality_witness_and_scatter() {
        let s = square(1.0 / 16.0);
        let n = s.n_vertices();
        let cfg = SolverConfig::default();
        let e = VertexSet::from_predicate(n, |v| s.point(v).unwrap().iter().all(|c| c.abs() < 0.5));
        assert!(nontriviality_test(&s, &e, 2..=3, 2.0, 4, &cfg)
            .unwrap()
            .found());

        let pts = [[0.0, 0.0], [0.5, 0.5], [-0.5, 0.25]];
        let idx: Vec<usize> = pts.iter().map(|x| s.nearest_vertex(x).unwrap()).collect();
        let mut mu = s.measure().to_vec();
        idx.iter().for_each(|&v| mu[v] = 0.0);
        let s = s.with_measure(mu).unwrap();
        let scatter = VertexSet::from_indices(n, idx).unwrap();
        let rep = nontriviality_test(&s, &scatter, 3..=3, 2.0, 3, &cfg).unwrap();
        assert_eq!(rep.candidates, 3);
        assert!(!rep.found(), "{:?}", rep.witnesses);
    }

    #[test]
    fn coinciding_domains_give_identical_solutions() {
        let s = Arc::new(build_grid(&[(0.0, 1.0), (0.0, 1.0)], 1.0 / 8.0, &|_| 1.0).unwrap());
        let n = s.n_vertices();
        let e = VertexSet::from_predicate(n, |v| !s.grid().unwrap().is_on_boundary(v));
        let f = crate::space::ScalarField::new((0..n).map(|v| s.point(v).unwrap()[0]).collect())
            .unwrap();
        let prob = ObstacleProblem::dirichlet(s.clone(), e.clone(), f, 1.7).unwrap();
        let rep = solutions_coincide_experiment(&prob, &e, &SolverConfig::default()).unwrap();
        assert_eq!(rep.sup_difference, 0.0);
        assert_eq!(rep.measure_gap, 0.0);
        assert!(
            solutions_coincide_experiment(&prob, &s.full_set(), &SolverConfig::default()).is_err()
        );
    }
}
