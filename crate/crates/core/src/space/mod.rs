//! Discrete metric measure spaces.
//!
//! A [`Space`] is a weighted graph with per-vertex mass and per-edge length,
//! optionally embedded in `R^n`. Two energy models are supported:
//!
//! * [`EnergyModel::EdgeBased`]: `sum_e m_e (|u(x)-u(y)| / l_e)^p` with the
//!   edge mass `m_e = mu(x)/deg(x) + mu(y)/deg(y)`, degrees taken in the full
//!   space so that restricting to a subset only ever drops terms.
//! * [`EnergyModel::GridForwardDiff`]: `sum_x mu(x) |D^+ u(x)|^p` where
//!   `D^+ u` is the vector of forward differences, the discrete `|grad u|`.
//!
//! Restricting to a vertex set `E` keeps the difference components whose
//! endpoints both lie in `E`. That is the discrete counterpart of the
//! gradient taken with respect to `E` rather than the whole space.

mod curve;
mod field;
mod grid;
mod poincare;
mod stencil;

pub use curve::{build_curve_graph, BallCheck, CurveGraph};
pub use field::{GradientField, GradientMode, ObstacleField, ScalarField, VertexSet};
pub use grid::{build_grid, Grid};
pub use poincare::{poincare_constant, poincare_constant_with, PoincareEstimate};
pub use stencil::{pow_half, Diff, Stencil};

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyModel {
    EdgeBased,
    GridForwardDiff,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

#[derive(Clone, Debug)]
pub struct Space {
    dim: usize,
    coords: Option<Vec<f64>>,
    edges: Vec<Edge>,
    measure: Vec<f64>,
    model: EnergyModel,
    grid: Option<Grid>,
    adj_ptr: Vec<usize>,
    adj: Vec<(usize, usize)>,
}

impl Space {
    /// Validates and assembles a space. `coords` is flat, `dim` values per vertex.
    pub fn from_parts(
        measure: Vec<f64>,
        edges: Vec<Edge>,
        coords: Option<(usize, Vec<f64>)>,
        model: EnergyModel,
        grid: Option<Grid>,
    ) -> Result<Self> {
        let n = measure.len();
        if n == 0 {
            return Err(Error::InvalidSpace("no vertices".into()));
        }
        if let Some(i) = measure.iter().position(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidSpace(format!(
                "measure at vertex {i} is {}",
                measure[i]
            )));
        }
        for (k, e) in edges.iter().enumerate() {
            if e.a >= n || e.b >= n {
                return Err(Error::InvalidSpace(format!(
                    "edge {k} references a missing vertex"
                )));
            }
            if e.a == e.b {
                return Err(Error::InvalidSpace(format!("edge {k} is a loop")));
            }
            if !(e.length > 0.0 && e.length.is_finite()) {
                return Err(Error::InvalidSpace(format!(
                    "edge {k} has nonpositive length {}",
                    e.length
                )));
            }
        }
        let (dim, coords) = match coords {
            Some((d, c)) => {
                if c.len() != d * n {
                    return Err(Error::LengthMismatch {
                        expected: d * n,
                        got: c.len(),
                    });
                }
                (d, Some(c))
            }
            None => (0, None),
        };
        if model == EnergyModel::GridForwardDiff && grid.is_none() {
            return Err(Error::InvalidSpace(
                "forward-difference energy needs a regular grid".into(),
            ));
        }

        let mut deg = vec![0usize; n];
        for e in &edges {
            deg[e.a] += 1;
            deg[e.b] += 1;
        }
        let mut adj_ptr = vec![0usize; n + 1];
        for i in 0..n {
            adj_ptr[i + 1] = adj_ptr[i] + deg[i];
        }
        let mut fill = adj_ptr.clone();
        let mut adj = vec![(0usize, 0usize); adj_ptr[n]];
        for (k, e) in edges.iter().enumerate() {
            adj[fill[e.a]] = (e.b, k);
            fill[e.a] += 1;
            adj[fill[e.b]] = (e.a, k);
            fill[e.b] += 1;
        }

        Ok(Self {
            dim,
            coords,
            edges,
            measure,
            model,
            grid,
            adj_ptr,
            adj,
        })
    }

    /// General weighted graph with per-edge lengths and per-vertex measures.
    pub fn build_graph(
        edge_list: &[(usize, usize)],
        lengths: &[f64],
        measures: Vec<f64>,
    ) -> Result<Self> {
        if edge_list.len() != lengths.len() {
            return Err(Error::LengthMismatch {
                expected: edge_list.len(),
                got: lengths.len(),
            });
        }
        let edges = edge_list
            .iter()
            .zip(lengths)
            .map(|(&(a, b), &length)| Edge { a, b, length })
            .collect();
        Self::from_parts(measures, edges, None, EnergyModel::EdgeBased, None)
    }

    pub fn with_model(mut self, model: EnergyModel) -> Result<Self> {
        if model == EnergyModel::GridForwardDiff && self.grid.is_none() {
            return Err(Error::InvalidSpace(
                "forward-difference energy needs a regular grid".into(),
            ));
        }
        self.model = model;
        Ok(self)
    }

    /// Same graph with measure multiplied by `c > 0`.
    pub fn scaled_measure(&self, c: f64) -> Self {
        let mut s = self.clone();
        s.measure.iter_mut().for_each(|m| *m *= c);
        s
    }

    pub fn with_measure(&self, measure: Vec<f64>) -> Result<Self> {
        Self::from_parts(
            measure,
            self.edges.clone(),
            self.coords.clone().map(|c| (self.dim, c)),
            self.model,
            self.grid.clone(),
        )
    }

    pub fn n_vertices(&self) -> usize {
        self.measure.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn model(&self) -> EnergyModel {
        self.model
    }

    pub fn grid(&self) -> Option<&Grid> {
        self.grid.as_ref()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn measure_of(&self, set: &VertexSet) -> f64 {
        set.iter().map(|v| self.measure[v]).sum()
    }

    pub fn point(&self, v: usize) -> Option<&[f64]> {
        self.coords
            .as_ref()
            .map(|c| &c[v * self.dim..(v + 1) * self.dim])
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj_ptr[v + 1] - self.adj_ptr[v]
    }

    /// `(neighbor, edge id)` pairs around `v`.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[self.adj_ptr[v]..self.adj_ptr[v + 1]]
    }

    pub fn full_set(&self) -> VertexSet {
        VertexSet::full(self.n_vertices())
    }

    pub fn empty_set(&self) -> VertexSet {
        VertexSet::empty(self.n_vertices())
    }

    /// Edge mass `mu(a)/deg(a) + mu(b)/deg(b)`.
    pub fn edge_mass(&self, e: usize) -> f64 {
        let Edge { a, b, .. } = self.edges[e];
        self.measure[a] / self.degree(a) as f64 + self.measure[b] / self.degree(b) as f64
    }

    /// Energy stencil over all of the space (`None`) or restricted to a set.
    pub fn stencil(&self, domain: Option<&VertexSet>) -> Stencil {
        let inside = |v: usize| domain.is_none_or(|d| d.contains(v));
        let mut st = Stencil::new();
        match self.model {
            EnergyModel::EdgeBased => {
                for (k, e) in self.edges.iter().enumerate() {
                    if inside(e.a) && inside(e.b) {
                        st.push(
                            self.edge_mass(k),
                            &[Diff {
                                tail: e.a,
                                head: e.b,
                                inv_len: 1.0 / e.length,
                            }],
                        );
                    }
                }
            }
            EnergyModel::GridForwardDiff => {
                let grid = self.grid.as_ref().expect("checked at construction");
                let inv_h = 1.0 / grid.h;
                let mut comps = Vec::with_capacity(grid.dim());
                for v in 0..self.n_vertices() {
                    if !inside(v) {
                        continue;
                    }
                    comps.clear();
                    for axis in 0..grid.dim() {
                        if let Some(w) = grid.forward(v, axis) {
                            if inside(w) {
                                comps.push(Diff {
                                    tail: v,
                                    head: w,
                                    inv_len: inv_h,
                                });
                            }
                        }
                    }
                    st.push(self.measure[v], &comps);
                }
            }
        }
        st
    }

    /// Ambient stencil terms that involve at least one vertex of `set`.
    /// These are the terms the obstacle problem on `set` can change.
    pub fn problem_stencil(&self, set: &VertexSet) -> Stencil {
        self.stencil(None).filter(|_, comps| {
            comps
                .iter()
                .any(|d| set.contains(d.head) || set.contains(d.tail))
        })
    }

    fn check_field(&self, u: &[f64], set: &VertexSet) -> Result<()> {
        if u.len() != self.n_vertices() {
            return Err(Error::LengthMismatch {
                expected: self.n_vertices(),
                got: u.len(),
            });
        }
        if set.universe() != self.n_vertices() {
            return Err(Error::LengthMismatch {
                expected: self.n_vertices(),
                got: set.universe(),
            });
        }
        if set.is_empty() {
            return Err(Error::EmptySet);
        }
        if let Some(v) = set.iter().find(|&v| !u[v].is_finite()) {
            return Err(Error::NonFinite(v));
        }
        Ok(())
    }

    /// Gradient of `u` with respect to `set`. Edge-based spaces report one
    /// entry per edge inside `set`; grid spaces one entry per vertex of `set`.
    pub fn gradient(&self, u: &[f64], set: &VertexSet) -> Result<GradientField> {
        self.check_field(u, set)?;
        Ok(match self.model {
            EnergyModel::EdgeBased => self.edge_gradient_unchecked(u, set),
            EnergyModel::GridForwardDiff => {
                let grid = self.grid.as_ref().expect("grid model");
                let inv_h = 1.0 / grid.h;
                let entries = set
                    .iter()
                    .map(|v| {
                        let s: f64 = (0..grid.dim())
                            .filter_map(|axis| grid.forward(v, axis))
                            .filter(|&w| set.contains(w))
                            .map(|w| ((u[w] - u[v]) * inv_h).powi(2))
                            .sum();
                        (v, s.sqrt())
                    })
                    .collect();
                GradientField {
                    mode: GradientMode::PerVertex,
                    entries,
                }
            }
        })
    }

    /// Per-edge slopes `|u(a)-u(b)|/l` on edges with both ends in `set`,
    /// regardless of the energy model.
    pub fn edge_gradient(&self, u: &[f64], set: &VertexSet) -> Result<GradientField> {
        self.check_field(u, set)?;
        Ok(self.edge_gradient_unchecked(u, set))
    }

    fn edge_gradient_unchecked(&self, u: &[f64], set: &VertexSet) -> GradientField {
        let entries = self
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| set.contains(e.a) && set.contains(e.b))
            .map(|(k, e)| (k, (u[e.a] - u[e.b]).abs() / e.length))
            .collect();
        GradientField {
            mode: GradientMode::PerEdge,
            entries,
        }
    }

    /// p-energy of `u` with respect to `set`. `p = 1` is accepted for
    /// diagnostics; only the minimization routines insist on `p > 1`.
    pub fn energy(&self, u: &[f64], set: &VertexSet, p: f64) -> Result<f64> {
        check_energy_exponent(p)?;
        self.check_field(u, set)?;
        Ok(self.stencil(Some(set)).energy(u, p))
    }

    /// p-energy over the whole space.
    pub fn ambient_energy(&self, u: &[f64], p: f64) -> Result<f64> {
        check_energy_exponent(p)?;
        self.check_field(u, &self.full_set())?;
        Ok(self.stencil(None).energy(u, p))
    }

    /// Energy of the terms that touch `set`, including the ones reaching
    /// across its boundary to pinned values.
    pub fn problem_energy(&self, u: &[f64], set: &VertexSet, p: f64) -> Result<f64> {
        check_energy_exponent(p)?;
        if u.len() != self.n_vertices() {
            return Err(Error::LengthMismatch {
                expected: self.n_vertices(),
                got: u.len(),
            });
        }
        Ok(self.problem_stencil(set).energy(u, p))
    }

    /// Component labels of the subgraph induced by `set` (`usize::MAX` outside).
    pub fn components(&self, set: &VertexSet) -> (usize, Vec<usize>) {
        let n = self.n_vertices();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for s in set.iter() {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = count;
            queue.push_back(s);
            while let Some(v) = queue.pop_front() {
                for &(w, _) in self.neighbors(v) {
                    if set.contains(w) && label[w] == usize::MAX {
                        label[w] = count;
                        queue.push_back(w);
                    }
                }
            }
            count += 1;
        }
        (count, label)
    }

    /// Vertices outside `set` adjacent to it.
    pub fn outer_boundary(&self, set: &VertexSet) -> VertexSet {
        let mut out = self.empty_set();
        for v in set.iter() {
            for &(w, _) in self.neighbors(v) {
                if !set.contains(w) {
                    out.insert(w);
                }
            }
        }
        out
    }

    /// Vertices of `set` with a neighbour outside it.
    pub fn inner_boundary(&self, set: &VertexSet) -> VertexSet {
        VertexSet::from_predicate(self.n_vertices(), |v| {
            set.contains(v) && self.neighbors(v).iter().any(|&(w, _)| !set.contains(w))
        })
    }

    /// Components of `set`, linked through positive-weight energy terms,
    /// that no such term ties to the complement. Functions vanishing off
    /// `set` can take any constant value there without changing the energy.
    pub fn isolated_components(&self, set: &VertexSet) -> Vec<Vec<usize>> {
        let n = self.n_vertices();
        let mut links: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (w, comps) in self.stencil(None).terms() {
            if w > 0.0 {
                for d in comps {
                    links[d.tail].push(d.head);
                    links[d.head].push(d.tail);
                }
            }
        }
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for s in set.iter() {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            queue.push_back(s);
            let mut comp = Vec::new();
            let mut anchored = false;
            while let Some(v) = queue.pop_front() {
                comp.push(v);
                for &w in &links[v] {
                    if !set.contains(w) {
                        anchored = true;
                    } else if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            if !anchored {
                comp.sort_unstable();
                out.push(comp);
            }
        }
        out
    }

    /// Vertices within Euclidean distance `< radius` of `center` (open ball).
    pub fn ball(&self, center: &[f64], radius: f64) -> Result<VertexSet> {
        if self.coords.is_none() {
            return Err(Error::InvalidSpace(
                "metric balls need vertex coordinates".into(),
            ));
        }
        let r2 = radius * radius;
        Ok(VertexSet::from_predicate(self.n_vertices(), |v| {
            let x = self.point(v).expect("coords present");
            x.iter()
                .zip(center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                < r2
        }))
    }

    /// Closest vertex to a point.
    pub fn nearest_vertex(&self, point: &[f64]) -> Option<usize> {
        if let Some(g) = &self.grid {
            return g.nearest(point);
        }
        let coords = self.coords.as_ref()?;
        (0..self.n_vertices()).min_by(|&a, &b| {
            let da: f64 = coords[a * self.dim..(a + 1) * self.dim]
                .iter()
                .zip(point)
                .map(|(x, y)| (x - y).powi(2))
                .sum();
            let db: f64 = coords[b * self.dim..(b + 1) * self.dim]
                .iter()
                .zip(point)
                .map(|(x, y)| (x - y).powi(2))
                .sum();
            da.total_cmp(&db)
        })
    }
}

fn check_energy_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n_cells: usize) -> Space {
        build_grid(&[(0.0, 1.0)], 1.0 / n_cells as f64, &|_| 1.0).unwrap()
    }

    #[test]
    fn unit_slope_on_three_vertex_path() {
        let s = Space::build_graph(&[(0, 1), (1, 2)], &[1.0, 1.0], vec![1.0; 3]).unwrap();
        let g = s.gradient(&[0.0, 1.0, 2.0], &s.full_set()).unwrap();
        assert_eq!(g.entries, vec![(0, 1.0), (1, 1.0)]);
    }

    #[test]
    fn removing_the_middle_vertex_kills_the_gradient() {
        let s = Space::build_graph(&[(0, 1), (1, 2)], &[1.0, 1.0], vec![1.0; 3]).unwrap();
        let e = VertexSet::from_indices(3, [0, 2]).unwrap();
        let g = s.gradient(&[0.0, 1.0, 2.0], &e).unwrap();
        assert!(g.is_empty());
        assert_eq!(s.energy(&[0.0, 1.0, 2.0], &e, 2.0).unwrap(), 0.0);
        assert!(s.energy(&[0.0, 1.0, 2.0], &s.full_set(), 2.0).unwrap() > 0.0);
    }

    #[test]
    fn constants_have_zero_gradient() {
        let s = path(8);
        let u = vec![3.5; s.n_vertices()];
        assert!(s.gradient(&u, &s.full_set()).unwrap().is_zero());
        assert_eq!(s.energy(&u, &s.full_set(), 1.7).unwrap(), 0.0);
    }

    #[test]
    fn linear_function_has_unit_energy_for_every_n_and_p() {
        for n in [1, 4, 37, 256] {
            let s = path(n);
            let u: Vec<f64> = (0..s.n_vertices()).map(|i| i as f64 / n as f64).collect();
            for p in [1.0, 1.5, 2.0, 3.3] {
                let e = s.energy(&u, &s.full_set(), p).unwrap();
                assert!((e - 1.0).abs() < 1e-12, "n={n} p={p} e={e}");
            }
        }
    }

    #[test]
    fn edge_based_path_with_trapezoid_measure() {
        let n = 10;
        let h = 1.0 / n as f64;
        let edges: Vec<_> = (0..n).map(|i| (i, i + 1)).collect();
        let mut mu = vec![h; n + 1];
        mu[0] = h / 2.0;
        mu[n] = h / 2.0;
        let s = Space::build_graph(&edges, &vec![h; n], mu).unwrap();
        let u: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        let e = s.energy(&u, &s.full_set(), 2.5).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn p_below_one_rejected() {
        let s = path(4);
        let u = vec![0.0; 5];
        assert!(matches!(
            s.energy(&u, &s.full_set(), 0.5),
            Err(Error::InvalidExponent(_))
        ));
        assert!(s.energy(&u, &s.full_set(), 1.0).is_ok());
    }

    #[test]
    fn empty_domain_and_bad_lengths_rejected() {
        let s = path(4);
        assert!(matches!(
            s.gradient(&[0.0; 5], &s.empty_set()),
            Err(Error::EmptySet)
        ));
        assert!(s.gradient(&[0.0; 4], &s.full_set()).is_err());
        assert!(Space::build_graph(&[(0, 1)], &[0.0], vec![1.0, 1.0]).is_err());
        assert!(Space::build_graph(&[(0, 3)], &[1.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn isolated_components_detected() {
        // 0-1-2   3-4, domain {1,3,4}: {1} touches the complement, {3,4} does not
        let s = Space::build_graph(&[(0, 1), (1, 2), (3, 4)], &[1.0; 3], vec![1.0; 5]).unwrap();
        let e = VertexSet::from_indices(5, [1, 3, 4]).unwrap();
        assert_eq!(s.isolated_components(&e), vec![vec![3, 4]]);
    }
}
