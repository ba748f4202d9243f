use crate::error::{Error, Result};

use super::{Edge, EnergyModel, Space};

/// Regular axis-aligned grid; vertex index is row-major with axis 0 fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub origin: Vec<f64>,
    pub h: f64,
    /// Number of vertices along each axis.
    pub shape: Vec<usize>,
    strides: Vec<usize>,
}

impl Grid {
    pub fn new(origin: Vec<f64>, h: f64, shape: Vec<usize>) -> Self {
        let mut strides = Vec::with_capacity(shape.len());
        let mut s = 1;
        for &n in &shape {
            strides.push(s);
            s *= n;
        }
        Self {
            origin,
            h,
            shape,
            strides,
        }
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.shape.iter().product()
    }

    #[inline]
    pub fn coord(&self, v: usize, axis: usize) -> usize {
        (v / self.strides[axis]) % self.shape[axis]
    }

    pub fn multi_index(&self, v: usize) -> Vec<usize> {
        (0..self.dim()).map(|a| self.coord(v, a)).collect()
    }

    pub fn index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn point(&self, v: usize) -> Vec<f64> {
        (0..self.dim())
            .map(|a| self.origin[a] + self.coord(v, a) as f64 * self.h)
            .collect()
    }

    #[inline]
    pub fn forward(&self, v: usize, axis: usize) -> Option<usize> {
        (self.coord(v, axis) + 1 < self.shape[axis]).then(|| v + self.strides[axis])
    }

    #[inline]
    pub fn backward(&self, v: usize, axis: usize) -> Option<usize> {
        (self.coord(v, axis) > 0).then(|| v - self.strides[axis])
    }

    /// A vertex owns the cell `[x, x + h]^n` when all forward neighbours exist.
    pub fn owns_cell(&self, v: usize) -> bool {
        (0..self.dim()).all(|a| self.coord(v, a) + 1 < self.shape[a])
    }

    pub fn nearest(&self, point: &[f64]) -> Option<usize> {
        if point.len() != self.dim() {
            return None;
        }
        let idx: Vec<usize> = (0..self.dim())
            .map(|a| {
                let t = ((point[a] - self.origin[a]) / self.h).round();
                t.clamp(0.0, (self.shape[a] - 1) as f64) as usize
            })
            .collect();
        Some(self.index(&idx))
    }

    /// Vertices on the outer faces of the box.
    pub fn is_on_boundary(&self, v: usize) -> bool {
        (0..self.dim()).any(|a| {
            let c = self.coord(v, a);
            c == 0 || c + 1 == self.shape[a]
        })
    }
}

/// Regular grid on a box with `2n`-neighbour edges of length `h`.
///
/// Each vertex that owns a cell gets measure `w(cell centre) * h^n`; the
/// vertices on the far faces own no cell and carry zero measure, so the total
/// measure is the midpoint-rule integral of `w` over the box.
pub fn build_grid(bounds: &[(f64, f64)], h: f64, weight: &dyn Fn(&[f64]) -> f64) -> Result<Space> {
    if bounds.is_empty() {
        return Err(Error::InvalidSpace("grid needs at least one axis".into()));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidSpace(format!(
            "grid spacing must be positive, got {h}"
        )));
    }
    let mut shape = Vec::with_capacity(bounds.len());
    for &(lo, hi) in bounds {
        let cells = ((hi - lo) / h + 1e-9).floor();
        if !(cells >= 1.0) {
            return Err(Error::InvalidSpace(format!(
                "degenerate box side [{lo}, {hi}] for h = {h}"
            )));
        }
        shape.push(cells as usize + 1);
    }
    let origin: Vec<f64> = bounds.iter().map(|b| b.0).collect();
    let grid = Grid::new(origin, h, shape);
    let n = grid.n_vertices();
    let dim = grid.dim();
    let cell_volume = h.powi(dim as i32);

    let mut coords = Vec::with_capacity(n * dim);
    let mut measure = Vec::with_capacity(n);
    let mut edges = Vec::with_capacity(n * dim);
    let mut centre = vec![0.0; dim];
    for v in 0..n {
        let x = grid.point(v);
        if grid.owns_cell(v) {
            for a in 0..dim {
                centre[a] = x[a] + 0.5 * h;
            }
            let w = weight(&centre);
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidSpace(format!("weight {w} at {centre:?}")));
            }
            measure.push(w * cell_volume);
        } else {
            measure.push(0.0);
        }
        coords.extend_from_slice(&x);
        for a in 0..dim {
            if let Some(w) = grid.forward(v, a) {
                edges.push(Edge {
                    a: v,
                    b: w,
                    length: h,
                });
            }
        }
    }
    Space::from_parts(
        measure,
        edges,
        Some((dim, coords)),
        EnergyModel::GridForwardDiff,
        Some(grid),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_round_trip() {
        let g = Grid::new(vec![0.0, -1.0, 2.0], 0.5, vec![3, 4, 5]);
        for v in 0..g.n_vertices() {
            assert_eq!(g.index(&g.multi_index(v)), v);
        }
        assert_eq!(g.forward(0, 1), Some(3));
        assert_eq!(g.backward(0, 1), None);
        assert_eq!(g.point(g.index(&[2, 3, 4])), vec![1.0, 0.5, 4.0]);
        assert_eq!(g.nearest(&[0.74, 0.26, 2.1]), Some(g.index(&[1, 3, 0])));
    }

    #[test]
    fn measure_integrates_weight_by_midpoint_rule() {
        let s = build_grid(&[(0.0, 1.0), (0.0, 2.0)], 0.25, &|x| 1.0 + x[0]).unwrap();
        let total: f64 = s.measure().iter().sum();
        assert!((total - 3.0).abs() < 1e-12);
        assert_eq!(s.n_vertices(), 5 * 9);
        assert_eq!(s.n_edges(), 4 * 9 + 5 * 8);
    }

    #[test]
    fn degenerate_box_rejected() {
        assert!(build_grid(&[(0.0, 0.0)], 0.1, &|_| 1.0).is_err());
        assert!(build_grid(&[(0.0, 1.0)], -0.1, &|_| 1.0).is_err());
    }
}
