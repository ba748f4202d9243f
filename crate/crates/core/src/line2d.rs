//! The plane measure `dmu = dx + w(x1) dx1` on a rectangle whose row
//! `x2 = 0` carries the line part.
//!
//! Off the line the energy integrand is `|grad u|`; on the line only the
//! horizontal difference enters, weighted by `h w`.

use crate::error::{Error, Result};
use crate::linalg::{pcg_with, CsrMatrix, IncompleteCholesky};
use crate::solver::{minimize_box, SolverConfig};
use crate::space::{
    build_grid, poincare_constant, poincare_constant_with, Diff, Space, Stencil, VertexSet,
};

#[derive(Clone, Debug)]
pub struct LineMeasureSpace {
    /// Area part: a grid with unit density.
    pub space: Space,
    pub line_row: usize,
    /// `w` at the midpoint of each line cell `[x_i, x_(i+1)]`.
    pub line_weight: Vec<f64>,
}

impl LineMeasureSpace {
    pub fn new(x: (f64, f64), y: (f64, f64), h: f64, w: &dyn Fn(f64) -> f64) -> Result<Self> {
        if !(y.0 <= 0.0 && 0.0 <= y.1) {
            return Err(Error::InvalidSpace(format!(
                "the line x2 = 0 misses [{}, {}]",
                y.0, y.1
            )));
        }
        let row = -y.0 / h;
        if (row - row.round()).abs() > 1e-9 * row.abs().max(1.0) {
            return Err(Error::InvalidSpace(format!(
                "x2 = 0 is not a grid row for h = {h}"
            )));
        }
        let space = build_grid(&[x, y], h, &|_| 1.0)?;
        let nx = space.grid().expect("grid").shape[0];
        let line_weight: Vec<f64> = (0..nx - 1).map(|i| w(x.0 + (i as f64 + 0.5) * h)).collect();
        if let Some(v) = line_weight.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidSpace(format!(
                "line weight must be finite and nonnegative, got {v}"
            )));
        }
        Ok(Self {
            space,
            line_row: row.round() as usize,
            line_weight,
        })
    }

    /// `w = alpha` along the whole line.
    pub fn constant(x: (f64, f64), y: (f64, f64), h: f64, alpha: f64) -> Result<Self> {
        Self::new(x, y, h, &|_| alpha)
    }

    pub fn h(&self) -> f64 {
        self.space.grid().expect("grid").h
    }

    pub fn n_vertices(&self) -> usize {
        self.space.n_vertices()
    }

    pub fn nx(&self) -> usize {
        self.space.grid().expect("grid").shape[0]
    }

    pub fn ny(&self) -> usize {
        self.space.grid().expect("grid").shape[1]
    }

    pub fn vertex(&self, i: usize, j: usize) -> usize {
        self.space.grid().expect("grid").index(&[i, j])
    }

    pub fn line_stencil(&self) -> Stencil {
        let h = self.h();
        let mut s = Stencil::new();
        for (i, &w) in self.line_weight.iter().enumerate() {
            let (a, b) = (
                self.vertex(i, self.line_row),
                self.vertex(i + 1, self.line_row),
            );
            s.push(
                h * w,
                &[Diff {
                    tail: a,
                    head: b,
                    inv_len: 1.0 / h,
                }],
            );
        }
        s
    }

    /// Area terms followed by line terms.
    pub fn stencil(&self) -> Stencil {
        let mut s = self.space.stencil(None);
        s.extend(&self.line_stencil());
        s
    }

    /// Mass of the line part per vertex (`h w_i` on the left end of cell `i`).
    pub fn line_masses(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_vertices()];
        for (i, &w) in self.line_weight.iter().enumerate() {
            m[self.vertex(i, self.line_row)] = self.h() * w;
        }
        m
    }

    /// Area plus line mass.
    pub fn masses(&self) -> Vec<f64> {
        self.space
            .measure()
            .iter()
            .zip(self.line_masses())
            .map(|(a, b)| a + b)
            .collect()
    }

    pub fn boundary(&self) -> VertexSet {
        let g = self.space.grid().expect("grid");
        VertexSet::from_predicate(self.n_vertices(), |v| g.is_on_boundary(v))
    }
}

pub fn line_energy(lms: &LineMeasureSpace, u: &[f64], p: f64) -> Result<f64> {
    if u.len() != lms.n_vertices() {
        return Err(Error::LengthMismatch {
            expected: lms.n_vertices(),
            got: u.len(),
        });
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    Ok(lms.stencil().energy(u, p))
}

#[derive(Clone, Debug)]
pub struct TransmissionSolution {
    pub u: Vec<f64>,
    pub p: f64,
    pub energy: f64,
    pub iterations: usize,
    /// `||K u - b|| / ||b||` of the assembled system, `p = 2` only.
    pub linear_residual: Option<f64>,
    pub warning: Option<String>,
}

/// Minimizes the quadratic energy of `stencil` with the values of `f` pinned
/// on `pinned`: `K_ff u_f = -K_fp f_p`, solved by IC(0)-preconditioned CG.
fn quadratic_solve(stencil: &Stencil, f: &[f64], pinned: &VertexSet) -> (Vec<f64>, usize, f64) {
    let n = f.len();
    let mut t = Vec::with_capacity(8 * stencil.len() + n);
    let mut b = vec![0.0; n];
    // the energy is sum_k w_k sum_c (D_c u)^2, so K = 2 sum_k w_k sum_c D_c^T D_c
    for (w, comps) in stencil.terms() {
        for c in comps {
            let ends = [(c.head, c.inv_len), (c.tail, -c.inv_len)];
            for (x, sx) in ends {
                if pinned.contains(x) {
                    continue;
                }
                for (y, sy) in ends {
                    let k = 2.0 * w * sx * sy;
                    if pinned.contains(y) {
                        b[x] -= k * f[y];
                    } else {
                        t.push((x, y, k));
                    }
                }
            }
        }
    }
    for v in pinned.iter() {
        t.push((v, v, 1.0));
        b[v] = f[v];
    }
    let k = CsrMatrix::from_triplets(n, &t);
    let ic = IncompleteCholesky::new(&k);
    let mut u = f.to_vec();
    let out = pcg_with(
        |x, y| k.mul_vec(x, y),
        |r, z| ic.solve(r, z),
        &b,
        &mut u,
        1e-14,
        10 * n + 100,
    );
    for v in pinned.iter() {
        u[v] = f[v];
    }
    let mut ku = vec![0.0; n];
    k.mul_vec(&u, &mut ku);
    let (mut num, mut den) = (0.0, 0.0);
    for v in (0..n).filter(|&v| !pinned.contains(v)) {
        num += (ku[v] - b[v]).powi(2);
        den += b[v] * b[v];
    }
    let rel = if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    };
    (u, out.iterations, rel)
}

/// Minimizes the line energy with `u = f` on the rectangle's boundary. For
/// `p = 2` this is a sparse SPD system; other exponents go to the generic
/// convex solver and carry a warning.
pub fn transmission_solve(
    lms: &LineMeasureSpace,
    f: &[f64],
    p: f64,
    config: &SolverConfig,
) -> Result<TransmissionSolution> {
    let n = lms.n_vertices();
    if f.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: f.len(),
        });
    }
    if let Some(v) = f.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(v));
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    let stencil = lms.stencil();
    let pinned = lms.boundary();
    if p == 2.0 {
        let (u, iterations, res) = quadratic_solve(&stencil, f, &pinned);
        return Ok(TransmissionSolution {
            energy: stencil.energy(&u, 2.0),
            u,
            p,
            iterations,
            linear_residual: Some(res),
            warning: None,
        });
    }
    let free: Vec<bool> = (0..n).map(|v| !pinned.contains(v)).collect();
    let out = minimize_box(
        &stencil,
        p,
        None,
        f.to_vec(),
        vec![f64::NEG_INFINITY; n],
        vec![f64::INFINITY; n],
        free,
        config,
    )?;
    Ok(TransmissionSolution {
        energy: stencil.energy(&out.x, p),
        u: out.x,
        p,
        iterations: out.iterations,
        linear_residual: None,
        warning: Some(format!(
            "p = {p}: generic solver, no transmission condition to check"
        )),
    })
}

/// Plain discrete Laplace problem on a grid space with `u = f` on its boundary.
pub fn laplace_solve(space: &Space, f: &[f64]) -> Result<Vec<f64>> {
    let g = space
        .grid()
        .ok_or_else(|| Error::InvalidSpace("laplace_solve needs a grid".into()))?;
    if f.len() != space.n_vertices() {
        return Err(Error::LengthMismatch {
            expected: space.n_vertices(),
            got: f.len(),
        });
    }
    let pinned = VertexSet::from_predicate(space.n_vertices(), |v| g.is_on_boundary(v));
    Ok(quadratic_solve(&space.stencil(None), f, &pinned).0)
}

#[derive(Clone, Debug)]
pub struct JumpResidual {
    /// `(i, r_i)` for the interior line vertices `x_i`.
    pub values: Vec<(usize, f64)>,
    pub max_norm: f64,
}

/// `d2^- u - d2^+ u - d1(w d1 u)` along the line, with second-order
/// one-sided normal derivatives and a centred difference of `w d1 u`.
pub fn jump_residual(lms: &LineMeasureSpace, u: &[f64]) -> Result<JumpResidual> {
    if u.len() != lms.n_vertices() {
        return Err(Error::LengthMismatch {
            expected: lms.n_vertices(),
            got: u.len(),
        });
    }
    let (r, ny) = (lms.line_row, lms.ny());
    if r < 2 || r + 2 >= ny {
        return Err(Error::InvalidSpace(
            "the line needs two grid rows on each side".into(),
        ));
    }
    let h = lms.h();
    let at = |i: usize, j: usize| u[lms.vertex(i, j)];
    let mut values = Vec::with_capacity(lms.nx());
    for i in 1..lms.nx() - 1 {
        let up = (-3.0 * at(i, r) + 4.0 * at(i, r + 1) - at(i, r + 2)) / (2.0 * h);
        let down = (3.0 * at(i, r) - 4.0 * at(i, r - 1) + at(i, r - 2)) / (2.0 * h);
        let right = lms.line_weight[i] * (at(i + 1, r) - at(i, r)) / h;
        let left = lms.line_weight[i - 1] * (at(i, r) - at(i - 1, r)) / h;
        values.push((i, down - up - (right - left) / h));
    }
    let max_norm = values.iter().fold(0.0f64, |m, &(_, x)| m.max(x.abs()));
    Ok(JumpResidual { values, max_norm })
}

#[derive(Clone, Debug)]
pub struct SumPoincare {
    /// Constant for `dmu` with its own energy.
    pub c_mu: f64,
    /// Constant for the area part alone.
    pub c_area: f64,
    /// Constant for the line part alone on `E` intersected with the line.
    pub c_line: f64,
    /// `max(c_area, c_line)`: splitting both the mass and the energy into
    /// their area and line parts bounds `c_mu` by the larger constant.
    pub bound: f64,
    pub passed: bool,
}

pub fn sum_measure_poincare_check(
    lms: &LineMeasureSpace,
    e: &VertexSet,
    p: f64,
) -> Result<SumPoincare> {
    if e.is_subset(&lms.space.full_set()) && e.len() == lms.n_vertices() {
        return Err(Error::Constraint(
            "E must have a nonempty complement".into(),
        ));
    }
    let c_area = poincare_constant(&lms.space, e, p)?.value;
    let c_mu = poincare_constant_with(&lms.stencil(), &lms.masses(), e, p)?.value;
    let on_line = VertexSet::from_predicate(lms.n_vertices(), |v| {
        e.contains(v) && lms.space.grid().expect("grid").coord(v, 1) == lms.line_row
    });
    let c_line = if on_line.is_empty() {
        0.0
    } else {
        poincare_constant_with(&lms.line_stencil(), &lms.line_masses(), &on_line, p)?.value
    };
    let bound = c_area.max(c_line);
    Ok(SumPoincare {
        c_mu,
        c_area,
        c_line,
        bound,
        passed: c_mu.is_finite() && c_mu <= bound * (1.0 + 1e-6),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(lms: &LineMeasureSpace, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..lms.n_vertices())
            .map(|v| {
                let x = lms.space.point(v).unwrap();
                f(x[0], x[1])
            })
            .collect()
    }

    #[test]
    fn linear_energy_is_one_plus_alpha() {
        let lms = LineMeasureSpace::constant((0.0, 1.0), (0.0, 1.0), 1.0 / 32.0, 0.7).unwrap();
        let u = field(&lms, |x, _| x);
        for p in [1.5, 2.0, 3.0] {
            assert!((line_energy(&lms, &u, p).unwrap() - 1.7).abs() < 1e-12);
        }
        let v = field(&lms, |_, y| y);
        assert!((line_energy(&lms, &v, 2.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_reduces_to_the_grid() {
        let lms = LineMeasureSpace::constant((0.0, 1.0), (-1.0, 1.0), 1.0 / 16.0, 0.0).unwrap();
        let u = field(&lms, |x, y| (3.0 * x).sin() * y.exp());
        assert_eq!(
            line_energy(&lms, &u, 2.5).unwrap(),
            lms.space.ambient_energy(&u, 2.5).unwrap()
        );
        let a = transmission_solve(&lms, &u, 2.0, &SolverConfig::default()).unwrap();
        let b = laplace_solve(&lms.space, &u).unwrap();
        assert_eq!(a.u, b);
    }

    #[test]
    fn linear_data_solves_exactly() {
        let lms = LineMeasureSpace::constant((0.0, 1.0), (-1.0, 1.0), 1.0 / 16.0, 1.0).unwrap();
        let f = field(&lms, |x, _| x);
        let s = transmission_solve(&lms, &f, 2.0, &SolverConfig::default()).unwrap();
        assert!(s.u.iter().zip(&f).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!(s.linear_residual.unwrap() < 1e-10);
        assert!(jump_residual(&lms, &s.u).unwrap().max_norm < 1e-9);
    }

    #[test]
    fn odd_data_has_no_jump() {
        let lms = LineMeasureSpace::constant((0.0, 1.0), (-1.0, 1.0), 1.0 / 16.0, 3.0).unwrap();
        let f = field(&lms, |_, y| y);
        let s = transmission_solve(&lms, &f, 2.0, &SolverConfig::default()).unwrap();
        assert!(s.u.iter().zip(&f).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!(jump_residual(&lms, &s.u).unwrap().max_norm < 1e-9);
    }

    #[test]
    fn other_exponents_warn() {
        let lms = LineMeasureSpace::constant((0.0, 1.0), (-1.0, 1.0), 1.0 / 8.0, 1.0).unwrap();
        let f = field(&lms, |x, y| x * y);
        let s = transmission_solve(&lms, &f, 3.0, &SolverConfig::default()).unwrap();
        assert!(s.warning.is_some() && s.linear_residual.is_none());
    }

    #[test]
    fn sum_measure_constant_is_bounded() {
        let lms = LineMeasureSpace::constant((0.0, 1.0), (-1.0, 1.0), 1.0 / 16.0, 1.0).unwrap();
        let e = lms.boundary().complement();
        let r = sum_measure_poincare_check(&lms, &e, 2.0).unwrap();
        assert!(r.passed, "{r:?}");
        let away = VertexSet::from_predicate(lms.n_vertices(), |v| {
            e.contains(v) && lms.space.point(v).unwrap()[1] > 0.25
        });
        let big = LineMeasureSpace::constant((0.0, 1.0), (-1.0, 1.0), 1.0 / 16.0, 1e6).unwrap();
        let a = sum_measure_poincare_check(&big, &away, 2.0).unwrap();
        assert!((a.c_mu - a.c_area).abs() < 1e-9 * a.c_area);
    }
}
