//! Measures `dmu = w dx + dsigma` on an interval, with `sigma` a finite sum
//! of atoms at grid vertices.
//!
//! The gradient integrand lives on the absolutely continuous part only, so
//! energies never see the atoms while masses, averages and Sobolev
//! capacities do.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::solver::{minimize_box, SolverConfig};
use crate::space::{build_grid, Diff, GradientField, GradientMode, Space, Stencil};

#[derive(Clone, Debug, PartialEq)]
pub struct Measure1D {
    pub a: f64,
    pub b: f64,
    pub h: f64,
    /// Density on each cell, sampled at the midpoint.
    pub weights: Vec<f64>,
    /// Lower bound of the density on each cell.
    pub cell_inf: Vec<f64>,
    /// `(vertex, mass)`.
    pub atoms: Vec<(usize, f64)>,
}

impl Measure1D {
    /// Samples `w` at both ends and the midpoint of every cell and rejects
    /// densities that are not bounded away from zero.
    pub fn from_fn(
        a: f64,
        b: f64,
        h: f64,
        w: &dyn Fn(f64) -> f64,
        atoms: &[(f64, f64)],
    ) -> Result<Self> {
        let cells = Self::cells(a, b, h)?;
        let mut weights = Vec::with_capacity(cells);
        let mut cell_inf = Vec::with_capacity(cells);
        for i in 0..cells {
            let x0 = a + i as f64 * h;
            let s = [w(x0), w(x0 + 0.5 * h), w(x0 + h)];
            weights.push(s[1]);
            cell_inf.push(s.iter().copied().fold(f64::INFINITY, f64::min));
        }
        Self::build(a, b, h, weights, cell_inf, atoms)
    }

    /// Per-cell densities, each taken as its own lower bound.
    pub fn from_cells(
        a: f64,
        b: f64,
        h: f64,
        weights: Vec<f64>,
        atoms: &[(f64, f64)],
    ) -> Result<Self> {
        let cells = Self::cells(a, b, h)?;
        if weights.len() != cells {
            return Err(Error::LengthMismatch {
                expected: cells,
                got: weights.len(),
            });
        }
        let inf = weights.clone();
        Self::build(a, b, h, weights, inf, atoms)
    }

    fn cells(a: f64, b: f64, h: f64) -> Result<usize> {
        if !(h > 0.0 && b > a && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidSpace(format!(
                "interval [{a}, {b}] with h = {h}"
            )));
        }
        let c = ((b - a) / h).round();
        if c < 1.0 || ((b - a) / h - c).abs() > 1e-9 * c {
            return Err(Error::InvalidSpace(format!(
                "h = {h} does not divide [{a}, {b}]"
            )));
        }
        Ok(c as usize)
    }

    fn build(
        a: f64,
        b: f64,
        h: f64,
        weights: Vec<f64>,
        cell_inf: Vec<f64>,
        atoms: &[(f64, f64)],
    ) -> Result<Self> {
        if let Some(i) = cell_inf.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidSpace(format!(
                "density not bounded away from zero: inf over cell {i} is {}",
                cell_inf[i]
            )));
        }
        if weights.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSpace("non-finite density".into()));
        }
        let cells = weights.len();
        let mut snapped = Vec::with_capacity(atoms.len());
        for &(x, m) in atoms {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::InvalidSpace(format!(
                    "atom mass must be positive, got {m}"
                )));
            }
            if !(a..=b).contains(&x) {
                return Err(Error::InvalidSpace(format!(
                    "atom at {x} outside [{a}, {b}]"
                )));
            }
            let v = (((x - a) / h).round() as usize).min(cells);
            snapped.push((v, m));
        }
        Ok(Self {
            a,
            b,
            h,
            weights,
            cell_inf,
            atoms: snapped,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.weights.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.weights.len() + 1
    }

    pub fn x(&self, v: usize) -> f64 {
        self.a + v as f64 * self.h
    }

    /// Same density, no atoms.
    pub fn without_atoms(&self) -> Self {
        Self {
            atoms: Vec::new(),
            ..self.clone()
        }
    }

    /// Mass per vertex: vertex `i` carries `h w_i` of cell `i`, plus atoms.
    pub fn vertex_masses(&self) -> Vec<f64> {
        let mut m: Vec<f64> = self.weights.iter().map(|w| w * self.h).collect();
        m.push(0.0);
        for &(v, a) in &self.atoms {
            m[v] += a;
        }
        m
    }

    /// Energy stencil: one term `h w_i |(u_(i+1) - u_i)/h|^p` per cell.
    pub fn stencil(&self) -> Stencil {
        let mut s = Stencil::new();
        let inv = 1.0 / self.h;
        for (i, &w) in self.weights.iter().enumerate() {
            s.push(
                w * self.h,
                &[Diff {
                    tail: i,
                    head: i + 1,
                    inv_len: inv,
                }],
            );
        }
        s
    }

    /// The absolutely continuous part as a grid space.
    pub fn ac_space(&self) -> Result<Space> {
        let (a, h, w) = (self.a, self.h, &self.weights);
        build_grid(&[(self.a, self.b)], self.h, &|c| {
            let i = ((c[0] - a) / h - 0.5)
                .round()
                .clamp(0.0, (w.len() - 1) as f64) as usize;
            w[i]
        })
    }

    fn check(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.n_vertices() {
            return Err(Error::LengthMismatch {
                expected: self.n_vertices(),
                got: u.len(),
            });
        }
        if let Some(v) = u.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(v));
        }
        Ok(())
    }

    /// `int g^p w dx` over the whole interval.
    pub fn energy(&self, u: &[f64], p: f64) -> Result<f64> {
        self.check(u)?;
        Ok(self.stencil().energy(u, p))
    }
}

/// `|u'|` on each cell, indexed by the cell's left vertex. Atoms carry no
/// gradient.
pub fn minimal_gradient_1d(u: &[f64], m: &Measure1D) -> Result<GradientField> {
    m.check(u)?;
    let entries = (0..m.n_cells())
        .map(|i| (i, (u[i + 1] - u[i]).abs() / m.h))
        .collect();
    Ok(GradientField {
        mode: GradientMode::PerVertex,
        entries,
    })
}

/// `int_0^h |y0 + (y1-y0) t/h|^q dt`.
fn linear_power_integral(y0: f64, y1: f64, h: f64, q: f64) -> f64 {
    let f = |y: f64| y.signum() * y.abs().powf(q + 1.0) / (q + 1.0);
    let d = y1 - y0;
    if d.abs() <= 1e-6 * (y0.abs() + y1.abs()) || d == 0.0 {
        // Simpson is exact to O(d^2) relative here
        let mid = 0.5 * (y0 + y1);
        return h * (y0.abs().powf(q) + 4.0 * mid.abs().powf(q) + y1.abs().powf(q)) / 6.0;
    }
    h * (f(y1) - f(y0)) / d
}

#[derive(Clone, Debug)]
pub struct PoincareBound1D {
    /// `(avg_I |u - u_I|^q dmu)^(1/q)`.
    pub lhs: f64,
    /// `2 |I|^(1-1/p) (mu(I)/ess inf_I w)^(1/p) (avg_I g^p dmu)^(1/p)`.
    pub rhs: f64,
    pub mu_i: f64,
    pub passed: bool,
}

/// Both sides of the interval Poincare inequality on `I = [x0, x1]`
/// (snapped to vertices), for the piecewise linear interpolant of `u`.
pub fn poincare_bound_1d(
    u: &[f64],
    m: &Measure1D,
    interval: (f64, f64),
    p: f64,
    q: f64,
) -> Result<PoincareBound1D> {
    m.check(u)?;
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidExponent(q));
    }
    let snap = |x: f64| (((x - m.a) / m.h).round().max(0.0) as usize).min(m.n_cells());
    let (i0, i1) = (snap(interval.0), snap(interval.1));
    if i1 <= i0 {
        return Err(Error::InvalidSpace(format!(
            "interval {interval:?} is shorter than one cell"
        )));
    }
    let atoms: Vec<(usize, f64)> = m
        .atoms
        .iter()
        .copied()
        .filter(|&(v, _)| (i0..=i1).contains(&v))
        .collect();
    let mut mu = 0.0;
    let mut first = 0.0;
    for i in i0..i1 {
        mu += m.h * m.weights[i];
        first += m.h * m.weights[i] * 0.5 * (u[i] + u[i + 1]);
    }
    for &(v, a) in &atoms {
        mu += a;
        first += a * u[v];
    }
    let mean = first / mu;
    let mut dev = 0.0;
    let mut grad = 0.0;
    for i in i0..i1 {
        dev += m.weights[i] * linear_power_integral(u[i] - mean, u[i + 1] - mean, m.h, q);
        grad += m.h * m.weights[i] * ((u[i + 1] - u[i]).abs() / m.h).powf(p);
    }
    for &(v, a) in &atoms {
        dev += a * (u[v] - mean).abs().powf(q);
    }
    let len = (i1 - i0) as f64 * m.h;
    let winf = m.cell_inf[i0..i1]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let lhs = (dev / mu).powf(1.0 / q);
    let rhs = 2.0 * len.powf(1.0 - 1.0 / p) * (mu / winf).powf(1.0 / p) * (grad / mu).powf(1.0 / p);
    Ok(PoincareBound1D {
        lhs,
        rhs,
        mu_i: mu,
        passed: lhs <= rhs * (1.0 + 1e-9),
    })
}

#[derive(Clone, Debug)]
pub struct AtomInvariance {
    pub u_with: Vec<f64>,
    pub u_without: Vec<f64>,
    pub bitwise_identical: bool,
    /// Sobolev capacity of the atom vertices under `mu` and under `w dx`.
    pub capacity_with: f64,
    pub capacity_without: f64,
}

fn dirichlet_1d(
    m: &Measure1D,
    f0: f64,
    f1: f64,
    p: f64,
    config: &SolverConfig,
) -> Result<Vec<f64>> {
    let n = m.n_vertices();
    let mut x0: Vec<f64> = (0..n)
        .map(|v| f0 + (f1 - f0) * v as f64 / (n - 1) as f64)
        .collect();
    x0[n - 1] = f1;
    let mut free = vec![true; n];
    free[0] = false;
    free[n - 1] = false;
    let out = minimize_box(
        &m.stencil(),
        p,
        None,
        x0,
        vec![f64::NEG_INFINITY; n],
        vec![f64::INFINITY; n],
        free,
        config,
    )?;
    Ok(out.x)
}

fn sobolev_capacity_1d(m: &Measure1D, set: &[usize], p: f64, config: &SolverConfig) -> Result<f64> {
    let n = m.n_vertices();
    if set.is_empty() {
        return Ok(0.0);
    }
    let mut x0 = vec![0.0; n];
    let mut free = vec![true; n];
    for &v in set {
        x0[v] = 1.0;
        free[v] = false;
    }
    let masses = m.vertex_masses();
    let st = m.stencil();
    let out = minimize_box(
        &st,
        p,
        Some((&masses, 1.0)),
        x0,
        vec![0.0; n],
        vec![1.0; n],
        free,
        config,
    )?;
    let mass: f64 = masses.iter().zip(&out.x).map(|(a, u)| a * u.powf(p)).sum();
    Ok(mass + st.energy(&out.x, p))
}

/// Solves the Dirichlet problem with `u(a) = f0`, `u(b) = f1` with and
/// without the atoms, and compares the Sobolev capacity of the atom carrier.
pub fn dirichlet_atom_invariance(
    m: &Measure1D,
    f0: f64,
    f1: f64,
    p: f64,
    config: &SolverConfig,
) -> Result<AtomInvariance> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    let bare = m.without_atoms();
    let u_with = dirichlet_1d(m, f0, f1, p, config)?;
    let u_without = dirichlet_1d(&bare, f0, f1, p, config)?;
    let bitwise_identical = u_with
        .iter()
        .zip(&u_without)
        .all(|(a, b)| a.to_bits() == b.to_bits());
    let mut carrier: Vec<usize> = m.atoms.iter().map(|a| a.0).collect();
    carrier.sort_unstable();
    carrier.dedup();
    Ok(AtomInvariance {
        capacity_with: sobolev_capacity_1d(m, &carrier, p, config)?,
        capacity_without: sobolev_capacity_1d(&bare, &carrier, p, config)?,
        u_with,
        u_without,
        bitwise_identical,
    })
}

#[derive(Clone, Debug)]
pub struct PToOneRow {
    pub j: u32,
    /// `int_0^1 (1+x) |u_j'| dx` on the grid.
    pub energy: f64,
    /// `1 + 1/(2j)`.
    pub exact: f64,
}

#[derive(Clone, Debug)]
pub struct PToOneSolve {
    pub p: f64,
    pub energy: f64,
    /// Share of the total variation of the minimizer on `[0, 0.1]`.
    pub left_fraction: f64,
    /// First grid point where the minimizer reaches `1/2`.
    pub half_width: f64,
    pub u: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct PToOneReport {
    pub h: f64,
    pub energies: Vec<PToOneRow>,
    pub solves: Vec<PToOneSolve>,
}

/// Weight `1 + x` on `(0, 1)`, data `u(0) = 0`, `u(1) = 1`: the `p = 1`
/// energies of `min(jx, 1)` decrease to the unattained infimum 1, and the
/// minimizers for `p > 1` pile their variation up near `x = 0`.
pub fn p_to_one_demo(
    h: f64,
    js: &[u32],
    ps: &[f64],
    config: &SolverConfig,
) -> Result<PToOneReport> {
    let m = Measure1D::from_fn(0.0, 1.0, h, &|x| 1.0 + x, &[])?;
    let n = m.n_vertices();
    let energies = js
        .iter()
        .map(|&j| {
            let u: Vec<f64> = (0..n).map(|v| (j as f64 * m.x(v)).min(1.0)).collect();
            Ok(PToOneRow {
                j,
                energy: m.energy(&u, 1.0)?,
                exact: 1.0 + 0.5 / j as f64,
            })
        })
        .collect::<Result<_>>()?;
    let solves = ps
        .iter()
        .map(|&p| {
            let u = dirichlet_1d(&m, 0.0, 1.0, p, config)?;
            let tv: f64 = u.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
            let cut = ((0.1 / h).round() as usize).min(n - 1);
            let left: f64 = u[..=cut].windows(2).map(|w| (w[1] - w[0]).abs()).sum();
            let half = u.iter().position(|&x| x >= 0.5).unwrap_or(n - 1);
            Ok(PToOneSolve {
                p,
                energy: m.energy(&u, p)?,
                left_fraction: left / tv,
                half_width: m.x(half),
                u,
            })
        })
        .collect::<Result<_>>()?;
    Ok(PToOneReport {
        h,
        energies,
        solves,
    })
}

/// `|x|^alpha` on `[-1, 1]`, a density that vanishes at the origin.
pub fn power_weight_fixture(alpha: f64, h: f64) -> Result<Measure1D> {
    Measure1D::from_fn(-1.0, 1.0, h, &|x: f64| x.abs().powf(alpha), &[])
}

/// `w = f^(-1/eps)` with `f = 1 + sum_j a_j |x - q_j|^(-alpha eps)` over the
/// dyadic points `q_j` of `[0, 1]` up to level `depth`, `a_j = 2^-j`: the
/// density vanishes on a dense set.
pub fn dense_singularity_fixture(alpha: f64, eps: f64, depth: u32, h: f64) -> Result<Measure1D> {
    let mut q = Vec::new();
    for l in 0..=depth {
        let d = 1u64 << l;
        for k in 0..=d {
            if l == 0 || k % 2 == 1 {
                q.push(k as f64 / d as f64);
            }
        }
    }
    let w = move |x: f64| {
        let f: f64 = 1.0
            + q.iter()
                .enumerate()
                .map(|(j, &qj)| (-(j as f64 + 1.0)).exp2() * (x - qj).abs().powf(-alpha * eps))
                .sum::<f64>();
        f.powf(-1.0 / eps)
    };
    Measure1D::from_fn(0.0, 1.0, h, &w, &[])
}

#[derive(Clone, Debug, Default)]
pub struct PoincareBattery {
    pub instances: usize,
    pub failures: usize,
    /// Smallest `rhs / lhs` over instances with `lhs > 0`.
    pub worst_ratio: f64,
}

/// Random piecewise-linear `u`, random densities in `[0.2, 5]`, random atoms
/// and random subintervals, `p in (1, 4)`, `q in [1, 4)`.
pub fn poincare_battery(seed: u64, instances: usize) -> Result<PoincareBattery> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = PoincareBattery {
        instances,
        failures: 0,
        worst_ratio: f64::INFINITY,
    };
    for _ in 0..instances {
        let cells = rng.gen_range(8..64);
        let h = 1.0 / cells as f64;
        let weights: Vec<f64> = (0..cells).map(|_| rng.gen_range(0.2..5.0)).collect();
        let atoms: Vec<(f64, f64)> = (0..rng.gen_range(0..4))
            .map(|_| (rng.gen_range(0.0..1.0), rng.gen_range(0.01..10.0)))
            .collect();
        let m = Measure1D::from_cells(0.0, 1.0, h, weights, &atoms)?;
        let u: Vec<f64> = (0..=cells).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lo = rng.gen_range(0..cells);
        let hi = rng.gen_range(lo + 1..=cells);
        let p = rng.gen_range(1.05..4.0);
        let q = rng.gen_range(1.0..4.0);
        let r = poincare_bound_1d(&u, &m, (lo as f64 * h, hi as f64 * h), p, q)?;
        if !r.passed {
            out.failures += 1;
        }
        if r.lhs > 0.0 {
            out.worst_ratio = out.worst_ratio.min(r.rhs / r.lhs);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(h: f64, atoms: &[(f64, f64)]) -> Measure1D {
        Measure1D::from_fn(0.0, 1.0, h, &|_| 1.0, atoms).unwrap()
    }

    #[test]
    fn linear_energy_ignores_atoms() {
        let m = unit(1.0 / 64.0, &[(0.5, 3.0)]);
        let u: Vec<f64> = (0..m.n_vertices()).map(|v| m.x(v)).collect();
        let g = minimal_gradient_1d(&u, &m).unwrap();
        assert!(g.entries.iter().all(|&(_, x)| (x - 1.0).abs() < 1e-12));
        assert!((m.energy(&u, 3.3).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_energy_converges() {
        let m = unit(1.0 / 1024.0, &[]);
        let u: Vec<f64> = (0..m.n_vertices()).map(|v| m.x(v).powi(2)).collect();
        // midpoint slopes are exact for x^2, so the discrete energy is sum h (2 x_mid)^2
        assert!((m.energy(&u, 2.0).unwrap() - 4.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn identity_on_unit_interval() {
        let m = unit(1.0 / 128.0, &[]);
        let u: Vec<f64> = (0..m.n_vertices()).map(|v| m.x(v)).collect();
        let r = poincare_bound_1d(&u, &m, (0.0, 1.0), 2.0, 2.0).unwrap();
        assert!((r.lhs - (1.0f64 / 12.0).sqrt()).abs() < 1e-12, "{}", r.lhs);
        assert!((r.rhs - 2.0).abs() < 1e-12);
    }

    #[test]
    fn linear_power_integral_matches_quadrature() {
        let exact = linear_power_integral(-0.3, 0.7, 1.0, 2.5);
        let n = 200_000;
        let num: f64 = (0..n)
            .map(|k| (-0.3 + (k as f64 + 0.5) / n as f64).abs().powf(2.5))
            .sum::<f64>()
            / n as f64;
        assert!((exact - num).abs() < 1e-9);
    }

    #[test]
    fn degenerate_densities_are_rejected() {
        assert!(power_weight_fixture(3.5, 1.0 / 64.0).is_err());
        assert!(dense_singularity_fixture(2.0, 0.25, 4, 1.0 / 64.0).is_err());
    }

    #[test]
    fn atoms_raise_capacity_but_not_solutions() {
        let m = unit(1.0 / 64.0, &[(0.5, 10.0)]);
        let r = dirichlet_atom_invariance(&m, 0.0, 1.0, 2.0, &SolverConfig::default()).unwrap();
        assert!(r.bitwise_identical);
        assert!((r.capacity_with - r.capacity_without - 10.0).abs() < 1e-9);
    }

    #[test]
    fn p_to_one_energies_and_layers() {
        let r = p_to_one_demo(
            1.0 / 4096.0,
            &[1, 4, 256],
            &[2.0, 1.5, 1.1],
            &SolverConfig::default(),
        )
        .unwrap();
        for row in &r.energies {
            assert!((row.energy - row.exact).abs() < 1e-9 * row.exact, "{row:?}");
        }
        let two = &r.solves[0];
        assert!(
            (two.energy - 1.0 / std::f64::consts::LN_2).abs() < 1e-6,
            "{}",
            two.energy
        );
        assert!(
            r.solves[2].half_width < r.solves[1].half_width
                && r.solves[1].half_width < two.half_width
        );
        // exact share for p = 1.1: (1 - 1.1^-9) / (1 - 2^-9)
        let share = (1.0 - 1.1f64.powi(-9)) / (1.0 - 2f64.powi(-9));
        assert!(
            (r.solves[2].left_fraction - share).abs() < 1e-3,
            "{}",
            r.solves[2].left_fraction
        );
    }

    #[test]
    fn small_poincare_battery_passes() {
        let b = poincare_battery(7, 50).unwrap();
        assert_eq!(b.failures, 0);
        assert!(b.worst_ratio >= 1.0);
    }
}
