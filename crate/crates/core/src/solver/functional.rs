//! Smooth convex objective `sum_k w_k (|v_k|^2 + eps^2)^(p/2)` plus optional
//! zero-order and linear terms, with gradient and Hessian products.

use crate::linalg::CsrMatrix;
use crate::space::Stencil;

pub(crate) struct Functional<'a> {
    pub stencil: &'a Stencil,
    pub p: f64,
    /// Squared regularization; zero means the exact power.
    pub eps2: f64,
    /// `lambda * sum_i mu_i (u_i^2 + eps^2)^(p/2)`.
    pub mass: Option<(&'a [f64], f64)>,
    /// `sum_i c_i u_i`.
    pub linear: Option<&'a [f64]>,
}

#[inline]
fn phi(s: f64, p: f64) -> f64 {
    if p == 2.0 {
        s
    } else if s == 0.0 {
        0.0
    } else {
        s.powf(0.5 * p)
    }
}

/// `p s^(p/2 - 1)`, the derivative factor; zero at `s = 0` when `p > 2`.
#[inline]
fn dphi(s: f64, p: f64) -> f64 {
    if p == 2.0 {
        2.0
    } else if s == 0.0 {
        if p > 2.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        p * s.powf(0.5 * p - 1.0)
    }
}

impl Functional<'_> {
    pub fn value(&self, u: &[f64]) -> f64 {
        let mut total = 0.0;
        for (w, comps) in self.stencil.terms() {
            total += w * phi(Stencil::norm_sq(comps, u) + self.eps2, self.p);
        }
        if let Some((mu, lambda)) = self.mass {
            let m: f64 = mu
                .iter()
                .zip(u)
                .map(|(&m, &x)| {
                    if m > 0.0 {
                        m * phi(x * x + self.eps2, self.p)
                    } else {
                        0.0
                    }
                })
                .sum();
            total += lambda * m;
        }
        if let Some(c) = self.linear {
            total += c.iter().zip(u).map(|(a, b)| a * b).sum::<f64>();
        }
        total
    }

    /// Gradient into `g`; `gabs` receives the sum of absolute contributions,
    /// the scale against which rounding in `g` is judged.
    pub fn gradient(&self, u: &[f64], g: &mut [f64], gabs: &mut [f64]) {
        g.iter_mut().for_each(|x| *x = 0.0);
        gabs.iter_mut().for_each(|x| *x = 0.0);
        for (w, comps) in self.stencil.terms() {
            let s = Stencil::norm_sq(comps, u) + self.eps2;
            if s == 0.0 {
                continue;
            }
            let a = w * dphi(s, self.p);
            for d in comps {
                let c = a * (u[d.head] - u[d.tail]) * d.inv_len * d.inv_len;
                g[d.head] += c;
                g[d.tail] -= c;
                gabs[d.head] += c.abs();
                gabs[d.tail] += c.abs();
            }
        }
        if let Some((mu, lambda)) = self.mass {
            for i in 0..u.len() {
                if mu[i] > 0.0 {
                    let s = u[i] * u[i] + self.eps2;
                    if s > 0.0 {
                        let c = lambda * mu[i] * dphi(s, self.p) * u[i];
                        g[i] += c;
                        gabs[i] += c.abs();
                    }
                }
            }
        }
        if let Some(c) = self.linear {
            for i in 0..u.len() {
                g[i] += c[i];
                gabs[i] += c[i].abs();
            }
        }
    }

    /// Second-order model at `u`.
    pub fn hessian(&self, u: &[f64]) -> Hessian<'_> {
        let p = self.p;
        let n_terms = self.stencil.len();
        let mut a = Vec::with_capacity(n_terms);
        let mut b = Vec::with_capacity(n_terms);
        let mut v = Vec::new();
        for (w, comps) in self.stencil.terms() {
            let s = Stencil::norm_sq(comps, u) + self.eps2;
            for d in comps {
                v.push((u[d.head] - u[d.tail]) * d.inv_len);
            }
            if s == 0.0 {
                // only reachable for p >= 2 without regularization
                let coef = if p == 2.0 { 2.0 * w } else { 0.0 };
                a.push(coef);
                b.push(0.0);
            } else {
                let base = w * dphi(s, p);
                a.push(base);
                b.push(base * (p - 2.0) / s);
            }
        }
        let mass_diag = self.mass.map(|(mu, lambda)| {
            mu.iter()
                .zip(u)
                .map(|(&m, &x)| {
                    if m == 0.0 {
                        return 0.0;
                    }
                    let s = x * x + self.eps2;
                    if s == 0.0 {
                        if p == 2.0 {
                            2.0 * lambda * m
                        } else {
                            0.0
                        }
                    } else {
                        lambda * m * p * s.powf(0.5 * p - 2.0) * ((p - 1.0) * x * x + self.eps2)
                    }
                })
                .collect()
        });
        Hessian {
            stencil: self.stencil,
            a,
            b,
            v,
            mass_diag,
        }
    }
}

pub(crate) struct Hessian<'a> {
    stencil: &'a Stencil,
    a: Vec<f64>,
    b: Vec<f64>,
    v: Vec<f64>,
    mass_diag: Option<Vec<f64>>,
}

impl Hessian<'_> {
    /// `out = H d` restricted to the coordinates where `mask` is true.
    pub fn apply(&self, d: &[f64], out: &mut [f64], mask: &[bool]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        let mut off = 0;
        for k in 0..self.stencil.len() {
            let (_, comps) = self.stencil.term(k);
            let v = &self.v[off..off + comps.len()];
            off += comps.len();
            let (a, b) = (self.a[k], self.b[k]);
            if a == 0.0 && b == 0.0 {
                continue;
            }
            let mut vdv = 0.0;
            let mut dv_buf = [0.0f64; 8];
            for (i, c) in comps.iter().enumerate() {
                let dh = if mask[c.head] { d[c.head] } else { 0.0 };
                let dt = if mask[c.tail] { d[c.tail] } else { 0.0 };
                let dv = (dh - dt) * c.inv_len;
                dv_buf[i] = dv;
                vdv += v[i] * dv;
            }
            for (i, c) in comps.iter().enumerate() {
                let y = (a * dv_buf[i] + b * vdv * v[i]) * c.inv_len;
                out[c.head] += y;
                out[c.tail] -= y;
            }
        }
        if let Some(md) = &self.mass_diag {
            for i in 0..d.len() {
                if mask[i] {
                    out[i] += md[i] * d[i];
                }
            }
        }
        for i in 0..out.len() {
            if !mask[i] {
                out[i] = 0.0;
            }
        }
    }

    /// `H` on the masked coordinates as a matrix; unmasked rows and
    /// columns are replaced by the identity.
    pub fn assemble(&self, mask: &[bool]) -> CsrMatrix {
        let n = mask.len();
        let mut t = Vec::with_capacity(4 * self.stencil.len() + n);
        let mut off = 0;
        for k in 0..self.stencil.len() {
            let (_, comps) = self.stencil.term(k);
            let v = &self.v[off..off + comps.len()];
            off += comps.len();
            let (a, b) = (self.a[k], self.b[k]);
            if a == 0.0 && b == 0.0 {
                continue;
            }
            for (i, ci) in comps.iter().enumerate() {
                for (j, cj) in comps.iter().enumerate() {
                    let aij = b * v[i] * v[j] + if i == j { a } else { 0.0 };
                    if aij == 0.0 {
                        continue;
                    }
                    for (x, sx) in [(ci.head, ci.inv_len), (ci.tail, -ci.inv_len)] {
                        if !mask[x] {
                            continue;
                        }
                        for (y, sy) in [(cj.head, cj.inv_len), (cj.tail, -cj.inv_len)] {
                            if mask[y] {
                                t.push((x, y, aij * sx * sy));
                            }
                        }
                    }
                }
            }
        }
        for i in 0..n {
            if !mask[i] {
                t.push((i, i, 1.0));
            } else if let Some(md) = &self.mass_diag {
                t.push((i, i, md[i]));
            }
        }
        CsrMatrix::from_triplets(n, &t)
    }

    pub fn diagonal(&self, n: usize) -> Vec<f64> {
        let mut diag = vec![0.0; n];
        let mut off = 0;
        for k in 0..self.stencil.len() {
            let (_, comps) = self.stencil.term(k);
            let v = &self.v[off..off + comps.len()];
            off += comps.len();
            let (a, b) = (self.a[k], self.b[k]);
            // derivative of v with respect to each distinct vertex of the term
            for (i, c) in comps.iter().enumerate() {
                for vert in [c.head, c.tail] {
                    let seen_before = comps[..i].iter().any(|e| e.head == vert || e.tail == vert);
                    if seen_before {
                        continue;
                    }
                    let mut norm2 = 0.0;
                    let mut vc = 0.0;
                    for (j, e) in comps.iter().enumerate() {
                        let x = if e.head == vert {
                            e.inv_len
                        } else if e.tail == vert {
                            -e.inv_len
                        } else {
                            0.0
                        };
                        norm2 += x * x;
                        vc += v[j] * x;
                    }
                    diag[vert] += a * norm2 + b * vc * vc;
                }
            }
        }
        if let Some(md) = &self.mass_diag {
            for i in 0..n {
                diag[i] += md[i];
            }
        }
        diag
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Diff;

    fn sample() -> Stencil {
        let mut st = Stencil::new();
        st.push(
            1.3,
            &[
                Diff {
                    tail: 0,
                    head: 1,
                    inv_len: 2.0,
                },
                Diff {
                    tail: 0,
                    head: 2,
                    inv_len: 2.0,
                },
            ],
        );
        st.push(
            0.7,
            &[Diff {
                tail: 1,
                head: 3,
                inv_len: 0.5,
            }],
        );
        st.push(
            0.4,
            &[Diff {
                tail: 2,
                head: 3,
                inv_len: 1.0,
            }],
        );
        st
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        let st = sample();
        let mu = [0.2, 0.5, 0.1, 0.3];
        let c = [0.1, -0.2, 0.05, 0.0];
        for p in [1.3, 2.0, 3.7] {
            let f = Functional {
                stencil: &st,
                p,
                eps2: 1e-6,
                mass: Some((&mu, 0.8)),
                linear: Some(&c),
            };
            let u = [0.3, -0.4, 1.1, 0.25];
            let mut g = [0.0; 4];
            let mut ga = [0.0; 4];
            f.gradient(&u, &mut g, &mut ga);
            let h = 1e-6;
            for i in 0..4 {
                let mut up = u;
                let mut um = u;
                up[i] += h;
                um[i] -= h;
                let fd = (f.value(&up) - f.value(&um)) / (2.0 * h);
                assert!(
                    (fd - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()),
                    "p={p} i={i} fd={fd} g={}",
                    g[i]
                );
            }
            let hess = f.hessian(&u);
            let diag = hess.diagonal(4);
            let mask = [true; 4];
            let dense = hess.assemble(&mask);
            let part = [true, false, true, true];
            let sparse = hess.assemble(&part);
            for i in 0..4 {
                let mut e = [0.0; 4];
                e[i] = 1.0;
                let (mut a, mut b) = ([0.0; 4], [0.0; 4]);
                dense.mul_vec(&e, &mut a);
                hess.apply(&e, &mut b, &mask);
                assert!(a
                    .iter()
                    .zip(&b)
                    .all(|(x, y)| (x - y).abs() < 1e-12 * (1.0 + y.abs())));
                sparse.mul_vec(&e, &mut a);
                hess.apply(&e, &mut b, &part);
                if part[i] {
                    assert!(a
                        .iter()
                        .zip(&b)
                        .all(|(x, y)| (x - y).abs() < 1e-12 * (1.0 + y.abs())));
                }
            }
            for i in 0..4 {
                let mut e = [0.0; 4];
                e[i] = 1.0;
                let mut col = [0.0; 4];
                hess.apply(&e, &mut col, &mask);
                assert!((col[i] - diag[i]).abs() < 1e-9 * (1.0 + diag[i].abs()));
                let mut up = u;
                let mut um = u;
                up[i] += h;
                um[i] -= h;
                let mut gp = [0.0; 4];
                let mut gm = [0.0; 4];
                f.gradient(&up, &mut gp, &mut ga);
                f.gradient(&um, &mut gm, &mut ga);
                for j in 0..4 {
                    let fd = (gp[j] - gm[j]) / (2.0 * h);
                    assert!(
                        (fd - col[j]).abs() < 1e-5 * (1.0 + col[j].abs()),
                        "p={p} ({i},{j}) fd={fd} h={}",
                        col[j]
                    );
                }
            }
        }
    }
}
