//! Small sparse linear algebra kit: CSR matrices, preconditioned conjugate
//! gradients, and inverse iteration for the lowest generalized eigenpair.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from unsorted triplets; duplicates are summed in insertion order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            rows[i].push((j, v));
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals = Vec::with_capacity(triplets.len());
        for row in &mut rows {
            row.sort_by_key(|&(j, _)| j);
            let mut last: Option<usize> = None;
            for &(j, v) in row.iter() {
                if last == Some(j) {
                    *vals.last_mut().expect("nonempty") += v;
                } else {
                    cols.push(j);
                    vals.push(v);
                    last = Some(j);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[i] = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .find(|&k| self.cols[k] == i)
                    .map_or(0.0, |k| self.vals[k])
            })
            .collect()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let get = |i: usize, j: usize| {
            (self.row_ptr[i]..self.row_ptr[i + 1])
                .find(|&k| self.cols[k] == j)
                .map_or(0.0, |k| self.vals[k])
        };
        (0..self.n).all(|i| {
            (self.row_ptr[i]..self.row_ptr[i + 1])
                .all(|k| (self.vals[k] - get(self.cols[k], i)).abs() <= tol)
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    /// Stopped because the operator showed nonpositive curvature.
    pub hit_nonpositive_curvature: bool,
}

/// Jacobi-preconditioned CG on `A x = b` starting from the `x` passed in.
/// Stops when `||r|| <= rtol ||b||`, on nonpositive curvature, or after
/// `max_iter` steps.
pub fn pcg(
    apply: impl Fn(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    rtol: f64,
    max_iter: usize,
) -> CgOutcome {
    let inv_d: Vec<f64> = diag
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    pcg_with(
        apply,
        |r, z| {
            for i in 0..r.len() {
                z[i] = r[i] * inv_d[i];
            }
        },
        b,
        x,
        rtol,
        max_iter,
    )
}

/// CG with an arbitrary symmetric positive definite preconditioner
/// `z = M^-1 r`.
pub fn pcg_with(
    apply: impl Fn(&[f64], &mut [f64]),
    precond: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    rtol: f64,
    max_iter: usize,
) -> CgOutcome {
    let n = b.len();
    let mut r = vec![0.0; n];
    let mut ap = vec![0.0; n];
    apply(x, &mut ap);
    for i in 0..n {
        r[i] = b[i] - ap[i];
    }
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
            hit_nonpositive_curvature: false,
        };
    }
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res = dot(&r, &r).sqrt() / b_norm;
    let mut it = 0;
    while it < max_iter && res > rtol {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return CgOutcome {
                iterations: it,
                relative_residual: res,
                hit_nonpositive_curvature: true,
            };
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = dot(&r, &r).sqrt() / b_norm;
        it += 1;
    }
    CgOutcome {
        iterations: it,
        relative_residual: res,
        hit_nonpositive_curvature: false,
    }
}

/// Zero-fill incomplete Cholesky factor `L` of a symmetric matrix, stored
/// row-wise on the lower-triangular pattern of `A`. Pivots that would break
/// down are replaced by the diagonal entry of `A`.
#[derive(Clone, Debug)]
pub struct IncompleteCholesky {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    /// Transposed pattern for the backward sweep.
    t_ptr: Vec<usize>,
    t_rows: Vec<usize>,
    t_idx: Vec<usize>,
}

impl IncompleteCholesky {
    pub fn new(a: &CsrMatrix) -> Self {
        let n = a.n;
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        for i in 0..n {
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                if a.cols[k] <= i {
                    cols.push(a.cols[k]);
                    vals.push(a.vals[k]);
                }
            }
            // ensure the diagonal is present and last
            if cols.len() == row_ptr[i] || *cols.last().expect("nonempty") != i {
                cols.push(i);
                vals.push(0.0);
            }
            row_ptr.push(cols.len());
        }
        for i in 0..n {
            let (lo, hi) = (row_ptr[i], row_ptr[i + 1]);
            for k in lo..hi {
                let j = cols[k];
                // sparse dot of rows i and j over columns < j
                let (mut p, mut q) = (lo, row_ptr[j]);
                let (pe, qe) = (k, row_ptr[j + 1] - 1);
                let mut s = 0.0;
                while p < pe && q < qe {
                    match cols[p].cmp(&cols[q]) {
                        std::cmp::Ordering::Less => p += 1,
                        std::cmp::Ordering::Greater => q += 1,
                        std::cmp::Ordering::Equal => {
                            s += vals[p] * vals[q];
                            p += 1;
                            q += 1;
                        }
                    }
                }
                if j < i {
                    vals[k] = (vals[k] - s) / vals[row_ptr[j + 1] - 1];
                } else {
                    let orig = vals[k];
                    let piv = orig - s;
                    vals[k] = if piv > 1e-12 * orig.abs() && piv > 0.0 {
                        piv.sqrt()
                    } else if orig > 0.0 {
                        orig.sqrt()
                    } else {
                        1.0
                    };
                }
            }
        }
        let mut count = vec![0usize; n + 1];
        for &c in &cols {
            count[c + 1] += 1;
        }
        for i in 0..n {
            count[i + 1] += count[i];
        }
        let t_ptr = count.clone();
        let mut fill = count;
        let mut t_rows = vec![0; cols.len()];
        let mut t_idx = vec![0; cols.len()];
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                let c = cols[k];
                t_rows[fill[c]] = i;
                t_idx[fill[c]] = k;
                fill[c] += 1;
            }
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
            t_ptr,
            t_rows,
            t_idx,
        }
    }

    /// `z = (L L^T)^-1 r`.
    pub fn solve(&self, r: &[f64], z: &mut [f64]) {
        for i in 0..self.n {
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut s = r[i];
            for k in lo..hi - 1 {
                s -= self.vals[k] * z[self.cols[k]];
            }
            z[i] = s / self.vals[hi - 1];
        }
        for i in (0..self.n).rev() {
            let mut s = z[i];
            let mut diag = 1.0;
            for t in self.t_ptr[i]..self.t_ptr[i + 1] {
                let (row, k) = (self.t_rows[t], self.t_idx[t]);
                if row == i {
                    diag = self.vals[k];
                } else {
                    s -= self.vals[k] * z[row];
                }
            }
            z[i] = s / diag;
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
}

/// Smallest eigenpair of `K x = lambda M x` with `K` symmetric positive
/// definite and `M` diagonal nonnegative, by inverse iteration.
pub fn lowest_generalized_eigen(
    apply_k: impl Fn(&[f64], &mut [f64]),
    k_diag: &[f64],
    m_diag: &[f64],
    tol: f64,
    max_iter: usize,
) -> EigenPair {
    let n = k_diag.len();
    let m_norm = |x: &[f64]| {
        x.iter()
            .zip(m_diag)
            .map(|(a, m)| m * a * a)
            .sum::<f64>()
            .sqrt()
    };
    // smooth positive start, biased toward heavy vertices
    let mut x: Vec<f64> = m_diag
        .iter()
        .map(|&m| if m > 0.0 { 1.0 } else { 0.0 })
        .collect();
    let s = m_norm(&x);
    x.iter_mut().for_each(|v| *v /= s.max(f64::MIN_POSITIVE));
    let mut kx = vec![0.0; n];
    let mut lambda = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let rhs: Vec<f64> = x.iter().zip(m_diag).map(|(a, m)| a * m).collect();
        let mut y = x.clone();
        pcg(&apply_k, k_diag, &rhs, &mut y, 1e-13, 20 * n + 100);
        let s = m_norm(&y);
        if s == 0.0 {
            break;
        }
        y.iter_mut().for_each(|v| *v /= s);
        apply_k(&y, &mut kx);
        let new_lambda = dot(&y, &kx);
        x = y;
        let done = (lambda - new_lambda).abs() <= tol * new_lambda.abs();
        lambda = new_lambda;
        if done {
            break;
        }
    }
    EigenPair {
        value: lambda,
        vector: x,
        iterations,
    }
}
