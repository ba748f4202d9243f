//! Energy stencils.
//!
//! Every energy in the crate has the form `sum_k w_k * |v_k|^p` where `v_k`
//! is a short vector of scaled differences `(u[head] - u[tail]) / len`.
//! Edge-based energies have one component per term, forward-difference grid
//! energies have one term per vertex with one component per axis.

/// One scaled difference `(u[head] - u[tail]) * inv_len`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diff {
    pub tail: usize,
    pub head: usize,
    pub inv_len: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Stencil {
    weights: Vec<f64>,
    ptr: Vec<usize>,
    comps: Vec<Diff>,
}

impl Stencil {
    pub fn new() -> Self {
        Self {
            weights: Vec::new(),
            ptr: vec![0],
            comps: Vec::new(),
        }
    }

    /// Adds a term; terms with zero weight or no components are dropped.
    pub fn push(&mut self, weight: f64, comps: &[Diff]) {
        if weight == 0.0 || comps.is_empty() {
            return;
        }
        self.weights.push(weight);
        self.comps.extend_from_slice(comps);
        self.ptr.push(self.comps.len());
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn term(&self, k: usize) -> (f64, &[Diff]) {
        (self.weights[k], &self.comps[self.ptr[k]..self.ptr[k + 1]])
    }

    pub fn terms(&self) -> impl Iterator<Item = (f64, &[Diff])> + '_ {
        (0..self.len()).map(move |k| self.term(k))
    }

    /// Keeps the terms for which `keep` returns true.
    pub fn filter(&self, mut keep: impl FnMut(f64, &[Diff]) -> bool) -> Stencil {
        let mut out = Stencil::new();
        for (w, c) in self.terms() {
            if keep(w, c) {
                out.push(w, c);
            }
        }
        out
    }

    pub fn extend(&mut self, other: &Stencil) {
        for (w, c) in other.terms() {
            self.push(w, c);
        }
    }

    /// Squared norm of the difference vector of one term.
    #[inline]
    pub fn norm_sq(comps: &[Diff], u: &[f64]) -> f64 {
        comps
            .iter()
            .map(|d| {
                let v = (u[d.head] - u[d.tail]) * d.inv_len;
                v * v
            })
            .sum()
    }

    /// `sum_k w_k |v_k|^p`, evaluated without regularization.
    pub fn energy(&self, u: &[f64], p: f64) -> f64 {
        self.terms().fold(0.0, |acc, (w, c)| {
            acc + w * pow_half(Self::norm_sq(c, u), p)
        })
    }

    /// Largest `|v_k|` over all terms.
    pub fn max_slope(&self, u: &[f64]) -> f64 {
        self.terms()
            .map(|(_, c)| Self::norm_sq(c, u).sqrt())
            .fold(0.0, f64::max)
    }

    pub fn min_length(&self) -> f64 {
        self.comps
            .iter()
            .map(|d| 1.0 / d.inv_len)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `s^(p/2)` with the common exponents done exactly.
#[inline]
pub fn pow_half(s: f64, p: f64) -> f64 {
    if p == 2.0 {
        s
    } else if p == 1.0 {
        s.sqrt()
    } else if s == 0.0 {
        0.0
    } else {
        s.powf(0.5 * p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_component_term() {
        let mut st = Stencil::new();
        st.push(
            2.0,
            &[
                Diff {
                    tail: 0,
                    head: 1,
                    inv_len: 1.0,
                },
                Diff {
                    tail: 0,
                    head: 2,
                    inv_len: 1.0,
                },
            ],
        );
        st.push(
            0.0,
            &[Diff {
                tail: 0,
                head: 1,
                inv_len: 1.0,
            }],
        );
        assert_eq!(st.len(), 1);
        let u = [0.0, 3.0, 4.0];
        assert_eq!(st.energy(&u, 2.0), 50.0);
        assert!((st.energy(&u, 1.0) - 10.0).abs() < 1e-15);
        assert!((st.energy(&u, 3.0) - 250.0).abs() < 1e-10);
    }
}
