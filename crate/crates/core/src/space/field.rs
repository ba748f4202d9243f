use std::ops::Deref;

use crate::error::{Error, Result};

/// Membership bitmap over the vertices of a space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VertexSet {
    bits: Vec<bool>,
}

impl VertexSet {
    pub fn empty(n: usize) -> Self {
        Self {
            bits: vec![false; n],
        }
    }

    pub fn full(n: usize) -> Self {
        Self {
            bits: vec![true; n],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn from_indices(n: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut bits = vec![false; n];
        for i in indices {
            if i >= n {
                return Err(Error::NotSubset(format!(
                    "vertex {i} is outside a space of {n} vertices"
                )));
            }
            bits[i] = true;
        }
        Ok(Self { bits })
    }

    pub fn from_predicate(n: usize, mut pred: impl FnMut(usize) -> bool) -> Self {
        Self {
            bits: (0..n).map(&mut pred).collect(),
        }
    }

    /// Size of the ambient vertex set.
    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    pub fn len(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        self.bits[v]
    }

    pub fn insert(&mut self, v: usize) {
        self.bits[v] = true;
    }

    pub fn remove(&mut self, v: usize) {
        self.bits[v] = false;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a && !b)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !(a && b))
    }

    fn zip(&self, other: &Self, op: impl Fn(bool, bool) -> bool) -> Self {
        assert_eq!(
            self.bits.len(),
            other.bits.len(),
            "vertex sets over different spaces"
        );
        Self {
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        }
    }
}

/// Finite per-vertex values.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { values })
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self { values: vec![c; n] }
    }

    pub fn zeros(n: usize) -> Self {
        Self::constant(n, 0.0)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.values.iter().map(|&v| f(v)).collect())
    }

    /// Sup-norm distance to another field.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Deref for ScalarField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.values
    }
}

/// Per-vertex extended reals; `-inf`/`+inf` mean "no constraint".
#[derive(Clone, Debug, PartialEq)]
pub struct ObstacleField {
    values: Vec<f64>,
}

impl ObstacleField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { values })
    }

    pub fn lower_free(n: usize) -> Self {
        Self {
            values: vec![f64::NEG_INFINITY; n],
        }
    }

    pub fn upper_free(n: usize) -> Self {
        Self {
            values: vec![f64::INFINITY; n],
        }
    }

    pub fn from_field(f: &ScalarField) -> Self {
        Self {
            values: f.values().to_vec(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.values.iter().map(|&v| f(v)).collect())
    }
}

impl Deref for ObstacleField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradientMode {
    PerEdge,
    PerVertex,
}

/// Nonnegative gradient magnitudes on the edges or vertices that the
/// restriction keeps. Ids absent from `entries` carry no gradient at all.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    pub mode: GradientMode,
    pub entries: Vec<(usize, f64)>,
}

impl GradientField {
    pub fn get(&self, id: usize) -> Option<f64> {
        self.entries
            .binary_search_by_key(&id, |&(i, _)| i)
            .ok()
            .map(|k| self.entries[k].1)
    }

    pub fn max(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, &(_, g)| m.max(g))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&(_, g)| g == 0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
