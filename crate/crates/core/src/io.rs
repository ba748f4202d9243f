//! Declarative inputs (spaces, sets, named function families) and CSV
//! tables.
//!
//! Functions are chosen from a fixed set of families rather than parsed
//! from expressions; per-vertex data that fits no family comes from CSV.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::space::{build_grid, Edge, EnergyModel, Space, VertexSet};

fn one() -> f64 {
    1.0
}

/// A real function of position.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Constant {
        value: f64,
    },
    /// `offset + sum_i coeffs[i] x_i`.
    Affine {
        #[serde(default)]
        offset: f64,
        coeffs: Vec<f64>,
    },
    /// `offset + scale |x_axis|^alpha`.
    Power {
        #[serde(default)]
        axis: usize,
        alpha: f64,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `scale |x - center|^alpha`.
    RadialPower {
        center: Vec<f64>,
        alpha: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `amplitude prod_i sin(pi freqs[i] x_i)`.
    SineProduct {
        freqs: Vec<f64>,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `sin(pi freq x_0) exp(x_1)`, harmonic when `freq = 1/pi`.
    SineExp {
        #[serde(default = "one")]
        freq: f64,
    },
    /// `inside` on the closed ball, `outside` elsewhere.
    BallIndicator {
        center: Vec<f64>,
        radius: f64,
        #[serde(default = "one")]
        inside: f64,
        #[serde(default)]
        outside: f64,
    },
}

impl FunctionSpec {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let pi = std::f64::consts::PI;
        let at = |i: usize| x.get(i).copied().unwrap_or(0.0);
        let dist = |c: &[f64]| {
            x.iter()
                .enumerate()
                .map(|(i, v)| (v - c.get(i).copied().unwrap_or(0.0)).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        match self {
            FunctionSpec::Constant { value } => *value,
            FunctionSpec::Affine { offset, coeffs } => {
                offset
                    + coeffs
                        .iter()
                        .enumerate()
                        .map(|(i, c)| c * at(i))
                        .sum::<f64>()
            }
            FunctionSpec::Power {
                axis,
                alpha,
                scale,
                offset,
            } => offset + scale * at(*axis).abs().powf(*alpha),
            FunctionSpec::RadialPower {
                center,
                alpha,
                scale,
            } => scale * dist(center).powf(*alpha),
            FunctionSpec::SineProduct { freqs, amplitude } => {
                amplitude
                    * freqs
                        .iter()
                        .enumerate()
                        .map(|(i, k)| (pi * k * at(i)).sin())
                        .product::<f64>()
            }
            FunctionSpec::SineExp { freq } => (pi * freq * at(0)).sin() * at(1).exp(),
            FunctionSpec::BallIndicator {
                center,
                radius,
                inside,
                outside,
            } => {
                if dist(center) <= *radius {
                    *inside
                } else {
                    *outside
                }
            }
        }
    }

    /// Values at every vertex; needs coordinates.
    pub fn sample(&self, space: &Space) -> Result<Vec<f64>> {
        (0..space.n_vertices())
            .map(|v| {
                let x = space.point(v).ok_or_else(|| {
                    Error::Config("function families need vertex coordinates".into())
                })?;
                Ok(self.eval(x))
            })
            .collect()
    }
}

/// A vertex set described geometrically or by id.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "region", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionSpec {
    All,
    /// Grid vertices off the bounding box.
    Interior,
    /// `|x - center| <= radius`.
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// `|x - center| >= radius`.
    OutsideBall {
        center: Vec<f64>,
        radius: f64,
    },
    /// `lo <= x <= hi` componentwise.
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Vertices {
        ids: Vec<usize>,
    },
}

impl RegionSpec {
    pub fn build(&self, space: &Space) -> Result<VertexSet> {
        let n = space.n_vertices();
        let coords = |v: usize| {
            space
                .point(v)
                .ok_or_else(|| Error::Config("geometric regions need vertex coordinates".into()))
        };
        let norm = |x: &[f64], c: &[f64]| {
            x.iter()
                .zip(c)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let by = |pred: &dyn Fn(&[f64]) -> bool| -> Result<VertexSet> {
            let mut bits = Vec::with_capacity(n);
            for v in 0..n {
                bits.push(pred(coords(v)?));
            }
            Ok(VertexSet::from_bits(bits))
        };
        match self {
            RegionSpec::All => Ok(space.full_set()),
            RegionSpec::Interior => {
                let g = space
                    .grid()
                    .ok_or_else(|| Error::Config("region 'interior' needs a grid space".into()))?;
                Ok(VertexSet::from_predicate(n, |v| !g.is_on_boundary(v)))
            }
            RegionSpec::Ball { center, radius } => by(&|x| norm(x, center) <= *radius),
            RegionSpec::OutsideBall { center, radius } => by(&|x| norm(x, center) >= *radius),
            RegionSpec::Box { lo, hi } => by(&|x| {
                x.iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(c, (l, h))| l <= c && c <= h)
            }),
            RegionSpec::Vertices { ids } => VertexSet::from_indices(n, ids.iter().copied()),
        }
    }
}

/// A regular grid with a weight family, or a graph read from CSV.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    Grid {
        bounds: Vec<[f64; 2]>,
        h: f64,
        #[serde(default)]
        weight: Option<FunctionSpec>,
        #[serde(default)]
        model: Option<EnergyModel>,
    },
    /// `edges`: columns `src,dst,length`; `vertices`: columns `id,measure`.
    Graph { edges: PathBuf, vertices: PathBuf },
}

impl SpaceSpec {
    /// Builds the space; relative paths are resolved against `base`.
    pub fn build(&self, base: &Path) -> Result<Space> {
        match self {
            SpaceSpec::Grid {
                bounds,
                h,
                weight,
                model,
            } => {
                let b: Vec<(f64, f64)> = bounds.iter().map(|&[lo, hi]| (lo, hi)).collect();
                let s = match weight {
                    Some(w) => build_grid(&b, *h, &|x| w.eval(x))?,
                    None => build_grid(&b, *h, &|_| 1.0)?,
                };
                match model {
                    Some(m) => s.with_model(*m),
                    None => Ok(s),
                }
            }
            SpaceSpec::Graph { edges, vertices } => {
                read_graph(&base.join(edges), &base.join(vertices))
            }
        }
    }

    /// Files the space reads.
    pub fn inputs(&self, base: &Path) -> Vec<PathBuf> {
        match self {
            SpaceSpec::Grid { .. } => Vec::new(),
            SpaceSpec::Graph { edges, vertices } => vec![base.join(edges), base.join(vertices)],
        }
    }
}

#[derive(Deserialize)]
struct EdgeRow {
    src: usize,
    dst: usize,
    length: f64,
}

#[derive(Deserialize)]
struct VertexRow {
    id: usize,
    measure: f64,
}

/// Edge-based graph from an edge list and a vertex table. Vertex ids must
/// be exactly `0..n` in any order.
pub fn read_graph(edges: &Path, vertices: &Path) -> Result<Space> {
    let mut rows: Vec<VertexRow> = csv::Reader::from_path(vertices)?
        .deserialize()
        .collect::<std::result::Result<_, _>>()?;
    rows.sort_by_key(|r| r.id);
    if let Some((k, r)) = rows.iter().enumerate().find(|(k, r)| r.id != *k) {
        return Err(Error::Config(format!(
            "vertex ids must be 0..{}; found {} at position {k}",
            rows.len(),
            r.id
        )));
    }
    let measure = rows.into_iter().map(|r| r.measure).collect();
    let edges = csv::Reader::from_path(edges)?
        .deserialize::<EdgeRow>()
        .map(|r| {
            r.map(|r| Edge {
                a: r.src,
                b: r.dst,
                length: r.length,
            })
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Space::from_parts(measure, edges, None, EnergyModel::EdgeBased, None)
}

#[derive(Deserialize)]
struct ProblemRow {
    id: usize,
    f: f64,
    #[serde(default)]
    psi1: Option<f64>,
    #[serde(default)]
    psi2: Option<f64>,
    in_e: u8,
}

/// Per-vertex problem data: columns `id,f,psi1,psi2,in_e`. Obstacles accept
/// `inf`/`-inf` and may be left empty for no constraint; `in_e` is 0 or 1.
#[derive(Clone, Debug)]
pub struct ProblemTable {
    pub f: Vec<f64>,
    pub psi1: Vec<f64>,
    pub psi2: Vec<f64>,
    pub domain: VertexSet,
}

pub fn read_problem_table(path: &Path, n: usize) -> Result<ProblemTable> {
    let mut f = vec![f64::NAN; n];
    let mut psi1 = vec![f64::NEG_INFINITY; n];
    let mut psi2 = vec![f64::INFINITY; n];
    let mut bits = vec![false; n];
    let mut seen = vec![false; n];
    for row in csv::Reader::from_path(path)?.deserialize::<ProblemRow>() {
        let r = row?;
        if r.id >= n {
            return Err(Error::Config(format!(
                "{}: vertex id {} out of range 0..{n}",
                path.display(),
                r.id
            )));
        }
        if std::mem::replace(&mut seen[r.id], true) {
            return Err(Error::Config(format!(
                "{}: vertex id {} listed twice",
                path.display(),
                r.id
            )));
        }
        f[r.id] = r.f;
        psi1[r.id] = r.psi1.unwrap_or(f64::NEG_INFINITY);
        psi2[r.id] = r.psi2.unwrap_or(f64::INFINITY);
        bits[r.id] = match r.in_e {
            0 => false,
            1 => true,
            x => {
                return Err(Error::Config(format!(
                    "{}: in_e must be 0 or 1, got {x}",
                    path.display()
                )))
            }
        };
    }
    if let Some(v) = seen.iter().position(|s| !s) {
        return Err(Error::Config(format!(
            "{}: no row for vertex {v}",
            path.display()
        )));
    }
    Ok(ProblemTable {
        f,
        psi1,
        psi2,
        domain: VertexSet::from_bits(bits),
    })
}

/// Shortest round-trip decimal form; `inf`, `-inf` and `NaN` literally.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// An in-memory CSV table written in one go.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        File::create(path)?.write_all(&self.to_bytes()?)?;
        Ok(())
    }
}
