use std::path::{Path, PathBuf};

use finepot::finetop::SwissCheeseSpec;
use finepot::io::{FunctionSpec, RegionSpec, SpaceSpec};
use finepot::solver::SolverConfig;
use finepot::{Error, Result};
use serde::Deserialize;

/// One TOML file; each command reads the sections it needs.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    #[serde(default)]
    pub solver: SolverConfig,
    pub space: Option<SpaceSpec>,
    pub problem: Option<ProblemSpec>,
    pub capacity: Option<CapacitySpec>,
    pub mazya: Option<MazyaSpec>,
    pub wiener: Option<WienerSpec>,
    pub swiss: Option<SwissCheeseSpec>,
    pub swiss_report: Option<SwissReportSpec>,
    pub fineint: Option<FineintSpec>,
    pub transmission: Option<TransmissionSpec>,
    pub oned: Option<OnedSpec>,
    pub suite: Option<SuiteSpec>,
}

fn interior() -> RegionSpec {
    RegionSpec::Interior
}

fn all() -> RegionSpec {
    RegionSpec::All
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub p: f64,
    #[serde(default = "interior")]
    pub domain: RegionSpec,
    pub f: Option<FunctionSpec>,
    pub psi1: Option<FunctionSpec>,
    pub psi2: Option<FunctionSpec>,
    /// Per-vertex `id,f,psi1,psi2,in_e`; replaces `domain`, `f` and the obstacles.
    pub table: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityKindSpec {
    Sobolev,
    Variational,
    Condenser,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacitySpec {
    pub kind: CapacityKindSpec,
    pub p: f64,
    /// The set, or the plate held at 1 for a condenser.
    pub a: RegionSpec,
    /// Ambient set for the variational capacity.
    #[serde(default = "all")]
    pub e: RegionSpec,
    /// Grounded plate of a condenser.
    pub a0: Option<RegionSpec>,
    #[serde(default = "all")]
    pub omega: RegionSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MazyaSpec {
    pub p: f64,
    pub e: RegionSpec,
    /// Evaluated on `E`, set to zero elsewhere.
    pub u: FunctionSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WienerSpec {
    pub p: f64,
    pub e: RegionSpec,
    pub points: Vec<Vec<f64>>,
    pub j_min: u32,
    pub j_max: u32,
}

fn twenty() -> u32 {
    20
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwissReportSpec {
    /// Grid spacing for the lattice count; `r_kmax / 4` when absent.
    pub h: Option<f64>,
    #[serde(default = "twenty")]
    pub j_report: u32,
}

fn eight() -> usize {
    8
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FineintSpec {
    pub points: Vec<Vec<f64>>,
    pub j_min: u32,
    pub j_max: u32,
    /// Cells per radius on the local grids of the Swiss-cheese variant.
    #[serde(default = "eight")]
    pub m: usize,
    pub threshold: Option<f64>,
    pub divergence_trigger: Option<f64>,
    /// Classify on `[space]` with this set instead of the `[swiss]` set.
    pub e: Option<RegionSpec>,
    pub p: Option<f64>,
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmissionSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub h: f64,
    /// Line density `w(x_1)`, evaluated at `[x_1]`.
    pub weight: FunctionSpec,
    pub data: FunctionSpec,
    #[serde(default = "two")]
    pub p: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnedSpec {
    pub interval: [f64; 2],
    pub h: f64,
    /// Density of the absolutely continuous part, evaluated at `[x]`.
    pub weight: Option<FunctionSpec>,
    /// Per-cell densities, one column `w`; replaces `weight`.
    pub cells: Option<PathBuf>,
    #[serde(default)]
    pub atoms: Vec<[f64; 2]>,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default)]
    pub f0: f64,
    #[serde(default = "one")]
    pub f1: f64,
    /// Runs the `p -> 1` demonstration with these exponents.
    #[serde(default)]
    pub p_to_one: Vec<f64>,
    /// Random instances of the Poincare battery; 0 skips it.
    #[serde(default)]
    pub battery: usize,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSpec {
    /// Criteria to run; all when empty.
    #[serde(default)]
    pub criteria: Vec<u8>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.solver.validate()?;
        Ok(cfg)
    }
}

pub fn need<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T> {
    section
        .as_ref()
        .ok_or_else(|| Error::Config(format!("missing [{name}] section")))
}
