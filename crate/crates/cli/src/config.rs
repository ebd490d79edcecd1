use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Deserialize;

use rcquad::events::CrossingEvent;
use rcquad::lattice::{build_induced_region, build_region, Lattice, Rect, Region};
use rcquad::measure::{BcSpec, ModelParams, NamedBc};
use rcquad::sampler::{Dynamics, Schedule, SplitOptions};
use rcquad::strip::{StripSpec, DEFAULT_ALPHAS};

/// One experiment record. Each subcommand reads its own section.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub params: Option<ModelParams>,
    pub schedule: Option<Schedule>,
    pub split: Option<SplitOptions>,
    pub exact_check: Option<ExactCheckConfig>,
    pub estimate: Option<EstimateConfig>,
    pub snapshot: Option<SnapshotConfig>,
    pub classify: Option<ClassifyConfig>,
    pub pc_scan: Option<PcScanConfig>,
    pub densities: Option<DensitiesConfig>,
    pub box_crossing: Option<BoxCrossingConfig>,
    pub one_arm: Option<OneArmConfig>,
    pub pushing_probe: Option<PushingProbeConfig>,
}

pub const DEFAULT_SWEEPS: u64 = 2000;

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let Some(name) = &cfg.lattice {
            Lattice::by_name(name)?;
        }
        Ok(cfg)
    }

    pub fn lattice(&self) -> anyhow::Result<Lattice> {
        Ok(Lattice::by_name(self.lattice.as_deref().unwrap_or("square"))?)
    }

    pub fn params(&self) -> anyhow::Result<ModelParams> {
        let Some(p) = self.params else { bail!("missing [params] section") };
        p.validate()?;
        Ok(p)
    }

    /// The configured schedule with its seed replaced by the run seed.
    pub fn schedule(&self, seed: u64) -> anyhow::Result<Schedule> {
        let mut s = self.schedule.clone().unwrap_or_else(|| Schedule::new(DEFAULT_SWEEPS, seed));
        s.seed = seed;
        s.validate()?;
        Ok(s)
    }

    pub fn split(&self, seed: u64) -> anyhow::Result<SplitOptions> {
        let s = self.split.clone().unwrap_or_default().with_seed(seed);
        s.validate()?;
        Ok(s)
    }

    pub fn section<'a, T>(&self, field: &'a Option<T>, name: &str) -> anyhow::Result<&'a T> {
        field.as_ref().with_context(|| format!("missing [{name}] section"))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeRule {
    /// Every lattice edge touching the rectangle.
    #[default]
    Touching,
    /// Edges with both ends in the rectangle.
    Induced,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub a: i32,
    pub b: i32,
    pub c: i32,
    pub d: i32,
    #[serde(default)]
    pub rule: EdgeRule,
}

impl RegionConfig {
    pub fn build(&self, lattice: &Lattice) -> anyhow::Result<Region> {
        let rect = Rect::new(self.a, self.b, self.c, self.d)?;
        Ok(match self.rule {
            EdgeRule::Touching => build_region(lattice, rect)?,
            EdgeRule::Induced => build_induced_region(lattice, rect)?,
        })
    }
}

fn free_bc() -> BcSpec {
    BcSpec::Named(NamedBc::Free)
}

fn default_max_edges() -> usize {
    16
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactCheckConfig {
    #[serde(default = "default_max_edges")]
    pub max_edges: usize,
    /// Run on an empty corpus.
    #[serde(default)]
    pub empty: bool,
    pub p: Option<Vec<f64>>,
    pub q: Option<Vec<f64>>,
    /// Test mode: reverse every FKG margin.
    #[serde(default)]
    pub fkg_sign_flip: bool,
}

impl Default for ExactCheckConfig {
    fn default() -> ExactCheckConfig {
        ExactCheckConfig { max_edges: default_max_edges(), empty: false, p: None, q: None, fkg_sign_flip: false }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub region: Option<RegionConfig>,
    /// Use the truncated strip measure instead of `region` and `bc`.
    pub strip: Option<StripSpec>,
    #[serde(default = "free_bc")]
    pub bc: BcSpec,
    pub events: Vec<CrossingEvent>,
    #[serde(default)]
    pub dynamics: Dynamics,
    /// Fall back to multilevel splitting when an event is rare.
    #[serde(default)]
    pub splitting: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnapshotState {
    #[default]
    Sample,
    Open,
    Closed,
}

fn default_scale() -> f64 {
    16.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotConfig {
    pub region: RegionConfig,
    #[serde(default = "free_bc")]
    pub bc: BcSpec,
    #[serde(default)]
    pub state: SnapshotState,
    #[serde(default)]
    pub dynamics: Dynamics,
    /// Highlight a witness of this event when it occurs.
    pub event: Option<CrossingEvent>,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_grid() -> Vec<i32> {
    vec![4, 8, 16, 32]
}

fn scan_grid() -> Vec<i32> {
    vec![2, 4, 8, 16]
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyConfig {
    #[serde(default = "default_grid")]
    pub grid: Vec<i32>,
}

fn default_tolerance() -> f64 {
    0.02
}
fn default_max_iter() -> u32 {
    12
}
fn default_lo() -> f64 {
    0.2
}
fn default_hi() -> f64 {
    0.95
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PcScanConfig {
    pub q: Vec<f64>,
    #[serde(default = "scan_grid")]
    pub grid: Vec<i32>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: u32,
    #[serde(default = "default_lo")]
    pub lo: f64,
    #[serde(default = "default_hi")]
    pub hi: f64,
}

fn default_alphas() -> Vec<u32> {
    DEFAULT_ALPHAS.to_vec()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitiesConfig {
    pub n: Vec<i32>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<u32>,
    /// Compare densities at `n` and `lambda n` whenever both are present.
    pub power_lambda: Option<u32>,
    /// Report the sandwich constant between `p_n`, `q_n` and `p_{3n}`.
    pub relation_lambda: Option<f64>,
}

fn default_rho() -> Vec<i32> {
    vec![1]
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxCrossingConfig {
    #[serde(default = "default_rho")]
    pub rho: Vec<i32>,
    #[serde(default = "default_grid")]
    pub grid: Vec<i32>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneArmConfig {
    #[serde(default = "default_grid")]
    pub grid: Vec<i32>,
}

fn default_push_n() -> i32 {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PushingProbeConfig {
    #[serde(default = "default_push_n")]
    pub n: i32,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<u32>,
}
