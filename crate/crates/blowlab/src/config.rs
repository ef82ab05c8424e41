//! TOML run configuration.

use std::path::Path;

use anyhow::{Context, Result};
use blowlab_core::harness::FrameSettings;
use blowlab_core::multiplier::{DampingKind, DampingProfile};
use blowlab_core::pdesolver::{GridSpec, InitialData, SolveOptions, SourceMode, SystemConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DampingConfig {
    #[serde(default = "zero_kind")]
    pub b1: DampingKind,
    #[serde(default = "zero_kind")]
    pub b2: DampingKind,
}

fn zero_kind() -> DampingKind {
    DampingKind::Zero
}

impl Default for DampingConfig {
    fn default() -> Self {
        Self { b1: DampingKind::Zero, b2: DampingKind::Zero }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub h: f64,
    #[serde(default = "one")]
    pub cfl: f64,
    /// Number of refinement levels `h, h/2, ...`; `solve --refine` overrides it.
    #[serde(default = "one_level")]
    pub levels: usize,
    #[serde(default)]
    pub extent: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn one_level() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotConfig {
    /// Time between stored snapshots.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Extra snapshot whenever `max |∂_t|` has grown by this factor.
    #[serde(default)]
    pub growth: Option<f64>,
}

impl Default for SnapshotConfig {
    fn default() -> Self {
        Self { dt: Some(0.1), growth: Some(1.25) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub theta: f64,
    pub adapt_threshold: f64,
    pub growth_limit: f64,
    pub max_halvings: u32,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolveOptions::default();
        Self { theta: o.theta, adapt_threshold: o.adapt_threshold, growth_limit: o.growth_limit, max_halvings: o.max_halvings }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrameConfig {
    pub rtol: f64,
    pub tau_horizon: f64,
    pub c_f: f64,
    pub c_k: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        let s = FrameSettings::default();
        Self { rtol: s.rtol, tau_horizon: s.tau_horizon, c_f: s.c_f, c_k: s.c_k }
    }
}

impl From<FrameConfig> for FrameSettings {
    fn from(c: FrameConfig) -> Self {
        FrameSettings { rtol: c.rtol, tau_horizon: c.tau_horizon, c_f: c.c_f, c_k: c.c_k }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: u32,
    pub p: f64,
    pub q: f64,
    pub eps: f64,
    #[serde(default = "one")]
    pub radius: f64,
    pub horizon: f64,
    #[serde(default = "coupled")]
    pub source: SourceMode,
    #[serde(default)]
    pub damping: DampingConfig,
    #[serde(default = "InitialData::unit_bumps")]
    pub data: InitialData,
    pub grid: GridConfig,
    #[serde(default)]
    pub snapshots: SnapshotConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub frame: FrameConfig,
}

fn coupled() -> SourceMode {
    SourceMode::Coupled
}

/// Build a validated profile from its kind.
pub fn damping_profile(kind: &DampingKind) -> Result<DampingProfile> {
    let p = match kind {
        DampingKind::Zero => DampingProfile::zero(),
        DampingKind::PowerTail { mu, beta } => DampingProfile::power_tail(*mu, *beta)?,
        DampingKind::CompactBump { mu, t_end } => DampingProfile::compact_bump(*mu, *t_end)?,
        DampingKind::Tabulated { grid, values } => DampingProfile::tabulated(grid.clone(), values.clone())?,
    };
    Ok(p)
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("parsing run configuration")?;
        cfg.system()?;
        if cfg.grid.levels == 0 {
            anyhow::bail!("grid.levels must be >= 1");
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn system(&self) -> Result<SystemConfig> {
        let cfg = SystemConfig {
            n: self.n,
            p: self.p,
            q: self.q,
            eps: self.eps,
            b1: damping_profile(&self.damping.b1)?,
            b2: damping_profile(&self.damping.b2)?,
            radius: self.radius,
            data: self.data,
            source: self.source,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn base_grid(&self) -> GridSpec {
        GridSpec { h: self.grid.h, cfl: self.grid.cfl, extent: self.grid.extent }
    }

    /// Grids `h, h/2, ...`, finest last.
    pub fn ladder(&self, levels: usize) -> Vec<GridSpec> {
        self.base_grid().ladder(levels)
    }

    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            theta: self.solver.theta,
            adapt_threshold: self.solver.adapt_threshold,
            growth_limit: self.solver.growth_limit,
            max_halvings: self.solver.max_halvings,
            snapshot_dt: self.snapshots.dt,
            snapshot_growth: self.snapshots.growth,
        }
    }
}
