//! Parallel ε-sweeps built from a run configuration.

use anyhow::Result;
use blowlab_core::harness::{assemble, run_point, Engine, PdeSettings, SweepPlan, SweepTable};
use rayon::prelude::*;

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    Frame,
    Pde,
}

impl std::str::FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "frame" => Ok(EngineKind::Frame),
            "pde" => Ok(EngineKind::Pde),
            other => Err(format!("unknown engine `{other}` (expected frame or pde)")),
        }
    }
}

/// Engine settings taken from the configuration; the PDE engine needs at
/// least three refinement levels.
pub fn engine(cfg: &RunConfig, kind: EngineKind) -> Result<Engine> {
    Ok(match kind {
        EngineKind::Frame => Engine::Frame(cfg.frame.into()),
        EngineKind::Pde => Engine::Pde(PdeSettings {
            base: cfg.system()?,
            grid: cfg.base_grid(),
            levels: cfg.grid.levels.max(3),
            horizon: cfg.horizon,
            options: cfg.options(),
        }),
    })
}

pub fn plan(cfg: &RunConfig, kind: EngineKind, eps_from: f64, eps_to: f64, points: usize, allow_large_eps: bool) -> Result<SweepPlan> {
    if points < 2 || !(eps_from > 0.0 && eps_to > 0.0) {
        anyhow::bail!("need >= 2 points and positive eps bounds");
    }
    let ratio = (eps_to / eps_from).powf(1.0 / (points - 1) as f64);
    let eps = (0..points).map(|k| eps_from * ratio.powi(k as i32)).collect();
    let plan = SweepPlan { n: cfg.n, p: cfg.p, q: cfg.q, eps, engine: engine(cfg, kind)?, allow_large_eps };
    plan.validate()?;
    Ok(plan)
}

/// Per-ε runs in parallel, reduced in plan order.
pub fn parallel_sweep(plan: &SweepPlan) -> Result<SweepTable> {
    plan.validate()?;
    let points = plan.eps.par_iter().map(|&e| run_point(plan, e)).collect::<Result<Vec<_>, _>>()?;
    Ok(assemble(plan, points)?)
}
