//! Snapshot CSV and run-summary JSON.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use blowlab_core::pdesolver::{
    estimate_lifespan, propagation_audit, solve, summarize_levels, LevelResult, LifespanEstimate, Mesh,
    PropagationAudit, RunOutcome, Snapshot, SolveResult,
};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const CONFIG_FILE: &str = "config.toml";
pub const SNAPSHOT_FILE: &str = "snapshots.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Rows `t, r, u, ut, v, vt`; `r` is the signed coordinate on the line.
/// Nodes beyond the outermost nonzero value of a snapshot are omitted.
pub fn write_snapshots<W: Write>(out: W, mesh: &Mesh, snaps: &[Snapshot]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "r", "u", "ut", "v", "vt"])?;
    for s in snaps {
        let reach = (0..mesh.len())
            .filter(|&i| s.u[i] != 0.0 || s.ut[i] != 0.0 || s.v[i] != 0.0 || s.vt[i] != 0.0)
            .map(|i| mesh.radius[i])
            .fold(0.0f64, f64::max);
        for i in 0..mesh.len() {
            if mesh.radius[i] <= reach {
                w.serialize((s.t, mesh.nodes[i], s.u[i], s.ut[i], s.v[i], s.vt[i]))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_snapshots`] on the mesh the snapshots were written from.
pub fn read_snapshots<R: std::io::Read>(input: R, mesh: &Mesh) -> Result<Vec<Snapshot>> {
    let mut rd = csv::Reader::from_reader(input);
    let mut snaps: Vec<Snapshot> = Vec::new();
    let len = mesh.len();
    let x0 = mesh.nodes[0];
    for rec in rd.deserialize() {
        let (t, r, u, ut, v, vt): (f64, f64, f64, f64, f64, f64) = rec?;
        if snaps.last().map(|s| s.t) != Some(t) {
            if snaps.last().is_some_and(|s| t < s.t) {
                bail!("snapshot times must increase (t={t})");
            }
            snaps.push(Snapshot { t, u: vec![0.0; len], ut: vec![0.0; len], v: vec![0.0; len], vt: vec![0.0; len] });
        }
        let k = ((r - x0) / mesh.h).round();
        if !(k >= 0.0 && (k as usize) < len) || (mesh.nodes[k as usize] - r).abs() > 1e-6 * mesh.h {
            bail!("node r={r} at t={t} is not on the mesh");
        }
        let (k, s) = (k as usize, snaps.last_mut().unwrap());
        s.u[k] = u;
        s.ut[k] = ut;
        s.v[k] = v;
        s.vt[k] = vt;
    }
    Ok(snaps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub n: u32,
    pub p: f64,
    pub q: f64,
    pub eps: f64,
    pub horizon: f64,
    /// The level whose snapshots were written (the finest).
    pub h: f64,
    pub dt: f64,
    pub outcome: RunOutcome,
    /// Refinement table, coarsest first.
    pub levels: Vec<LevelResult>,
    /// Present with three or more levels.
    pub lifespan: Option<LifespanEstimate>,
    pub propagation: PropagationAudit,
    pub snapshots: usize,
}

pub struct RunArtifacts {
    pub summary: RunSummary,
    pub finest: SolveResult,
}

/// Solve on `levels` refinement levels and keep the finest one in full.
pub fn run_ladder(cfg: &RunConfig, levels: usize) -> Result<RunArtifacts> {
    if levels == 0 {
        bail!("need at least one refinement level");
    }
    let sys = cfg.system()?;
    let grids = cfg.ladder(levels);
    let opts = cfg.options();
    let mut table = Vec::with_capacity(levels);
    let mut finest = None;
    for (k, g) in grids.iter().enumerate() {
        let res = solve(&sys, g, cfg.horizon, &opts)?;
        table.push(LevelResult { h: g.h, dt: g.dt(), t_estimate: res.outcome.t_blowup, reason: res.outcome.reason });
        if k + 1 == levels {
            finest = Some(res);
        }
    }
    let finest = finest.unwrap();
    let lifespan = (levels >= 3).then(|| summarize_levels(table.clone(), cfg.horizon));
    let last = finest.snapshots.last().expect("solver stores the final state");
    let summary = RunSummary {
        n: cfg.n,
        p: cfg.p,
        q: cfg.q,
        eps: cfg.eps,
        horizon: cfg.horizon,
        h: grids[levels - 1].h,
        dt: finest.dt0,
        outcome: finest.outcome,
        levels: table,
        lifespan,
        propagation: propagation_audit(&finest.mesh, last, cfg.radius),
        snapshots: finest.snapshots.len(),
    };
    Ok(RunArtifacts { summary, finest })
}

/// Lifespan estimate alone, without keeping snapshots.
pub fn lifespan_only(cfg: &RunConfig, levels: usize) -> Result<LifespanEstimate> {
    Ok(estimate_lifespan(&cfg.system()?, &cfg.ladder(levels), cfg.horizon, &cfg.options())?)
}

/// Write `config.toml`, `snapshots.csv` and `summary.json` into `dir`.
pub fn write_run(dir: &Path, cfg: &RunConfig, art: &RunArtifacts) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut levelled = cfg.clone();
    levelled.grid.levels = art.summary.levels.len();
    std::fs::write(dir.join(CONFIG_FILE), levelled.to_toml()?)?;
    let f = BufWriter::new(File::create(dir.join(SNAPSHOT_FILE))?);
    write_snapshots(f, &art.finest.mesh, &art.finest.snapshots)?;
    write_json(&dir.join(SUMMARY_FILE), &art.summary)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(f, value)?;
    Ok(())
}

pub fn read_summary(dir: &Path) -> Result<RunSummary> {
    let f = File::open(dir.join(SUMMARY_FILE)).with_context(|| format!("opening {}", dir.display()))?;
    Ok(serde_json::from_reader(f)?)
}
