//! Functional audits of a stored run.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use blowlab_core::functionals::{
    audit_frame, audit_lower_bounds, compute_fg, AuditReport, FrameAudit, FrameStatus, FunctionalRecorder,
    FunctionalTrace, DEFAULT_DELTA,
};
use blowlab_core::pdesolver::{build_mesh, solve_observed, GridSpec, Mesh, Snapshot, SolveOptions, SystemConfig};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::io::{read_snapshots, read_summary, CONFIG_FILE, SNAPSHOT_FILE};

pub const AUDIT_FILE: &str = "audit.json";
pub const TRACES_FILE: &str = "traces.csv";
/// Bounds are audited up to this fraction of the observed blow-up time.
pub const AUDIT_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAudit {
    pub t_blowup: Option<f64>,
    pub bounds: AuditReport,
    /// `None` when the frame could not be evaluated (too few samples).
    pub frame: Option<FrameAudit>,
    pub frame_error: Option<String>,
    pub pass: bool,
}

/// Audit a trace, windowed at `AUDIT_FRACTION · t_blowup` when blow-up was seen.
pub fn audit_trace(trace: &FunctionalTrace, cfg: &SystemConfig, t_blowup: Option<f64>) -> RunAudit {
    let until = t_blowup.map(|t| AUDIT_FRACTION * t);
    let bounds = audit_lower_bounds(trace, cfg, until, DEFAULT_DELTA);
    let (frame, frame_error) = match audit_frame(trace, cfg, until) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let frame_ok = frame.as_ref().is_some_and(|f| f.status != FrameStatus::Fail);
    RunAudit { t_blowup, pass: bounds.pass && frame_ok, bounds, frame, frame_error }
}

/// The finest mesh of the configured ladder.
pub fn finest_mesh(cfg: &RunConfig) -> Result<Mesh> {
    let finest = *cfg.ladder(cfg.grid.levels).last().unwrap();
    Ok(build_mesh(&cfg.system()?, &finest, cfg.horizon)?)
}

pub fn audit_snapshots(cfg: &RunConfig, mesh: &Mesh, snaps: &[Snapshot], t_blowup: Option<f64>) -> Result<(FunctionalTrace, RunAudit)> {
    let sys = cfg.system()?;
    if snaps.len() < 2 {
        bail!("need at least two snapshots, found {}", snaps.len());
    }
    let trace = compute_fg(&sys, mesh, snaps)?;
    let audit = audit_trace(&trace, &sys, t_blowup);
    Ok((trace, audit))
}

/// Solve once, recording the functionals at every accepted step.
pub fn record_run(cfg: &SystemConfig, grid: &GridSpec, horizon: f64, opts: &SolveOptions) -> Result<(Option<f64>, FunctionalTrace)> {
    let mesh = build_mesh(cfg, grid, horizon)?;
    let mut rec = FunctionalRecorder::new(cfg, &mesh)?;
    let opts = SolveOptions { snapshot_dt: None, snapshot_growth: None, ..*opts };
    let res = solve_observed(cfg, grid, horizon, &opts, |_, s, _| rec.observe(s))?;
    Ok((res.outcome.t_blowup, rec.finish()?))
}

/// Read a run directory written by `solve`, write `audit.json` and `traces.csv`.
pub fn audit_run_dir(dir: &Path) -> Result<RunAudit> {
    let cfg = RunConfig::load(&dir.join(CONFIG_FILE))?;
    let summary = read_summary(dir)?;
    let f = File::open(dir.join(SNAPSHOT_FILE)).with_context(|| format!("opening snapshots in {}", dir.display()))?;
    let mesh = finest_mesh(&cfg)?;
    let snaps = read_snapshots(BufReader::new(f), &mesh)?;
    let (trace, audit) = audit_snapshots(&cfg, &mesh, &snaps, summary.outcome.t_blowup)?;
    crate::io::write_json(&dir.join(AUDIT_FILE), &audit)?;
    write_traces(BufWriter::new(File::create(dir.join(TRACES_FILE))?), &trace, &audit)?;
    Ok(audit)
}

/// Columns `t, U1, V1, F, G` and one margin column per bound; margins are
/// blank for samples outside the audit window.
pub fn write_traces<W: Write>(out: W, trace: &FunctionalTrace, audit: &RunAudit) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![String::from("t"), "U1".into(), "V1".into(), "F".into(), "G".into()];
    header.extend(audit.bounds.bounds.iter().map(|b| format!("margin_{}", b.name)));
    w.write_record(&header)?;
    for i in 0..trace.len() {
        let t = trace.times[i];
        let mut row = vec![t.to_string(), trace.u1[i].to_string(), trace.v1[i].to_string(), trace.f[i].to_string(), trace.g[i].to_string()];
        for b in &audit.bounds.bounds {
            let m = b.times.iter().position(|s| *s == t).map(|k| b.margins[k].to_string()).unwrap_or_default();
            row.push(m);
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
