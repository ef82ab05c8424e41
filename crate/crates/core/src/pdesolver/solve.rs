//! Time loop, blow-up detection and lifespan estimation over a refinement
//! ladder.

use alloc::string::String;
use alloc::vec::Vec;

use libm::{fabs, log, pow};

use super::config::{GridSpec, SystemConfig};
use super::mesh::{cfl_limit, Mesh};
use super::scheme::{SolutionState, Stepper};
use super::PdeError;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveOptions {
    /// Blow-up threshold `Θ` on `max(|u_t|, |v_t|)`.
    pub theta: f64,
    /// Above this value steps are rejected and `dt` halved when the maximum
    /// grows too fast.
    pub adapt_threshold: f64,
    /// Largest accepted relative growth of the maximum per step in the
    /// adaptive phase.
    pub growth_limit: f64,
    /// `dt` may shrink to `dt0 · 2^{-max_halvings}` before the run stops
    /// with a dt-collapse. Halving below the resolution of `t` also counts
    /// as a collapse.
    pub max_halvings: u32,
    /// Time between stored snapshots; `None` stores only the first and last
    /// states.
    pub snapshot_dt: Option<f64>,
    /// Also store a snapshot whenever the maximum has grown by this factor
    /// since the last stored one.
    pub snapshot_growth: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { theta: 1e8, adapt_threshold: 1e4, growth_limit: 0.02, max_halvings: 55, snapshot_dt: None, snapshot_growth: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum StopReason {
    Threshold,
    DtCollapse,
    Horizon,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunOutcome {
    pub reason: StopReason,
    /// Time of the last accepted state.
    pub t_last: f64,
    /// Threshold crossing time (log-interpolated), or the last finite time on
    /// dt-collapse.
    pub t_blowup: Option<f64>,
    /// Accepted step that contains the crossing.
    pub bracket: Option<(f64, f64)>,
    pub steps: usize,
    pub rejected: usize,
    pub dt_final: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
    pub ut: Vec<f64>,
    pub v: Vec<f64>,
    pub vt: Vec<f64>,
}

impl Snapshot {
    pub fn of(s: &SolutionState) -> Self {
        Self { t: s.t, u: s.u.clone(), ut: s.ut.clone(), v: s.v.clone(), vt: s.vt.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub mesh: Mesh,
    pub dt0: f64,
    pub snapshots: Vec<Snapshot>,
    pub outcome: RunOutcome,
}

/// Size the mesh and check CFL and light-cone containment.
pub fn build_mesh(config: &SystemConfig, grid: &GridSpec, horizon: f64) -> Result<Mesh, PdeError> {
    config.validate()?;
    if !(grid.h > 0.0 && grid.cfl > 0.0) {
        return Err(PdeError::InvalidConfig(String::from("h and cfl must be positive")));
    }
    if !(horizon > 0.0) {
        return Err(PdeError::InvalidConfig(String::from("horizon must be positive")));
    }
    let limit = cfl_limit(config.n);
    if grid.cfl > limit + 1e-12 {
        return Err(PdeError::CflViolation { cfl: grid.cfl, limit });
    }
    let extent = grid.extent_for(config.radius, horizon);
    let required = grid.required_extent(config.radius, horizon);
    if config.has_compact_data() && extent < required {
        return Err(PdeError::DomainTooSmall { extent, required });
    }
    Ok(Mesh::new(config.n, grid.h, extent))
}

/// Evolve until blow-up, dt-collapse or `horizon`. `observer` sees every
/// accepted state, starting with the initial one.
pub fn solve_observed<O>(
    config: &SystemConfig,
    grid: &GridSpec,
    horizon: f64,
    opts: &SolveOptions,
    mut observer: O,
) -> Result<SolveResult, PdeError>
where
    O: FnMut(&Mesh, &SolutionState, f64),
{
    let mesh = build_mesh(config, grid, horizon)?;
    let dt0 = grid.dt();
    let dt_floor = dt0 * pow(0.5, opts.max_halvings as f64);
    let mut stepper = Stepper::new(config, &mesh);
    let mut state = stepper.initial_state();
    let mut next = state.clone();
    let mut snapshots = Vec::new();
    snapshots.push(Snapshot::of(&state));
    observer(&mesh, &state, dt0);

    let mut dt = dt0;
    let mut max_prev = state.max_derivative();
    let mut steps = 0usize;
    let mut rejected = 0usize;
    let mut next_snap = opts.snapshot_dt.unwrap_or(f64::INFINITY);
    let tiny = 1e-9 * dt0;
    let mut snap_max = max_prev;

    let outcome = loop {
        if state.t >= horizon - tiny {
            break RunOutcome {
                reason: StopReason::Horizon,
                t_last: state.t,
                t_blowup: None,
                bracket: None,
                steps,
                rejected,
                dt_final: dt,
            };
        }
        let dt_try = dt.min(horizon - state.t);
        stepper.step(&state, dt_try, &mut next);
        let mx = next.max_derivative();
        let adaptive = max_prev > opts.adapt_threshold || mx > opts.adapt_threshold;
        let too_fast = !mx.is_finite() || (adaptive && mx > max_prev * (1.0 + opts.growth_limit));
        if too_fast {
            let halved = dt * 0.5;
            // a step below the resolution of t no longer advances time
            if halved < dt_floor || state.t + halved == state.t {
                break RunOutcome {
                    reason: StopReason::DtCollapse,
                    t_last: state.t,
                    t_blowup: Some(state.t),
                    bracket: Some((state.t, state.t + dt)),
                    steps,
                    rejected,
                    dt_final: dt,
                };
            }
            dt = halved;
            rejected += 1;
            continue;
        }
        let t_prev = state.t;
        core::mem::swap(&mut state, &mut next);
        steps += 1;
        observer(&mesh, &state, dt_try);
        let grown = opts.snapshot_growth.is_some_and(|g| mx > g * snap_max);
        if state.t >= next_snap - tiny || grown {
            snapshots.push(Snapshot::of(&state));
            snap_max = mx;
            while next_snap <= state.t + tiny {
                next_snap += opts.snapshot_dt.unwrap_or(f64::INFINITY);
            }
        }
        if mx >= opts.theta {
            let frac = if mx > max_prev && max_prev > 0.0 {
                ((log(opts.theta) - log(max_prev)) / (log(mx) - log(max_prev))).clamp(0.0, 1.0)
            } else {
                1.0
            };
            break RunOutcome {
                reason: StopReason::Threshold,
                t_last: state.t,
                t_blowup: Some(t_prev + frac * (state.t - t_prev)),
                bracket: Some((t_prev, state.t)),
                steps,
                rejected,
                dt_final: dt,
            };
        }
        max_prev = mx;
    };
    if snapshots.last().map(|s| s.t) != Some(state.t) {
        snapshots.push(Snapshot::of(&state));
    }
    Ok(SolveResult { mesh, dt0, snapshots, outcome })
}

pub fn solve(
    config: &SystemConfig,
    grid: &GridSpec,
    horizon: f64,
    opts: &SolveOptions,
) -> Result<SolveResult, PdeError> {
    solve_observed(config, grid, horizon, opts, |_, _, _| {})
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LevelResult {
    pub h: f64,
    pub dt: f64,
    pub t_estimate: Option<f64>,
    pub reason: StopReason,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum LifespanEstimate {
    Observed {
        /// Estimate on the finest level.
        t_blowup: f64,
        /// `(min, max)` over the two finest levels.
        bracket: (f64, f64),
        levels: Vec<LevelResult>,
        /// Bracket relative width is at most 5%.
        converged: bool,
    },
    NotObserved { horizon: f64, levels: Vec<LevelResult> },
}

impl LifespanEstimate {
    pub fn t_blowup(&self) -> Option<f64> {
        match self {
            LifespanEstimate::Observed { t_blowup, .. } => Some(*t_blowup),
            LifespanEstimate::NotObserved { .. } => None,
        }
    }

    pub fn bracket(&self) -> Option<(f64, f64)> {
        match self {
            LifespanEstimate::Observed { bracket, .. } => Some(*bracket),
            LifespanEstimate::NotObserved { .. } => None,
        }
    }

    pub fn levels(&self) -> &[LevelResult] {
        match self {
            LifespanEstimate::Observed { levels, .. } | LifespanEstimate::NotObserved { levels, .. } => levels,
        }
    }

    /// `(max - min) / min` of the bracket.
    pub fn relative_width(&self) -> Option<f64> {
        self.bracket().map(|(a, b)| (b - a) / a)
    }
}

pub const CONVERGENCE_REL_WIDTH: f64 = 0.05;

/// Lifespan from a refinement ladder (at least three levels, common CFL),
/// finest level last.
pub fn estimate_lifespan(
    config: &SystemConfig,
    grids: &[GridSpec],
    horizon: f64,
    opts: &SolveOptions,
) -> Result<LifespanEstimate, PdeError> {
    if grids.len() < 3 {
        return Err(PdeError::InvalidConfig(String::from("need at least 3 refinement levels")));
    }
    if grids.windows(2).any(|w| fabs(w[0].cfl - w[1].cfl) > 1e-12) {
        return Err(PdeError::InvalidConfig(String::from("refinement levels must share one CFL")));
    }
    let mut levels = Vec::with_capacity(grids.len());
    for g in grids {
        let res = solve(config, g, horizon, opts)?;
        levels.push(LevelResult {
            h: g.h,
            dt: g.dt(),
            t_estimate: res.outcome.t_blowup,
            reason: res.outcome.reason,
        });
    }
    Ok(summarize_levels(levels, horizon))
}

pub fn summarize_levels(levels: Vec<LevelResult>, horizon: f64) -> LifespanEstimate {
    let k = levels.len();
    match (levels[k - 2].t_estimate, levels[k - 1].t_estimate) {
        (Some(a), Some(b)) => {
            let bracket = (a.min(b), a.max(b));
            let converged = (bracket.1 - bracket.0) / bracket.0 <= CONVERGENCE_REL_WIDTH;
            LifespanEstimate::Observed { t_blowup: b, bracket, levels, converged }
        }
        (_, Some(b)) => LifespanEstimate::Observed { t_blowup: b, bracket: (b, b), levels, converged: false },
        _ if levels.iter().all(|l| l.t_estimate.is_none()) => {
            LifespanEstimate::NotObserved { horizon, levels }
        }
        _ => {
            // finest level saw no blow-up although a coarser one did
            let t = levels.iter().rev().find_map(|l| l.t_estimate).unwrap_or(horizon);
            LifespanEstimate::Observed { t_blowup: t, bracket: (t, horizon), levels, converged: false }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PropagationAudit {
    pub t: f64,
    /// Largest `|u|, |u_t|, |v|, |v_t|` outside radius `t + R + 2h`.
    pub outside_max: f64,
    pub interior_max: f64,
    /// `outside_max / interior_max`.
    pub ratio: f64,
}

pub const PROPAGATION_TOL: f64 = 1e-10;

impl PropagationAudit {
    pub fn passes(&self) -> bool {
        self.ratio <= PROPAGATION_TOL
    }
}

/// Finite-speed audit of one snapshot.
pub fn propagation_audit(mesh: &Mesh, snap: &Snapshot, radius: f64) -> PropagationAudit {
    let cone = snap.t + radius + 2.0 * mesh.h;
    let (mut outside, mut inside) = (0.0f64, 0.0f64);
    for i in 0..mesh.len() {
        let m = fabs(snap.u[i]).max(fabs(snap.ut[i])).max(fabs(snap.v[i])).max(fabs(snap.vt[i]));
        if mesh.radius[i] > cone {
            outside = outside.max(m);
        } else {
            inside = inside.max(m);
        }
    }
    let ratio = if inside > 0.0 { outside / inside } else if outside > 0.0 { f64::INFINITY } else { 0.0 };
    PropagationAudit { t: snap.t, outside_max: outside, interior_max: inside, ratio }
}
