//! Quadrature of `U1, V1, F, G` along numerical trajectories, and audits of
//! the lower bounds they satisfy for admissible data.
//!
//! With `Ψ(t,x) = e^{-t}Φ(x)`:
//!
//! ```text
//! U1(t) = ∫ u Ψ,   W_u(t) = m1(t) ∫ u_t Ψ
//! F(t)  = ε (m1(0)/2) ∫ u1 Φ + ½ ∫_0^t m1(s) ∫ |v_t(s)|^p Ψ(s) ds
//! G(t)  = ε (m2(0)/2) ∫ v1 Φ + ½ ∫_0^t m2(s) ∫ |u_t(s)|^q Ψ(s) ds
//! U2    = W_u - F,   V2 = W_v - G
//! ```
//!
//! Space integrals use the mesh trapezoid weights; the Hölder check uses the
//! same weights, so it holds up to rounding.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use libm::{exp, fabs, pow};

use crate::multiplier::Multiplier;
use crate::pdesolver::{abs_pow, Mesh, Snapshot, SolutionState, SourceMode, SystemConfig};
use crate::quad::CompensatedSum;

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionalError {
    /// The solution reaches the outer boundary of the mesh.
    SupportExitsGrid { t: f64, boundary_max: f64 },
    InvalidConfig(String),
    TooFewSamples { have: usize, need: usize },
}

impl fmt::Display for FunctionalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionalError::SupportExitsGrid { t, boundary_max } => {
                write!(f, "solution support reaches the mesh boundary at t = {t} (boundary value {boundary_max:e})")
            }
            FunctionalError::InvalidConfig(m) => write!(f, "invalid configuration: {m}"),
            FunctionalError::TooFewSamples { have, need } => write!(f, "{have} samples, at least {need} needed"),
        }
    }
}

impl core::error::Error for FunctionalError {}

/// `∫_B |z_t| Ψ <= (∫ |z_t|^p Ψ)^{1/p} (∫_B Ψ)^{1/p'}` on `B = B_{R+t+2h}`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HolderCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl HolderCheck {
    /// `rhs / lhs`; `+∞` when the left side vanishes.
    pub fn margin(&self) -> f64 {
        if self.lhs > 0.0 {
            self.rhs / self.lhs
        } else {
            f64::INFINITY
        }
    }
}

/// Space integrals of one state.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FunctionalSample {
    pub t: f64,
    pub m1: f64,
    pub m2: f64,
    pub u1: f64,
    pub v1: f64,
    /// `∫ u_t Ψ` and `∫ v_t Ψ`.
    pub ut_psi: f64,
    pub vt_psi: f64,
    /// `∫ |v_t|^p Ψ` and `∫ |u_t|^q Ψ`.
    pub vt_p_psi: f64,
    pub ut_q_psi: f64,
    pub holder_v: HolderCheck,
    pub holder_u: HolderCheck,
    /// `|U1(h) - U1(2h)| / 3` from the even-node sub-quadrature.
    pub u1_error: f64,
    pub v1_error: f64,
}

/// Evaluates [`FunctionalSample`]s for one configuration and mesh.
#[derive(Debug, Clone)]
pub struct SampleContext<'a> {
    pub config: &'a SystemConfig,
    pub mesh: &'a Mesh,
    m1: Multiplier,
    m2: Multiplier,
}

impl<'a> SampleContext<'a> {
    pub fn new(config: &'a SystemConfig, mesh: &'a Mesh) -> Result<Self, FunctionalError> {
        let m = |p: &crate::multiplier::DampingProfile| {
            Multiplier::new(p.clone()).map_err(|e| FunctionalError::InvalidConfig(format!("{e}")))
        };
        Ok(Self { config, mesh, m1: m(&config.b1)?, m2: m(&config.b2)? })
    }

    pub fn m1(&self) -> &Multiplier {
        &self.m1
    }

    pub fn m2(&self) -> &Multiplier {
        &self.m2
    }

    /// Reject states whose support touches the last two cells (compact data
    /// only).
    fn check_support(&self, t: f64, fields: [&[f64]; 4]) -> Result<(), FunctionalError> {
        if !self.config.has_compact_data() {
            return Ok(());
        }
        let mesh = self.mesh;
        let edge = mesh.extent() - 2.0 * mesh.h;
        let (mut inner, mut outer) = (0.0f64, 0.0f64);
        for i in 0..mesh.len() {
            let m = fields.iter().map(|f| fabs(f[i])).fold(0.0, f64::max);
            if mesh.radius[i] >= edge - 1e-12 {
                outer = outer.max(m);
            } else {
                inner = inner.max(m);
            }
        }
        if outer > 1e-10 * inner {
            return Err(FunctionalError::SupportExitsGrid { t, boundary_max: outer });
        }
        Ok(())
    }

    pub fn sample(&self, t: f64, u: &[f64], ut: &[f64], v: &[f64], vt: &[f64]) -> Result<FunctionalSample, FunctionalError> {
        self.check_support(t, [u, ut, v, vt])?;
        let (mesh, cfg) = (self.mesh, self.config);
        let decay = exp(-t);
        let psi = |i: usize| decay * mesh.phi[i];
        let (p, q) = (cfg.p, cfg.q);
        let (u1, u1_error) = with_even_estimate(mesh, |i| u[i] * psi(i));
        let (v1, v1_error) = with_even_estimate(mesh, |i| v[i] * psi(i));
        let vt_p_psi = mesh.trapezoid_with(|i| abs_pow(vt[i], p) * psi(i));
        let ut_q_psi = mesh.trapezoid_with(|i| abs_pow(ut[i], q) * psi(i));
        let ball = cfg.radius + t + 2.0 * mesh.h;
        let inside = |i: usize| if mesh.radius[i] <= ball { 1.0 } else { 0.0 };
        let ball_psi = mesh.trapezoid_with(|i| inside(i) * psi(i));
        let holder = |z: &[f64], e: f64, full: f64| HolderCheck {
            lhs: mesh.trapezoid_with(|i| inside(i) * fabs(z[i]) * psi(i)),
            rhs: pow(full, 1.0 / e) * pow(ball_psi, 1.0 - 1.0 / e),
        };
        Ok(FunctionalSample {
            t,
            m1: self.m1.m(t),
            m2: self.m2.m(t),
            u1,
            v1,
            ut_psi: mesh.trapezoid_with(|i| ut[i] * psi(i)),
            vt_psi: mesh.trapezoid_with(|i| vt[i] * psi(i)),
            vt_p_psi,
            ut_q_psi,
            holder_v: holder(vt, p, vt_p_psi),
            holder_u: holder(ut, q, ut_q_psi),
            u1_error,
            v1_error,
        })
    }

    pub fn sample_state(&self, s: &SolutionState) -> Result<FunctionalSample, FunctionalError> {
        self.sample(s.t, &s.u, &s.ut, &s.v, &s.vt)
    }

    pub fn sample_snapshot(&self, s: &Snapshot) -> Result<FunctionalSample, FunctionalError> {
        self.sample(s.t, &s.u, &s.ut, &s.v, &s.vt)
    }

    /// `ε (m1(0)/2) ∫ u0 Φ` and `ε (m2(0)/2) ∫ v0 Φ`: the lower bounds of
    /// `U1` and `V1`.
    pub fn data_lower_bounds(&self) -> (f64, f64) {
        let cfg = self.config;
        let (mesh, r) = (self.mesh, cfg.radius);
        let i0 = mesh.trapezoid_with(|i| cfg.data.u0.eval(mesh.radius[i], r) * mesh.phi[i]);
        let j0 = mesh.trapezoid_with(|i| cfg.data.v0.eval(mesh.radius[i], r) * mesh.phi[i]);
        (0.5 * cfg.eps * self.m1.m0 * i0, 0.5 * cfg.eps * self.m2.m0 * j0)
    }

    /// `F(0) = ε (m1(0)/2) ∫ u1 Φ` and `G(0)`, from the configured data.
    pub fn frame_initial_values(&self) -> (f64, f64) {
        let cfg = self.config;
        let (mesh, r) = (self.mesh, cfg.radius);
        if cfg.source == SourceMode::Manufactured {
            let w = mesh.trapezoid_with(|i| crate::pdesolver::bump_shape(mesh.radius[i], r) * mesh.phi[i]);
            return (-0.5 * self.m1.m0 * w, -0.5 * self.m2.m0 * w);
        }
        let i1 = mesh.trapezoid_with(|i| cfg.data.u1.eval(mesh.radius[i], r) * mesh.phi[i]);
        let j1 = mesh.trapezoid_with(|i| cfg.data.v1.eval(mesh.radius[i], r) * mesh.phi[i]);
        (0.5 * cfg.eps * self.m1.m0 * i1, 0.5 * cfg.eps * self.m2.m0 * j1)
    }
}

/// Trapezoid value and `|I_h - I_{2h}|/3`, the coarse sum using even nodes.
fn with_even_estimate<F: Fn(usize) -> f64>(mesh: &Mesh, f: F) -> (f64, f64) {
    let fine = mesh.trapezoid_with(&f);
    let mut coarse = CompensatedSum::new();
    let last = mesh.len() - 1;
    // end weights are already halved, so doubling gives the 2h rule
    for i in (0..=last).step_by(2) {
        coarse.add(2.0 * mesh.trap_weights[i] * f(i));
    }
    (fine, fabs(fine - coarse.value()) / 3.0)
}

/// Collects samples from the solver observer.
#[derive(Debug, Clone)]
pub struct FunctionalRecorder<'a> {
    pub context: SampleContext<'a>,
    pub samples: Vec<FunctionalSample>,
    pub error: Option<FunctionalError>,
}

impl<'a> FunctionalRecorder<'a> {
    pub fn new(config: &'a SystemConfig, mesh: &'a Mesh) -> Result<Self, FunctionalError> {
        Ok(Self { context: SampleContext::new(config, mesh)?, samples: Vec::new(), error: None })
    }

    pub fn observe(&mut self, s: &SolutionState) {
        if self.error.is_some() {
            return;
        }
        match self.context.sample_state(s) {
            Ok(x) => self.samples.push(x),
            Err(e) => self.error = Some(e),
        }
    }

    pub fn finish(self) -> Result<FunctionalTrace, FunctionalError> {
        if let Some(e) = self.error {
            return Err(e);
        }
        let (f0, g0) = self.context.frame_initial_values();
        let (lu, lv) = self.context.data_lower_bounds();
        let forced = self.context.config.source != SourceMode::Off;
        Ok(FunctionalTrace::from_samples(self.samples, f0, g0, lu, lv, forced))
    }
}

/// Relative time-quadrature error above which a trace is flagged.
pub const CADENCE_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FunctionalTrace {
    pub samples: Vec<FunctionalSample>,
    pub times: Vec<f64>,
    pub u1: Vec<f64>,
    pub v1: Vec<f64>,
    /// `m1(t) ∫ u_t Ψ` and `m2(t) ∫ v_t Ψ`.
    pub wu: Vec<f64>,
    pub wv: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub u2: Vec<f64>,
    pub v2: Vec<f64>,
    pub f0: f64,
    pub g0: f64,
    /// Required lower bounds of `U1` and `V1`.
    pub u1_bound: f64,
    pub v1_bound: f64,
    /// Running `|trap_full - trap_even| / 3` relative to `|F|` (resp. `|G|`),
    /// updated at even sample indices.
    pub time_error_f: Vec<f64>,
    pub time_error_g: Vec<f64>,
}

impl FunctionalTrace {
    /// `forced = false` (linear test mode) makes the `F`, `G` integrands
    /// vanish.
    pub fn from_samples(
        samples: Vec<FunctionalSample>,
        f0: f64,
        g0: f64,
        u1_bound: f64,
        v1_bound: f64,
        forced: bool,
    ) -> Self {
        let on = if forced { 1.0 } else { 0.0 };
        let times: Vec<f64> = samples.iter().map(|s| s.t).collect();
        let fi: Vec<f64> = samples.iter().map(|s| on * 0.5 * s.m1 * s.vt_p_psi).collect();
        let gi: Vec<f64> = samples.iter().map(|s| on * 0.5 * s.m2 * s.ut_q_psi).collect();
        let (f, time_error_f) = causal_integral(&times, &fi, f0);
        let (g, time_error_g) = causal_integral(&times, &gi, g0);
        let wu: Vec<f64> = samples.iter().map(|s| s.m1 * s.ut_psi).collect();
        let wv: Vec<f64> = samples.iter().map(|s| s.m2 * s.vt_psi).collect();
        let u2 = wu.iter().zip(&f).map(|(w, x)| w - x).collect();
        let v2 = wv.iter().zip(&g).map(|(w, x)| w - x).collect();
        Self {
            u1: samples.iter().map(|s| s.u1).collect(),
            v1: samples.iter().map(|s| s.v1).collect(),
            samples,
            times,
            wu,
            wv,
            f,
            g,
            u2,
            v2,
            f0,
            g0,
            u1_bound,
            v1_bound,
            time_error_f,
            time_error_g,
        }
    }

    /// Largest relative time-quadrature error over samples with `t <= until`.
    pub fn cadence_error(&self, until: f64) -> f64 {
        (0..self.len())
            .filter(|&k| self.times[k] <= until)
            .map(|k| self.time_error_f[k].max(self.time_error_g[k]))
            .fold(0.0, f64::max)
    }

    pub fn cadence_ok(&self, until: f64) -> bool {
        self.cadence_error(until) <= CADENCE_TOLERANCE
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Running `x0 + ∫ y` by trapezoid, and the relative Richardson
/// estimate against the trapezoid over even samples.
fn causal_integral(t: &[f64], y: &[f64], x0: f64) -> (Vec<f64>, Vec<f64>) {
    let mut out = Vec::with_capacity(t.len());
    let mut errors = Vec::with_capacity(t.len());
    let mut acc = CompensatedSum::new();
    acc.add(x0);
    let mut coarse = CompensatedSum::new();
    coarse.add(x0);
    let mut err = 0.0f64;
    for k in 0..t.len() {
        if k > 0 {
            acc.add(0.5 * (t[k] - t[k - 1]) * (y[k] + y[k - 1]));
        }
        if k >= 2 && k % 2 == 0 {
            coarse.add(0.5 * (t[k] - t[k - 2]) * (y[k] + y[k - 2]));
            let running = fabs(acc.value());
            if running > 0.0 {
                err = fabs(acc.value() - coarse.value()) / 3.0 / running;
            }
        }
        out.push(acc.value());
        errors.push(err);
    }
    (out, errors)
}

/// Build a trace from stored snapshots.
pub fn compute_fg(config: &SystemConfig, mesh: &Mesh, snapshots: &[Snapshot]) -> Result<FunctionalTrace, FunctionalError> {
    let mut rec = FunctionalRecorder::new(config, mesh)?;
    for s in snapshots {
        let x = rec.context.sample_snapshot(s)?;
        rec.samples.push(x);
    }
    rec.finish()
}

/// `U1`, `V1` and their quadrature error estimates per snapshot.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct U1V1 {
    pub times: Vec<f64>,
    pub u1: Vec<f64>,
    pub v1: Vec<f64>,
    pub u1_error: Vec<f64>,
    pub v1_error: Vec<f64>,
}

pub fn compute_u1v1(config: &SystemConfig, mesh: &Mesh, snapshots: &[Snapshot]) -> Result<U1V1, FunctionalError> {
    let ctx = SampleContext::new(config, mesh)?;
    let mut out = U1V1::default();
    for s in snapshots {
        let x = ctx.sample_snapshot(s)?;
        out.times.push(x.t);
        out.u1.push(x.u1);
        out.v1.push(x.v1);
        out.u1_error.push(x.u1_error);
        out.v1_error.push(x.v1_error);
    }
    Ok(out)
}

/// `1 + (computed - required)/|required|`; for `required = 0`, `+∞`, `1`
/// or `-∞` by the sign of `computed`.
pub fn generalized_margin(computed: f64, required: f64) -> f64 {
    if required != 0.0 {
        1.0 + (computed - required) / fabs(required)
    } else if computed > 0.0 {
        f64::INFINITY
    } else if computed == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    }
}

pub const DEFAULT_DELTA: f64 = 0.05;
/// Tolerance for checks that hold exactly up to rounding.
pub const ROUNDING_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundRecord {
    pub name: String,
    /// The inequality being checked.
    pub statement: String,
    pub times: Vec<f64>,
    pub margins: Vec<f64>,
    pub min_margin: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl BoundRecord {
    fn new(name: &str, statement: &str, times: Vec<f64>, margins: Vec<f64>, tolerance: f64) -> Self {
        let min_margin = margins.iter().cloned().fold(f64::INFINITY, f64::min);
        Self {
            name: String::from(name),
            statement: String::from(statement),
            pass: min_margin >= 1.0 - tolerance,
            times,
            margins,
            min_margin,
            tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AuditReport {
    pub delta: f64,
    /// Samples with `t <= until` were audited.
    pub until: f64,
    pub bounds: Vec<BoundRecord>,
    pub hypothesis_violations: Vec<String>,
    /// See [`FunctionalTrace::cadence_error`].
    pub cadence_error: f64,
    /// Every bound passes.
    pub pass: bool,
}

impl AuditReport {
    pub fn bound(&self, name: &str) -> Option<&BoundRecord> {
        self.bounds.iter().find(|b| b.name == name)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.bounds.iter().filter(|b| !b.pass).map(|b| b.name.as_str()).collect()
    }
}

/// Audit the lower bounds on samples with `t <= until` (all samples if
/// `None`).
pub fn audit_lower_bounds(trace: &FunctionalTrace, config: &SystemConfig, until: Option<f64>, delta: f64) -> AuditReport {
    let until = until.unwrap_or(f64::INFINITY);
    let idx: Vec<usize> = (0..trace.len()).filter(|&k| trace.times[k] <= until).collect();
    let times: Vec<f64> = idx.iter().map(|&k| trace.times[k]).collect();
    let map = |f: &dyn Fn(usize) -> f64| idx.iter().map(|&k| f(k)).collect::<Vec<f64>>();
    let monotone = |x: &[f64]| {
        map(&|k| if k == 0 || x[k] >= x[k - 1] { 1.0 } else { generalized_margin(x[k], x[k - 1]) })
    };
    let bounds = alloc::vec![
        BoundRecord::new(
            "u1_lower_bound",
            "U1(t) >= eps (m1(0)/2) ∫ u0 Φ",
            times.clone(),
            map(&|k| generalized_margin(trace.u1[k], trace.u1_bound)),
            delta,
        ),
        BoundRecord::new(
            "v1_lower_bound",
            "V1(t) >= eps (m2(0)/2) ∫ v0 Φ",
            times.clone(),
            map(&|k| generalized_margin(trace.v1[k], trace.v1_bound)),
            delta,
        ),
        BoundRecord::new(
            "wu_ge_f",
            "m1(t) ∫ u_t Ψ >= F(t)",
            times.clone(),
            map(&|k| generalized_margin(trace.wu[k], trace.f[k])),
            delta,
        ),
        BoundRecord::new(
            "wv_ge_g",
            "m2(t) ∫ v_t Ψ >= G(t)",
            times.clone(),
            map(&|k| generalized_margin(trace.wv[k], trace.g[k])),
            delta,
        ),
        BoundRecord::new(
            "u2_nonnegative",
            "U2(t) >= 0, margin 1 + U2/(|m1 ∫ u_t Ψ| + |F|)",
            times.clone(),
            map(&|k| 1.0 + trace.u2[k] / (fabs(trace.wu[k]) + fabs(trace.f[k])).max(f64::MIN_POSITIVE)),
            delta,
        ),
        BoundRecord::new(
            "v2_nonnegative",
            "V2(t) >= 0, margin 1 + V2/(|m2 ∫ v_t Ψ| + |G|)",
            times.clone(),
            map(&|k| 1.0 + trace.v2[k] / (fabs(trace.wv[k]) + fabs(trace.g[k])).max(f64::MIN_POSITIVE)),
            delta,
        ),
        BoundRecord::new("f_monotone", "F(t_k) >= F(t_{k-1})", times.clone(), monotone(&trace.f), ROUNDING_TOLERANCE),
        BoundRecord::new("g_monotone", "G(t_k) >= G(t_{k-1})", times.clone(), monotone(&trace.g), ROUNDING_TOLERANCE),
        BoundRecord::new(
            "holder_v",
            "∫_B |v_t| Ψ <= (∫ |v_t|^p Ψ)^{1/p} (∫_B Ψ)^{1/p'}",
            times.clone(),
            map(&|k| trace.samples[k].holder_v.margin()),
            ROUNDING_TOLERANCE,
        ),
        BoundRecord::new(
            "holder_u",
            "∫_B |u_t| Ψ <= (∫ |u_t|^q Ψ)^{1/q} (∫_B Ψ)^{1/q'}",
            times,
            map(&|k| trace.samples[k].holder_u.margin()),
            ROUNDING_TOLERANCE,
        ),
    ];
    let pass = bounds.iter().all(|b| b.pass);
    AuditReport {
        delta,
        until,
        bounds,
        hypothesis_violations: config.hypothesis_violations().into_iter().map(String::from).collect(),
        cadence_error: trace.cadence_error(until),
        pass,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FrameStatus {
    Pass,
    Fail,
    /// No nonlinear forcing, so `F' = 0` and the ratio carries no information.
    Vacuous,
}

/// Lower bound of `ρ` below which the frame audit fails.
pub const FRAME_RHO_FLOOR: f64 = 1e-6;
/// Minimum number of samples inside the audit window.
pub const FRAME_MIN_SAMPLES: usize = 100;
/// Relative disagreement between the differenced `F'` and `½ m1 ∫|v_t|^p Ψ`
/// above which a point counts as differentiation noise.
pub const FRAME_NOISE_TOLERANCE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FrameAudit {
    pub status: FrameStatus,
    /// `inf ρ_F`, the empirical constant in `F' >= C (1+t)^{-α} G^p`.
    pub c_f: f64,
    /// `inf ρ_G`, the empirical constant in `G' >= K (1+t)^{-β} F^q`.
    pub c_k: f64,
    pub window: (f64, f64),
    pub samples_used: usize,
    /// Points dropped as differentiation noise.
    pub dropped_noisy: usize,
    pub times: Vec<f64>,
    pub rho_f: Vec<f64>,
    pub rho_g: Vec<f64>,
}

/// Empirical frame constants from centred differences of `F` and `G` over
/// samples with `t <= until`.
pub fn audit_frame(trace: &FunctionalTrace, config: &SystemConfig, until: Option<f64>) -> Result<FrameAudit, FunctionalError> {
    let until = until.unwrap_or(f64::INFINITY);
    let n = config.n as f64;
    let alpha = 0.5 * (n - 1.0) * (config.p - 1.0);
    let beta = 0.5 * (n - 1.0) * (config.q - 1.0);
    let last = trace.times.iter().rposition(|&t| t <= until).unwrap_or(0);
    if last < FRAME_MIN_SAMPLES + 1 {
        return Err(FunctionalError::TooFewSamples { have: last + 1, need: FRAME_MIN_SAMPLES + 2 });
    }
    let vacuous = config.source == SourceMode::Off;
    let (mut times, mut rho_f, mut rho_g) = (Vec::new(), Vec::new(), Vec::new());
    let mut dropped = 0;
    for k in 1..last {
        let (t, s) = (trace.times[k], &trace.samples[k]);
        let dt = trace.times[k + 1] - trace.times[k - 1];
        let df = (trace.f[k + 1] - trace.f[k - 1]) / dt;
        let dg = (trace.g[k + 1] - trace.g[k - 1]) / dt;
        let (ef, eg) = (0.5 * s.m1 * s.vt_p_psi, 0.5 * s.m2 * s.ut_q_psi);
        let noisy = |d: f64, e: f64| e > 0.0 && fabs(d - e) > FRAME_NOISE_TOLERANCE * e;
        if !vacuous && (noisy(df, ef) || noisy(dg, eg)) {
            dropped += 1;
            continue;
        }
        times.push(t);
        rho_f.push(df / (pow(1.0 + t, -alpha) * pow(trace.g[k], config.p)));
        rho_g.push(dg / (pow(1.0 + t, -beta) * pow(trace.f[k], config.q)));
    }
    let inf = |x: &[f64]| x.iter().cloned().fold(f64::INFINITY, f64::min);
    let (c_f, c_k) = if vacuous { (0.0, 0.0) } else { (inf(&rho_f), inf(&rho_g)) };
    let status = if vacuous {
        FrameStatus::Vacuous
    } else if times.len() >= FRAME_MIN_SAMPLES && c_f >= FRAME_RHO_FLOOR && c_k >= FRAME_RHO_FLOOR {
        FrameStatus::Pass
    } else {
        FrameStatus::Fail
    };
    Ok(FrameAudit {
        status,
        c_f,
        c_k,
        window: (times.first().cloned().unwrap_or(0.0), times.last().cloned().unwrap_or(0.0)),
        samples_used: times.len(),
        dropped_noisy: dropped,
        times,
        rho_f,
        rho_g,
    })
}

/// Largest relative change of `(c_f, c_k)` between two grid levels.
pub fn frame_stability(a: &FrameAudit, b: &FrameAudit) -> f64 {
    let rel = |x: f64, y: f64| fabs(x - y) / x.abs().max(y.abs());
    rel(a.c_f, b.c_f).max(rel(a.c_k, b.c_k))
}
