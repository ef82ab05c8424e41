//! ε-sweeps with the frame ODE or the PDE engine, scaling-law fits and the
//! sweep-level invariants.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use libm::{exp, log, pow};

use crate::critcurve::{self, CritError, LifespanLaw, Regime, RegimeTag};
use crate::odekit::{integrate_frame, FrameOde, OdeError, Tolerances};
use crate::pdesolver::{estimate_lifespan, GridSpec, LifespanEstimate, PdeError, SolveOptions, SystemConfig};
use crate::quad::linear_fit;

#[derive(Debug, Clone, PartialEq)]
pub enum HarnessError {
    InvalidPlan(String),
    TooFewPoints { have: usize, need: usize },
    AllCensored,
    Crit(CritError),
    Ode(OdeError),
    Pde(PdeError),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::InvalidPlan(m) => write!(f, "invalid sweep plan: {m}"),
            HarnessError::TooFewPoints { have, need } => {
                write!(f, "{have} uncensored points, fit needs at least {need}")
            }
            HarnessError::AllCensored => f.write_str("every run was censored; no fit possible"),
            HarnessError::Crit(e) => write!(f, "{e}"),
            HarnessError::Ode(e) => write!(f, "frame integration failed: {e}"),
            HarnessError::Pde(e) => write!(f, "PDE run failed: {e}"),
        }
    }
}

impl core::error::Error for HarnessError {}

impl From<CritError> for HarnessError {
    fn from(e: CritError) -> Self {
        HarnessError::Crit(e)
    }
}

impl From<OdeError> for HarnessError {
    fn from(e: OdeError) -> Self {
        HarnessError::Ode(e)
    }
}

impl From<PdeError> for HarnessError {
    fn from(e: PdeError) -> Self {
        HarnessError::Pde(e)
    }
}

/// Largest ε of a default plan.
pub const EPS_CAP: f64 = 0.5;
pub const MIN_FIT_POINTS: usize = 5;
/// Fits with a lower `R²` are flagged unreliable.
pub const RELIABLE_R2: f64 = 0.95;
/// `R²` required for the exp-power linearity check.
pub const LINEAR_R2: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FrameSettings {
    pub rtol: f64,
    /// Horizon in `τ = ln(1+t)`.
    pub tau_horizon: f64,
    pub c_f: f64,
    pub c_k: f64,
}

impl Default for FrameSettings {
    fn default() -> Self {
        Self { rtol: 1e-10, tau_horizon: 1e7, c_f: 1.0, c_k: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PdeSettings {
    /// `eps` is replaced per run.
    pub base: SystemConfig,
    /// Coarsest level of the ladder.
    pub grid: GridSpec,
    pub levels: usize,
    pub horizon: f64,
    pub options: SolveOptions,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "engine", rename_all = "snake_case"))]
pub enum Engine {
    Frame(FrameSettings),
    Pde(PdeSettings),
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Frame(_) => "frame",
            Engine::Pde(_) => "pde",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepPlan {
    pub n: u32,
    pub p: f64,
    pub q: f64,
    /// Strictly decreasing.
    pub eps: Vec<f64>,
    pub engine: Engine,
    /// Permit ε above [`EPS_CAP`].
    pub allow_large_eps: bool,
}

impl SweepPlan {
    /// `points` geometric values from `eps_from` down to `eps_to`.
    pub fn geometric(
        n: u32,
        p: f64,
        q: f64,
        eps_from: f64,
        eps_to: f64,
        points: usize,
        engine: Engine,
    ) -> Result<Self, HarnessError> {
        if points < 2 || !(eps_from > 0.0 && eps_to > 0.0) {
            return Err(HarnessError::InvalidPlan(String::from("need >= 2 points and positive eps bounds")));
        }
        let ratio = pow(eps_to / eps_from, 1.0 / (points - 1) as f64);
        let eps = (0..points).map(|k| eps_from * pow(ratio, k as f64)).collect();
        let plan = Self { n, p, q, eps, engine, allow_large_eps: false };
        plan.validate()?;
        Ok(plan)
    }

    /// Default plan: 8 points over two decades starting at `eps_from`.
    pub fn default_decades(n: u32, p: f64, q: f64, eps_from: f64, engine: Engine) -> Result<Self, HarnessError> {
        Self::geometric(n, p, q, eps_from, eps_from * 1e-2, 8, engine)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        critcurve::classify(self.n, self.p, self.q)?;
        if self.eps.is_empty() {
            return Err(HarnessError::InvalidPlan(String::from("empty eps list")));
        }
        if self.eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(HarnessError::InvalidPlan(String::from("eps values must be positive and finite")));
        }
        if self.eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(HarnessError::InvalidPlan(String::from("eps list must be strictly decreasing")));
        }
        if !self.allow_large_eps && self.eps[0] > EPS_CAP {
            return Err(HarnessError::InvalidPlan(format!("eps {} exceeds the cap {EPS_CAP}", self.eps[0])));
        }
        if let Engine::Pde(s) = &self.engine {
            if s.levels < 3 {
                return Err(HarnessError::InvalidPlan(String::from("PDE sweeps need >= 3 refinement levels")));
            }
        }
        Ok(())
    }

    pub fn regime(&self) -> Result<Regime, HarnessError> {
        Ok(critcurve::classify(self.n, self.p, self.q)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepPoint {
    pub eps: f64,
    /// `ln T`; `None` when censored.
    pub ln_t: Option<f64>,
    /// Bracket of `ln T`; the lower end is `ln(horizon)` when censored.
    pub ln_bracket: (f64, f64),
    pub censored: bool,
    /// PDE refinement did not converge to 5%.
    pub unconverged: bool,
}

impl SweepPoint {
    pub fn t(&self) -> Option<f64> {
        self.ln_t.map(exp)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepTable {
    pub n: u32,
    pub p: f64,
    pub q: f64,
    pub engine: String,
    pub regime: Regime,
    pub points: Vec<SweepPoint>,
}

impl SweepTable {
    pub fn uncensored(&self) -> impl Iterator<Item = &SweepPoint> {
        self.points.iter().filter(|p| !p.censored)
    }
}

/// One run of the sweep. Runs are independent, so callers may evaluate them
/// in parallel.
pub fn run_point(plan: &SweepPlan, eps: f64) -> Result<SweepPoint, HarnessError> {
    match &plan.engine {
        Engine::Frame(s) => {
            let frame = FrameOde::with_data(plan.n, plan.p, plan.q, s.c_f, s.c_k, eps, eps);
            let run = integrate_frame(&frame, s.tau_horizon, &Tolerances::with_rtol(s.rtol))?;
            let b = &run.blowup;
            if b.is_finite() {
                Ok(SweepPoint { eps, ln_t: Some(b.ln_t()), ln_bracket: b.ln_t_bracket(), censored: false, unconverged: false })
            } else {
                let lo = b.ln_t_bracket().0;
                Ok(SweepPoint { eps, ln_t: None, ln_bracket: (lo, f64::INFINITY), censored: true, unconverged: false })
            }
        }
        Engine::Pde(s) => {
            let mut cfg = s.base.clone();
            cfg.n = plan.n;
            cfg.p = plan.p;
            cfg.q = plan.q;
            cfg.eps = eps;
            let est = estimate_lifespan(&cfg, &s.grid.ladder(s.levels), s.horizon, &s.options)?;
            Ok(point_from_estimate(eps, &est))
        }
    }
}

pub fn point_from_estimate(eps: f64, est: &LifespanEstimate) -> SweepPoint {
    match est {
        LifespanEstimate::Observed { t_blowup, bracket, converged, .. } => SweepPoint {
            eps,
            ln_t: Some(log(*t_blowup)),
            ln_bracket: (log(bracket.0), log(bracket.1)),
            censored: false,
            unconverged: !converged,
        },
        LifespanEstimate::NotObserved { horizon, .. } => SweepPoint {
            eps,
            ln_t: None,
            ln_bracket: (log(*horizon), f64::INFINITY),
            censored: true,
            unconverged: false,
        },
    }
}

/// Assemble a table from per-ε results in plan order.
pub fn assemble(plan: &SweepPlan, points: Vec<SweepPoint>) -> Result<SweepTable, HarnessError> {
    Ok(SweepTable { n: plan.n, p: plan.p, q: plan.q, engine: String::from(plan.engine.name()), regime: plan.regime()?, points })
}

/// Sequential sweep.
pub fn sweep(plan: &SweepPlan) -> Result<SweepTable, HarnessError> {
    plan.validate()?;
    let points = plan.eps.iter().map(|&e| run_point(plan, e)).collect::<Result<Vec<_>, _>>()?;
    assemble(plan, points)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FitModel {
    /// Least squares on `(ln ε, ln T)`.
    PowerLaw,
    /// Least squares on `(ε^k, ln T)` with `k` the regime's rate exponent.
    ExpPower,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScalingFit {
    pub model: FitModel,
    pub predicted: LifespanLaw,
    /// For `ExpPower`, the power `k` of the abscissa `ε^k`.
    pub abscissa_exponent: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub residuals: Vec<f64>,
    pub points_used: usize,
    pub censored: usize,
    /// `R² >= 0.95`.
    pub reliable: bool,
    /// `|slope / predicted - 1|` for power-law fits.
    pub slope_rel_error: Option<f64>,
    /// `R² >= 0.99` for exp-power fits.
    pub linear: Option<bool>,
}

/// Fit the sweep against the law predicted for `regime`.
pub fn fit_scaling(table: &SweepTable, regime: &Regime) -> Result<ScalingFit, HarnessError> {
    let law = critcurve::predicted_lifespan_exponent(regime, table.n, table.p, table.q)?;
    fit_with_law(table, law)
}

pub fn fit_with_law(table: &SweepTable, law: LifespanLaw) -> Result<ScalingFit, HarnessError> {
    let pts: Vec<&SweepPoint> = table.uncensored().collect();
    let censored = table.points.len() - pts.len();
    if pts.is_empty() {
        return Err(HarnessError::AllCensored);
    }
    if pts.len() < MIN_FIT_POINTS {
        return Err(HarnessError::TooFewPoints { have: pts.len(), need: MIN_FIT_POINTS });
    }
    let (model, k) = match law {
        LifespanLaw::PowerLaw { .. } => (FitModel::PowerLaw, 0.0),
        LifespanLaw::ExpPower { rate_exponent } => (FitModel::ExpPower, rate_exponent),
    };
    let x: Vec<f64> = pts
        .iter()
        .map(|p| match model {
            FitModel::PowerLaw => log(p.eps),
            FitModel::ExpPower => pow(p.eps, k),
        })
        .collect();
    let y: Vec<f64> = pts.iter().map(|p| p.ln_t.unwrap()).collect();
    let (slope, intercept, r2) =
        linear_fit(&x, &y).ok_or_else(|| HarnessError::InvalidPlan(String::from("degenerate abscissae")))?;
    let residuals = x.iter().zip(&y).map(|(a, b)| b - (slope * a + intercept)).collect();
    let (slope_rel_error, linear) = match law {
        LifespanLaw::PowerLaw { exponent } => (Some(libm::fabs(slope / exponent - 1.0)), None),
        LifespanLaw::ExpPower { .. } => (None, Some(r2 >= LINEAR_R2)),
    };
    Ok(ScalingFit {
        model,
        predicted: law,
        abscissa_exponent: k,
        points_used: pts.len(),
        censored,
        reliable: r2 >= RELIABLE_R2,
        x,
        y,
        slope,
        intercept,
        r2,
        residuals,
        slope_rel_error,
        linear,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MonotonicityCheck {
    /// Index pairs `(i, j)`, `ε_i > ε_j`, with `T(ε_i) > T(ε_j)` beyond
    /// bracket overlap.
    pub violations: Vec<(usize, usize)>,
    pub pass: bool,
}

/// Smaller data must not die sooner, up to bracket overlap.
pub fn check_monotone(table: &SweepTable) -> MonotonicityCheck {
    let pts = &table.points;
    let mut violations = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            // ε_i > ε_j, so T_i <= T_j is expected
            if pts[i].ln_bracket.0 > pts[j].ln_bracket.1 {
                violations.push((i, j));
            }
        }
    }
    MonotonicityCheck { pass: violations.is_empty(), violations }
}

/// Growth exponent of `T(ε) ε^{1/Υ}` in `1/ε` above which the sweep counts
/// as exceeding the predicted upper-bound shape.
pub const BOUNDEDNESS_SLOPE_TOL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundednessCheck {
    /// `ln(T ε^{1/Υ})` per uncensored point.
    pub ln_scaled: Vec<f64>,
    /// Fitted slope of `ln(T ε^{1/Υ})` against `ln(1/ε)`.
    pub growth_exponent: f64,
    pub pass: bool,
}

/// `T(ε) ε^{1/Υ}` stays bounded (no growth faster than
/// `ε^{-BOUNDEDNESS_SLOPE_TOL}`); subcritical regime only.
pub fn check_boundedness(table: &SweepTable) -> Result<BoundednessCheck, HarnessError> {
    if table.regime.tag != RegimeTag::Subcritical {
        return Err(HarnessError::InvalidPlan(String::from("boundedness applies to the subcritical regime")));
    }
    let inv = 1.0 / table.regime.upsilon;
    let pts: Vec<&SweepPoint> = table.uncensored().collect();
    if pts.len() < 2 {
        return Err(HarnessError::TooFewPoints { have: pts.len(), need: 2 });
    }
    let ln_scaled: Vec<f64> = pts.iter().map(|p| p.ln_t.unwrap() + inv * log(p.eps)).collect();
    let x: Vec<f64> = pts.iter().map(|p| -log(p.eps)).collect();
    let growth_exponent = linear_fit(&x, &ln_scaled).map(|f| f.0).unwrap_or(0.0);
    Ok(BoundednessCheck { pass: growth_exponent <= BOUNDEDNESS_SLOPE_TOL, ln_scaled, growth_exponent })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame_plan(n: u32, p: f64, q: f64, from: f64, to: f64, k: usize) -> SweepPlan {
        SweepPlan::geometric(n, p, q, from, to, k, Engine::Frame(FrameSettings::default())).unwrap()
    }

    #[test]
    fn plan_invariants() {
        let e = Engine::Frame(FrameSettings::default());
        let p = SweepPlan::default_decades(2, 2.0, 2.0, 0.25, e.clone()).unwrap();
        assert_eq!(p.eps.len(), 8);
        assert!((p.eps[7] - 0.0025).abs() < 1e-15);
        assert!(SweepPlan::geometric(2, 2.0, 2.0, 0.01, 0.1, 5, e.clone()).is_err());
        assert!(SweepPlan::geometric(2, 2.0, 2.0, 0.9, 0.1, 5, e.clone()).is_err());
        let mut big = SweepPlan::geometric(2, 2.0, 2.0, 0.5, 0.1, 5, e).unwrap();
        big.eps[0] = 0.9;
        assert!(big.validate().is_err());
        big.allow_large_eps = true;
        assert!(big.validate().is_ok());
    }

    #[test]
    fn frame_sweep_is_monotone() {
        let plan = frame_plan(2, 2.0, 2.0, 0.25, pow(2.0, -9.0), 8);
        let table = sweep(&plan).unwrap();
        assert_eq!(table.points.len(), 8);
        assert!(table.points.iter().all(|p| !p.censored));
        assert!(table.points.windows(2).all(|w| w[1].ln_t > w[0].ln_t));
        assert!(check_monotone(&table).pass);
    }

    #[test]
    fn single_point_fit_is_refused() {
        let plan = frame_plan(2, 2.0, 2.0, 0.1, 0.05, 2);
        let mut table = sweep(&plan).unwrap();
        table.points.truncate(1);
        assert!(matches!(fit_scaling(&table, &table.regime.clone()), Err(HarnessError::TooFewPoints { .. })));
        for p in &mut table.points {
            p.censored = true;
            p.ln_t = None;
        }
        assert_eq!(fit_scaling(&table, &table.regime.clone()), Err(HarnessError::AllCensored));
    }

    #[test]
    fn monotonicity_detects_violation() {
        let plan = frame_plan(2, 2.0, 2.0, 0.2, 0.02, 5);
        let mut table = sweep(&plan).unwrap();
        table.points[0].ln_bracket = (100.0, 101.0);
        let m = check_monotone(&table);
        assert!(!m.pass && m.violations.contains(&(0, 1)));
    }

    #[test]
    fn subcritical_product_bounded() {
        let table = sweep(&frame_plan(2, 2.0, 2.0, 1e-2, 1e-4, 6)).unwrap();
        let b = check_boundedness(&table).unwrap();
        assert!(b.pass, "{b:?}");
    }
}
