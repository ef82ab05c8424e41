//! Adaptive Dormand–Prince 5(4) with blow-up detection.
//!
//! Blow-up is recognised from the reciprocal growth rate `z = 1/(d ln|y|/dt)`:
//! near a power-type singularity `z` decays linearly to zero, so
//! `z / (-dz/dt)` estimates the remaining time. A run stops as blown up once the
//! state is large and the remaining time is negligible, or when the step size
//! collapses while the state is large.

use alloc::vec;
use alloc::vec::Vec;

use libm::{fabs, pow};

use super::{BlowupTime, OdeError, TimeVariable};

/// Right-hand side and size diagnostics of an ODE system.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
    /// Natural logarithm of the size of the state.
    fn log_magnitude(&self, y: &[f64]) -> f64;
    /// Instantaneous logarithmic growth rate of the state.
    fn growth_rate(&self, t: f64, y: &[f64], dy: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub max_steps: usize,
    /// Stop once the estimated remaining time is below
    /// `remaining_rel * (1 + |t|)`.
    pub remaining_rel: f64,
    /// Minimum `ln|y|` before a stop counts as blow-up; defaults to
    /// `ln(ε_mach^{-1/4})`.
    pub log_magnitude_min: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: 1e-3,
            h_min: 1e-14,
            max_steps: 2_000_000,
            remaining_rel: 1e-7,
            log_magnitude_min: -0.25 * libm::log(f64::EPSILON),
        }
    }
}

impl Tolerances {
    pub fn with_rtol(rtol: f64) -> Self {
        Self { rtol, atol: rtol * 1e-2, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IntegrationOutcome {
    Horizon { t: f64 },
    Blowup(BlowupTime),
}

// Dormand–Prince tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b* (fifth minus fourth order weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Workspace for one Dormand–Prince integration.
pub struct Dopri5 {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
}

impl Dopri5 {
    pub fn new(dim: usize) -> Self {
        Self {
            k: core::array::from_fn(|_| vec![0.0; dim]),
            tmp: vec![0.0; dim],
            y_new: vec![0.0; dim],
        }
    }

    /// One trial step from `(t, y)` with `k[0] = f(t, y)` already filled.
    /// Returns the scaled error norm; `y_new` and `k[6]` hold the proposal.
    fn trial<S: OdeSystem>(&mut self, sys: &S, t: f64, y: &[f64], h: f64, tol: &Tolerances) -> f64 {
        let n = y.len();
        let stages: [(f64, &[f64]); 5] = [
            (C2, &[A21]),
            (C3, &[A31, A32]),
            (C4, &[A41, A42, A43]),
            (C5, &[A51, A52, A53, A54]),
            (1.0, &[A61, A62, A63, A64, A65]),
        ];
        for (s, (c, a)) in stages.iter().enumerate() {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, aj) in a.iter().enumerate() {
                    acc += aj * self.k[j][i];
                }
                self.tmp[i] = y[i] + h * acc;
            }
            sys.rhs(t + c * h, &self.tmp, &mut self.k[s + 1]);
        }
        for i in 0..n {
            self.y_new[i] = y[i]
                + h * (B1 * self.k[0][i]
                    + B3 * self.k[2][i]
                    + B4 * self.k[3][i]
                    + B5 * self.k[4][i]
                    + B6 * self.k[5][i]);
        }
        sys.rhs(t + h, &self.y_new, &mut self.k[6]);
        let mut err = 0.0f64;
        for i in 0..n {
            let e = h
                * (E1 * self.k[0][i]
                    + E3 * self.k[2][i]
                    + E4 * self.k[3][i]
                    + E5 * self.k[4][i]
                    + E6 * self.k[5][i]
                    + E7 * self.k[6][i]);
            let scale = tol.atol + tol.rtol * fabs(y[i]).max(fabs(self.y_new[i]));
            let r = fabs(e) / scale;
            if !r.is_finite() || !self.y_new[i].is_finite() {
                return f64::INFINITY;
            }
            err = err.max(r);
        }
        err
    }
}

/// Integrate `sys` from `(t0, y0)` to `horizon`, calling `observer` on every
/// accepted step (including the initial point).
pub fn integrate<S, O>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    horizon: f64,
    tol: &Tolerances,
    variable: TimeVariable,
    mut observer: O,
) -> Result<(IntegrationOutcome, Vec<f64>, StepStats), OdeError>
where
    S: OdeSystem,
    O: FnMut(f64, &[f64]),
{
    let n = sys.dim();
    if y0.len() != n {
        return Err(OdeError::InvalidParameter("state length does not match system dimension"));
    }
    if !(tol.rtol > 0.0 && tol.h_min > 0.0 && horizon > t0) {
        return Err(OdeError::InvalidParameter("need rtol > 0, h_min > 0 and horizon > t0"));
    }
    let mut w = Dopri5::new(n);
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut h = tol.h_init.min(horizon - t0);
    let mut stats = StepStats::default();
    sys.rhs(t, &y, &mut w.k[0]);
    observer(t, &y);
    // reciprocal growth rate at the last two accepted points
    let mut z_prev: Option<(f64, f64)> = None;
    let mut remaining = f64::INFINITY;
    let method = "dopri5 growth-rate extrapolation";

    loop {
        if stats.accepted + stats.rejected >= tol.max_steps {
            return Err(OdeError::StepLimit { t, steps: tol.max_steps });
        }
        if t + h > horizon {
            h = horizon - t;
        }
        let err = w.trial(sys, t, &y, h, tol);
        if err <= 1.0 {
            stats.accepted += 1;
            t += h;
            core::mem::swap(&mut y, &mut w.y_new);
            let (k0, rest) = w.k.split_at_mut(1);
            k0[0].copy_from_slice(&rest[5]);
            observer(t, &y);

            let rate = sys.growth_rate(t, &y, &w.k[0]);
            let z = if rate > 0.0 { 1.0 / rate } else { f64::INFINITY };
            if let Some((tp, zp)) = z_prev {
                if z.is_finite() && zp.is_finite() && z < zp && t > tp {
                    let slope = (zp - z) / (t - tp);
                    remaining = z / slope;
                } else {
                    remaining = f64::INFINITY;
                }
            }
            z_prev = Some((t, z));
            let big = sys.log_magnitude(&y) >= tol.log_magnitude_min;
            if big && remaining < tol.remaining_rel * (1.0 + fabs(t)) {
                let bt = BlowupTime::finite(t + remaining, t, t + 2.0 * remaining, variable, method);
                return Ok((IntegrationOutcome::Blowup(bt), y, stats));
            }
            if t >= horizon {
                return Ok((IntegrationOutcome::Horizon { t }, y, stats));
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * pow(err, -0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            stats.rejected += 1;
            let fac = if err.is_finite() { (0.9 * pow(err, -0.2)).clamp(0.1, 0.5) } else { 0.1 };
            h *= fac;
        }
        if h < tol.h_min * (1.0 + fabs(t)) {
            let lm = sys.log_magnitude(&y);
            // the extrapolated singularity is closer than the resolution of t
            let imminent = remaining < tol.remaining_rel * (1.0 + fabs(t));
            if lm >= tol.log_magnitude_min || imminent {
                let rem = if remaining.is_finite() { remaining } else { h };
                let bt = BlowupTime::finite(t + rem, t, t + 2.0 * rem, variable, "dopri5 step collapse");
                return Ok((IntegrationOutcome::Blowup(bt), y, stats));
            }
            return Err(OdeError::ToleranceNotAchieved { t, h, log_magnitude: lm });
        }
    }
}
