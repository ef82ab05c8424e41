//! ODE surrogate of the iteration frame
//! `F' = cF (1+t)^{-α} G^p`, `G' = cK (1+t)^{-γ} F^q`.
//!
//! Integrated in `τ = ln(1+t)` for `(ln F, ln G)`, which keeps critical
//! lifespans of size `exp(ε^{-k})` representable.

use alloc::vec::Vec;

use libm::{exp, log};

use super::integrator::{integrate, IntegrationOutcome, OdeSystem, StepStats, Tolerances};
use super::{BlowupTime, OdeError, TimeVariable};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FrameOde {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub c_f: f64,
    pub c_k: f64,
    pub f0: f64,
    pub g0: f64,
}

impl FrameOde {
    /// Frame of dimension `n` with unit constants and `F(0) = G(0) = ε`.
    pub fn from_system(n: u32, p: f64, q: f64, eps: f64) -> Self {
        Self::with_data(n, p, q, 1.0, 1.0, eps, eps)
    }

    pub fn with_data(n: u32, p: f64, q: f64, c_f: f64, c_k: f64, f0: f64, g0: f64) -> Self {
        let n1 = n as f64 - 1.0;
        Self { p, q, alpha: n1 * (p - 1.0) / 2.0, gamma: n1 * (q - 1.0) / 2.0, c_f, c_k, f0, g0 }
    }

    fn validate(&self) -> Result<(), OdeError> {
        if !(self.f0 > 0.0 && self.g0 > 0.0) {
            return Err(OdeError::NonpositiveInitialData);
        }
        if !(self.p > 1.0 && self.q > 1.0 && self.c_f > 0.0 && self.c_k > 0.0) {
            return Err(OdeError::InvalidParameter("need p, q > 1 and positive frame constants"));
        }
        Ok(())
    }
}

impl OdeSystem for FrameOde {
    fn dim(&self) -> usize {
        2
    }

    fn rhs(&self, tau: f64, y: &[f64], dy: &mut [f64]) {
        let (lf, lg) = (y[0], y[1]);
        dy[0] = self.c_f * exp((1.0 - self.alpha) * tau + self.p * lg - lf);
        dy[1] = self.c_k * exp((1.0 - self.gamma) * tau + self.q * lf - lg);
    }

    fn log_magnitude(&self, y: &[f64]) -> f64 {
        y[0].max(y[1])
    }

    fn growth_rate(&self, _tau: f64, _y: &[f64], dy: &[f64]) -> f64 {
        dy[0].max(dy[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FrameSample {
    pub tau: f64,
    pub ln_f: f64,
    pub ln_g: f64,
}

impl FrameSample {
    /// Physical time `e^τ - 1`.
    pub fn t(&self) -> f64 {
        libm::expm1(self.tau)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRun {
    pub trace: Vec<FrameSample>,
    pub blowup: BlowupTime,
    pub stats: StepStats,
}

/// Integrate the frame up to `tau_horizon` in `τ = ln(1+t)`.
pub fn integrate_frame(
    frame: &FrameOde,
    tau_horizon: f64,
    tol: &Tolerances,
) -> Result<FrameRun, OdeError> {
    frame.validate()?;
    if !(tol.rtol <= 1e-9) {
        return Err(OdeError::InvalidParameter("frame integration needs rtol <= 1e-9"));
    }
    let mut trace = Vec::new();
    let y0 = [log(frame.f0), log(frame.g0)];
    let (outcome, _, stats) =
        integrate(frame, 0.0, &y0, tau_horizon, tol, TimeVariable::Log1p, |tau, y| {
            trace.push(FrameSample { tau, ln_f: y[0], ln_g: y[1] })
        })?;
    let blowup = match outcome {
        IntegrationOutcome::Blowup(b) => b,
        IntegrationOutcome::Horizon { t } => {
            BlowupTime::infinite(t, TimeVariable::Log1p, "dopri5 horizon reached")
        }
    };
    Ok(FrameRun { trace, blowup, stats })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::with_rtol(1e-10)
    }

    #[test]
    fn rejects_nonpositive_data() {
        let f = FrameOde::with_data(2, 2.0, 2.0, 1.0, 1.0, 0.0, 0.0);
        assert_eq!(integrate_frame(&f, 10.0, &tol()), Err(OdeError::NonpositiveInitialData));
    }

    #[test]
    fn critical_diagonal_is_riccati_in_log_time() {
        // n = 3, p = q = 2: α = γ = 1, so d F/dτ = F² and τ* = 1/ε.
        for &eps in &[0.5, 0.1, 0.02] {
            let run = integrate_frame(&FrameOde::from_system(3, 2.0, 2.0, eps), 1e3, &tol()).unwrap();
            let b = &run.blowup;
            assert!(b.lower <= 1.0 / eps && 1.0 / eps <= b.upper, "{b:?}");
        }
    }

    #[test]
    fn subcritical_closed_form() {
        // n = 2, p = q = 2, F = G: F' = (1+t)^{-1/2} F², so
        // 1/ε = 2(√(1+T) - 1) and T = 1/(4ε²) + 1/ε.
        for &eps in &[0.3, 0.05] {
            let run = integrate_frame(&FrameOde::from_system(2, 2.0, 2.0, eps), 50.0, &tol()).unwrap();
            let exact = 1.0 / (4.0 * eps * eps) + 1.0 / eps;
            let (lo, hi) = run.blowup.t_bracket();
            assert!(lo <= exact * (1.0 + 1e-8) && exact <= hi * (1.0 + 1e-8), "{lo} {hi} {exact}");
        }
    }

    #[test]
    fn trace_is_monotone_and_dominates_linear_growth() {
        let run = integrate_frame(&FrameOde::from_system(2, 2.0, 3.0, 0.2), 50.0, &tol()).unwrap();
        assert!(run.blowup.is_finite());
        for w in run.trace.windows(2) {
            assert!(w[1].ln_f > w[0].ln_f && w[1].ln_g > w[0].ln_g);
        }
        // ∫_0^t F ≥ t F(0)
        let mut integral = 0.0;
        for w in run.trace.windows(2) {
            integral += 0.5 * (w[1].t() - w[0].t()) * (exp(w[1].ln_f) + exp(w[0].ln_f));
            assert!(integral >= w[1].t() * 0.2 * (1.0 - 1e-12));
        }
    }

    #[test]
    fn horizon_reached_is_infinite() {
        let run = integrate_frame(&FrameOde::from_system(3, 2.0, 2.0, 0.01), 5.0, &tol()).unwrap();
        assert!(!run.blowup.is_finite());
        assert_eq!(run.blowup.lower, 5.0);
    }
}
