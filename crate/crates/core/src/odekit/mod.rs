//! ODE tools: Kato's lemma, the ODE surrogate of the functional frame, the
//! slicing iteration for the critical cases, and blow-up time extraction.

mod frame;
mod integrator;
mod kato;
mod slicing;

pub use frame::{integrate_frame, FrameOde, FrameRun, FrameSample};
pub use integrator::{integrate, Dopri5, IntegrationOutcome, OdeSystem, StepStats, Tolerances};
pub use kato::{
    kato_bound, kato_m, subcritical_instance, KatoBound, KatoError, KatoInstance,
};
pub use slicing::{
    a_closed_form, a_recursion_exact, slicing_sequences, sum_identity_check, sum_identity_terms,
    SlicingCase, SlicingError, SlicingInput, SlicingResult,
};

use core::fmt;

use alloc::string::String;

/// Variable in which a blow-up time was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TimeVariable {
    /// Physical time `t`.
    Linear,
    /// `τ = ln(1 + t)`.
    Log1p,
}

/// A blow-up time with an honest bracket.
///
/// `value`, `lower` and `upper` are in the integration variable. When the run
/// reached its horizon, `value` is `+∞` and `lower` is the horizon.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlowupTime {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub variable: TimeVariable,
    pub method: String,
}

impl BlowupTime {
    pub fn finite(value: f64, lower: f64, upper: f64, variable: TimeVariable, method: &str) -> Self {
        Self { value, lower, upper, variable, method: String::from(method) }
    }

    pub fn infinite(horizon: f64, variable: TimeVariable, method: &str) -> Self {
        Self {
            value: f64::INFINITY,
            lower: horizon,
            upper: f64::INFINITY,
            variable,
            method: String::from(method),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }

    /// Physical time; may overflow to `+∞` for very long log-time runs.
    pub fn t(&self) -> f64 {
        to_t(self.value, self.variable)
    }

    /// `ln T` in physical time, finite even when `T` itself overflows.
    pub fn ln_t(&self) -> f64 {
        to_ln_t(self.value, self.variable)
    }

    pub fn ln_t_bracket(&self) -> (f64, f64) {
        (to_ln_t(self.lower, self.variable), to_ln_t(self.upper, self.variable))
    }

    pub fn t_bracket(&self) -> (f64, f64) {
        (to_t(self.lower, self.variable), to_t(self.upper, self.variable))
    }

    /// `(upper - lower) / value` in the integration variable.
    pub fn relative_width(&self) -> f64 {
        (self.upper - self.lower) / self.value.abs()
    }
}

fn to_t(x: f64, var: TimeVariable) -> f64 {
    match var {
        TimeVariable::Linear => x,
        TimeVariable::Log1p => libm::expm1(x),
    }
}

fn to_ln_t(x: f64, var: TimeVariable) -> f64 {
    match var {
        TimeVariable::Linear => libm::log(x),
        // ln(e^τ - 1) = τ + ln(1 - e^{-τ})
        TimeVariable::Log1p => {
            if x.is_infinite() {
                x
            } else if x > 1.0 {
                x + libm::log1p(-libm::exp(-x))
            } else {
                libm::log(libm::expm1(x))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OdeError {
    NonpositiveInitialData,
    InvalidParameter(&'static str),
    /// The step size collapsed without the solution becoming large.
    ToleranceNotAchieved { t: f64, h: f64, log_magnitude: f64 },
    StepLimit { t: f64, steps: usize },
}

impl fmt::Display for OdeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OdeError::NonpositiveInitialData => f.write_str("initial data must be positive"),
            OdeError::InvalidParameter(s) => write!(f, "invalid parameter: {s}"),
            OdeError::ToleranceNotAchieved { t, h, log_magnitude } => write!(
                f,
                "step size collapsed to {h:e} at t = {t} with ln|y| = {log_magnitude}: tolerance not achievable"
            ),
            OdeError::StepLimit { t, steps } => write!(f, "step limit {steps} reached at t = {t}"),
        }
    }
}

impl core::error::Error for OdeError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_time_conversion() {
        let b = BlowupTime::finite(3e7, 3e7, 3e7 + 1.0, TimeVariable::Log1p, "x");
        assert_eq!(b.t(), f64::INFINITY);
        assert!((b.ln_t() - 3e7).abs() < 1e-6);
        let b = BlowupTime::finite(0.5, 0.4, 0.6, TimeVariable::Log1p, "x");
        assert!((b.ln_t() - libm::log(libm::expm1(0.5))).abs() < 1e-15);
        assert!((b.t() - libm::expm1(0.5)).abs() < 1e-15);
        let b = BlowupTime::infinite(10.0, TimeVariable::Linear, "x");
        assert!(!b.is_finite());
        assert_eq!(b.ln_t(), f64::INFINITY);
    }
}
