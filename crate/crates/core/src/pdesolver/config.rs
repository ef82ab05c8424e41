//! Problem instances and grid descriptions.

use alloc::string::String;
use alloc::vec::Vec;

use libm::pow;

use crate::multiplier::DampingProfile;

use super::PdeError;

/// Radial profile of one initial-data component, before scaling by `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum DataProfile {
    Zero,
    /// `amplitude · (1 - (|x|/R)²)⁴` on `B_R`.
    Bump { amplitude: f64 },
    /// Spatially constant; used for the Laplacian-free ODE reduction.
    Constant { amplitude: f64 },
}

impl DataProfile {
    pub fn bump(amplitude: f64) -> Self {
        DataProfile::Bump { amplitude }
    }

    pub fn eval(&self, r: f64, radius: f64) -> f64 {
        match *self {
            DataProfile::Zero => 0.0,
            DataProfile::Bump { amplitude } => amplitude * bump_shape(r, radius),
            DataProfile::Constant { amplitude } => amplitude,
        }
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            DataProfile::Zero => 0.0,
            DataProfile::Bump { amplitude } | DataProfile::Constant { amplitude } => amplitude,
        }
    }

    pub fn is_compact(&self) -> bool {
        !matches!(self, DataProfile::Constant { .. })
    }
}

/// `(1 - (r/R)²)⁴` on `[0, R]`, zero outside.
pub fn bump_shape(r: f64, radius: f64) -> f64 {
    let s = (r / radius) * (r / radius);
    if s >= 1.0 {
        0.0
    } else {
        let w = 1.0 - s;
        (w * w) * (w * w)
    }
}

/// `Δ` of [`bump_shape`] in dimension `n`:
/// `-8n(1-s)³/R² + 48 s (1-s)²/R²` with `s = r²/R²`.
pub fn bump_laplacian(n: u32, r: f64, radius: f64) -> f64 {
    let s = (r / radius) * (r / radius);
    if s >= 1.0 {
        return 0.0;
    }
    let w = 1.0 - s;
    let r2 = radius * radius;
    (-8.0 * n as f64 * w * w * w + 48.0 * s * w * w) / r2
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InitialData {
    pub u0: DataProfile,
    pub u1: DataProfile,
    pub v0: DataProfile,
    pub v1: DataProfile,
}

impl InitialData {
    /// The same bump with unit amplitude on all four components.
    pub fn unit_bumps() -> Self {
        let b = DataProfile::bump(1.0);
        Self { u0: b, u1: b, v0: b, v1: b }
    }

    fn all(&self) -> [DataProfile; 4] {
        [self.u0, self.u1, self.v0, self.v1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SourceMode {
    /// `|∂_t v|^p` and `|∂_t u|^q`.
    Coupled,
    /// Linear damped waves.
    Off,
    /// Coupled plus the residual of `u* = v* = e^{-t} w(|x|)`, `w` the unit bump.
    Manufactured,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SystemConfig {
    pub n: u32,
    pub p: f64,
    pub q: f64,
    pub eps: f64,
    pub b1: DampingProfile,
    pub b2: DampingProfile,
    /// Data radius `R`.
    pub radius: f64,
    pub data: InitialData,
    pub source: SourceMode,
}

impl SystemConfig {
    /// Undamped coupled system with unit bumps.
    pub fn new(n: u32, p: f64, q: f64, eps: f64) -> Self {
        Self {
            n,
            p,
            q,
            eps,
            b1: DampingProfile::zero(),
            b2: DampingProfile::zero(),
            radius: 1.0,
            data: InitialData::unit_bumps(),
            source: SourceMode::Coupled,
        }
    }

    pub fn with_damping(mut self, b1: DampingProfile, b2: DampingProfile) -> Self {
        self.b1 = b1;
        self.b2 = b2;
        self
    }

    /// Structural checks; a failure means the run cannot be set up.
    pub fn validate(&self) -> Result<(), PdeError> {
        if self.n == 0 {
            return Err(PdeError::InvalidConfig(String::from("n must be >= 1")));
        }
        if !(self.p > 1.0 && self.q > 1.0) {
            return Err(PdeError::InvalidConfig(String::from("p and q must be > 1")));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(PdeError::InvalidConfig(String::from("eps must be positive")));
        }
        if !(self.radius > 0.0) {
            return Err(PdeError::InvalidConfig(String::from("data radius must be positive")));
        }
        for b in [&self.b1, &self.b2] {
            b.validate().map_err(|e| PdeError::InvalidConfig(alloc::format!("{e}")))?;
            b.tail_integral(0.0).map_err(|e| PdeError::InvalidConfig(alloc::format!("{e}")))?;
        }
        if self.data.all().iter().any(|d| !d.amplitude().is_finite()) {
            return Err(PdeError::InvalidConfig(String::from("data amplitudes must be finite")));
        }
        Ok(())
    }

    /// Blow-up hypotheses on the data: nonnegative, compactly supported in
    /// `B_R`, `u1` and `v1` not identically zero. Returns the violations.
    pub fn hypothesis_violations(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let d = &self.data;
        if d.all().iter().any(|x| x.amplitude() < 0.0) {
            out.push("initial data must be nonnegative");
        }
        if d.all().iter().any(|x| !x.is_compact()) {
            out.push("initial data must be compactly supported");
        }
        if d.u1.amplitude() == 0.0 || d.v1.amplitude() == 0.0 {
            out.push("u1 and v1 must not vanish identically");
        }
        if self.source != SourceMode::Coupled {
            out.push("nonlinearity is not the coupled one");
        }
        out
    }

    pub fn has_compact_data(&self) -> bool {
        self.data.all().iter().all(|d| d.is_compact())
    }
}

/// One level of spatial resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    pub h: f64,
    /// `dt / h`.
    pub cfl: f64,
    /// Half-width (or outer radius) of the domain; `None` chooses
    /// `R + horizon + 4h`.
    pub extent: Option<f64>,
}

impl GridSpec {
    pub fn new(h: f64, cfl: f64) -> Self {
        Self { h, cfl, extent: None }
    }

    pub fn dt(&self) -> f64 {
        self.cfl * self.h
    }

    pub fn required_extent(&self, radius: f64, horizon: f64) -> f64 {
        radius + horizon + 2.0 * self.h
    }

    pub fn extent_for(&self, radius: f64, horizon: f64) -> f64 {
        self.extent.unwrap_or(radius + horizon + 4.0 * self.h)
    }

    /// `levels` grids with `h, h/2, h/4, ...` at fixed CFL.
    pub fn ladder(&self, levels: usize) -> Vec<GridSpec> {
        (0..levels)
            .map(|k| GridSpec { h: self.h * pow(0.5, k as f64), cfl: self.cfl, extent: self.extent })
            .collect()
    }
}
