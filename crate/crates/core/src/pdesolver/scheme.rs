//! Time stepping of `(u, u_t, v, v_t)`.
//!
//! Kick–drift–kick velocity Verlet: half kick with the data at `t`, drift of
//! `u`, then a closing half kick in which the damping term is implicit
//! (division by `1 + dt b(t+dt)/2`) and the partner's derivative at `t + dt`
//! is extrapolated from its half-step value. One Laplacian per field and step.

use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, fabs, log};

use super::config::{bump_laplacian, bump_shape, SourceMode, SystemConfig};
use super::mesh::Mesh;

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionState {
    pub t: f64,
    pub u: Vec<f64>,
    pub ut: Vec<f64>,
    pub v: Vec<f64>,
    pub vt: Vec<f64>,
    pub(crate) lu: Vec<f64>,
    pub(crate) lv: Vec<f64>,
}

impl SolutionState {
    pub fn zeros(len: usize) -> Self {
        Self {
            t: 0.0,
            u: vec![0.0; len],
            ut: vec![0.0; len],
            v: vec![0.0; len],
            vt: vec![0.0; len],
            lu: vec![0.0; len],
            lv: vec![0.0; len],
        }
    }

    /// `max(|u_t|, |v_t|)` over the mesh; `NaN` if any value is non-finite.
    pub fn max_derivative(&self) -> f64 {
        let mut m = 0.0f64;
        for (a, b) in self.ut.iter().zip(&self.vt) {
            if !(a.is_finite() && b.is_finite()) {
                return f64::NAN;
            }
            m = m.max(fabs(*a)).max(fabs(*b));
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.ut).chain(&self.v).chain(&self.vt).all(|x| x.is_finite())
    }
}

/// `|x|^p` as `exp(p ln max(|x|, 1e-300))`.
#[inline]
pub fn abs_pow(x: f64, p: f64) -> f64 {
    exp(p * log(fabs(x).max(1e-300)))
}

pub struct Stepper<'a> {
    pub config: &'a SystemConfig,
    pub mesh: &'a Mesh,
    uth: Vec<f64>,
    vth: Vec<f64>,
    // manufactured solution: w and Δw on the mesh
    w: Vec<f64>,
    lap_w: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(config: &'a SystemConfig, mesh: &'a Mesh) -> Self {
        let len = mesh.len();
        let (w, lap_w) = if config.source == SourceMode::Manufactured {
            (
                mesh.radius.iter().map(|r| bump_shape(*r, config.radius)).collect(),
                mesh.radius.iter().map(|r| bump_laplacian(config.n, *r, config.radius)).collect(),
            )
        } else {
            (Vec::new(), Vec::new())
        };
        Self { config, mesh, uth: vec![0.0; len], vth: vec![0.0; len], w, lap_w }
    }

    /// Data at `t = 0`: `ε` times the configured profiles, or the exact
    /// manufactured solution.
    pub fn initial_state(&self) -> SolutionState {
        let mut s = SolutionState::zeros(self.mesh.len());
        let (cfg, r) = (self.config, self.config.radius);
        for (i, &x) in self.mesh.radius.iter().enumerate() {
            if cfg.source == SourceMode::Manufactured {
                s.u[i] = self.w[i];
                s.ut[i] = -self.w[i];
                s.v[i] = self.w[i];
                s.vt[i] = -self.w[i];
            } else {
                s.u[i] = cfg.eps * cfg.data.u0.eval(x, r);
                s.ut[i] = cfg.eps * cfg.data.u1.eval(x, r);
                s.v[i] = cfg.eps * cfg.data.v0.eval(x, r);
                s.vt[i] = cfg.eps * cfg.data.v1.eval(x, r);
            }
        }
        self.refresh(&mut s);
        s
    }

    /// Recompute the cached Laplacians of `u` and `v`.
    pub fn refresh(&self, s: &mut SolutionState) {
        self.mesh.laplacian(&s.u, &mut s.lu);
        self.mesh.laplacian(&s.v, &mut s.lv);
    }

    /// Residual sources of the manufactured solution at node `i`.
    fn manufactured(&self, t: f64, i: usize, b: f64, p: f64) -> f64 {
        let e = exp(-t);
        let w = self.w[i];
        e * (w - self.lap_w[i] - b * w) - abs_pow(e * w, p)
    }

    fn forcing(&self, partner_t: f64, expo: f64, t: f64, i: usize, b: f64) -> f64 {
        match self.config.source {
            SourceMode::Off => 0.0,
            SourceMode::Coupled => abs_pow(partner_t, expo),
            SourceMode::Manufactured => abs_pow(partner_t, expo) + self.manufactured(t, i, b, expo),
        }
    }

    /// Advance `s` by `dt` into `out`.
    pub fn step(&mut self, s: &SolutionState, dt: f64, out: &mut SolutionState) {
        let cfg = self.config;
        let (p, q) = (cfg.p, cfg.q);
        let t0 = s.t;
        let t1 = t0 + dt;
        let (b1, b2) = (cfg.b1.b(t0), cfg.b2.b(t0));
        let (b1n, b2n) = (cfg.b1.b(t1), cfg.b2.b(t1));
        let half = 0.5 * dt;
        for i in 0..s.u.len() {
            let fu = self.forcing(s.vt[i], p, t0, i, b1);
            let fv = self.forcing(s.ut[i], q, t0, i, b2);
            self.uth[i] = s.ut[i] + half * (s.lu[i] - b1 * s.ut[i] + fu);
            self.vth[i] = s.vt[i] + half * (s.lv[i] - b2 * s.vt[i] + fv);
            out.u[i] = s.u[i] + dt * self.uth[i];
            out.v[i] = s.v[i] + dt * self.vth[i];
        }
        out.t = t1;
        self.mesh.laplacian(&out.u, &mut out.lu);
        self.mesh.laplacian(&out.v, &mut out.lv);
        let (du, dv) = (1.0 + half * b1n, 1.0 + half * b2n);
        for i in 0..s.u.len() {
            let ut_star = 2.0 * self.uth[i] - s.ut[i];
            let vt_star = 2.0 * self.vth[i] - s.vt[i];
            let fu = self.forcing(vt_star, p, t1, i, b1n);
            let fv = self.forcing(ut_star, q, t1, i, b2n);
            out.ut[i] = (self.uth[i] + half * (out.lu[i] + fu)) / du;
            out.vt[i] = (self.vth[i] + half * (out.lv[i] + fv)) / dv;
        }
    }
}

/// Modified energy `½|z_t|² + ½⟨z, Az⟩ - (dt²/8)|Az|²` with `A = -L`, which
/// velocity Verlet conserves exactly in the undamped linear case.
pub fn discrete_energy(mesh: &Mesh, z: &[f64], z_t: &[f64], lz: &[f64], dt: f64) -> f64 {
    let kinetic = 0.5 * mesh.dot(z_t, z_t);
    let potential = -0.5 * mesh.dot(z, lz);
    let correction = dt * dt / 8.0 * mesh.dot(lz, lz);
    kinetic + potential - correction
}

impl SolutionState {
    /// Modified energies of the `u` and `v` components.
    pub fn energies(&self, mesh: &Mesh, dt: f64) -> (f64, f64) {
        (
            discrete_energy(mesh, &self.u, &self.ut, &self.lu, dt),
            discrete_energy(mesh, &self.v, &self.vt, &self.lv, dt),
        )
    }
}
