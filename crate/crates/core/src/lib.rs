//! Numerical laboratory for finite-time blow-up of the weakly coupled system
//!
//! ```text
//! u_tt - Δu + b1(t) u_t = |v_t|^p
//! v_tt - Δv + b2(t) v_t = |u_t|^q
//! ```
//!
//! with scattering (summable) damping. The crate is `no_std` and only needs
//! `alloc`; file formats, the CLI and parallel sweeps live in the `blowlab`
//! companion crate.
//!
//! Module map:
//!
//! - [`critcurve`]: the critical curve `Υ(n,p,q) = 0` and regime classification.
//! - [`multiplier`]: damping profiles `b(t)` and multipliers `m(t)`.
//! - [`eigenfn`]: the positive Laplace eigenfunction `Φ` and `Ψ = e^{-t}Φ`.
//! - [`odekit`]: Kato's lemma, the ODE surrogate of the functional frame,
//!   slicing sequences, adaptive integration with blow-up brackets.
//! - [`pdesolver`]: finite-difference evolution (1D and radial) with blow-up
//!   detection and lifespan estimation on refinement ladders.
//! - [`functionals`]: quadrature of `U1, V1, F, G` along trajectories and
//!   audits of their lower bounds.
//! - [`harness`]: ε-sweep plans and scaling-law fits.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod critcurve;
pub mod eigenfn;
pub mod functionals;
pub mod harness;
pub mod multiplier;
pub mod odekit;
pub mod pdesolver;
pub mod quad;
