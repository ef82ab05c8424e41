//! The positive eigenfunction `Φ` of the Laplacian (`ΔΦ = Φ`), the test
//! function `Ψ(t,x) = e^{-t} Φ(x)` and the ball integral of `Ψ`.
//!
//! For `n >= 2` the spherical mean `∫_{S^{n-1}} e^{ω·x} dS_ω` depends on
//! `r = |x|` only and reduces to
//! `|S^{n-2}| ∫_0^π e^{r cos θ} sin^{n-2} θ dθ`.

use core::f64::consts::PI;

use libm::{cosh, cos, exp, pow, sin, sinh, tgamma};

use crate::quad::gauss_kronrod;

const PHI_REL_TOL: f64 = 1e-13;
const BALL_REL_TOL: f64 = 1e-11;

/// Surface measure of the unit sphere `S^k ⊂ R^{k+1}`; `|S^0| = 2`.
pub fn sphere_area(k: u32) -> f64 {
    let h = (k as f64 + 1.0) / 2.0;
    2.0 * pow(PI, h) / tgamma(h)
}

/// `Φ` at radius `r` in dimension `n` (for `n = 1`, `r = |x|`).
pub fn phi(n: u32, r: f64) -> f64 {
    let r = r.abs();
    match n {
        0 | 1 => 2.0 * cosh(r),
        3 => {
            if r < 1e-4 {
                4.0 * PI * (1.0 + r * r / 6.0 + r * r * r * r / 120.0)
            } else {
                4.0 * PI * sinh(r) / r
            }
        }
        _ => exp(r) * phi_scaled(n, r),
    }
}

/// `e^{-r} Φ(r)` by quadrature, for `n >= 2`. Factoring out `e^r` keeps the
/// integrand in `(0, 1]`.
fn phi_scaled(n: u32, r: f64) -> f64 {
    let k = n as i32 - 2;
    let integrand = |theta: f64| exp(r * (cos(theta) - 1.0)) * libm::pow(sin(theta), k as f64);
    let q = gauss_kronrod(integrand, 0.0, PI, PHI_REL_TOL, 0.0);
    sphere_area(n - 2) * q.value
}

/// `Φ` evaluated by the spherical quadrature for every `n >= 2`, bypassing
/// closed forms. Used as a cross-check.
pub fn phi_quadrature(n: u32, r: f64) -> f64 {
    if n < 2 {
        return phi(n, r);
    }
    exp(r.abs()) * phi_scaled(n, r.abs())
}

/// `Ψ(t, r) = e^{-t} Φ(r)`.
pub fn psi(n: u32, t: f64, r: f64) -> f64 {
    exp(-t) * phi(n, r)
}

/// `∫_{B_{R+t}} Ψ(t, x) dx`.
pub fn psi_ball_integral(n: u32, t: f64, radius: f64) -> f64 {
    let rho = radius + t;
    if n <= 1 {
        return 4.0 * sinh(rho) * exp(-t);
    }
    let area = sphere_area(n - 1);
    let q = gauss_kronrod(
        |r| phi(n, r) * pow(r, (n - 1) as f64),
        0.0,
        rho,
        BALL_REL_TOL,
        0.0,
    );
    exp(-t) * area * q.value
}

/// Radial Laplacian `f'' + (n-1)/r f'` by second-order central differences.
/// At `r = 0` the removable singularity is handled with `n f''(0)`, i.e.
/// `2n (f(h) - f(0)) / h²` for even `f`.
pub fn radial_laplacian_fd<F: Fn(f64) -> f64>(f: F, n: u32, r: f64, h: f64) -> f64 {
    if r == 0.0 {
        return 2.0 * n as f64 * (f(h) - f(0.0)) / (h * h);
    }
    let fm = f(r - h);
    let f0 = f(r);
    let fp = f(r + h);
    let d2 = (fp - 2.0 * f0 + fm) / (h * h);
    if n <= 1 {
        return d2;
    }
    d2 + (n as f64 - 1.0) / r * (fp - fm) / (2.0 * h)
}

/// `|Δ_h Φ - Φ| / Φ` at radius `r`.
pub fn eigen_residual(n: u32, r: f64, h: f64) -> f64 {
    let f = |s: f64| phi(n, s);
    (radial_laplacian_fd(f, n, r, h) - phi(n, r)).abs() / phi(n, r)
}

/// Radial test function for a fixed dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestFunction {
    pub n: u32,
}

impl TestFunction {
    pub fn new(n: u32) -> Self {
        Self { n: n.max(1) }
    }

    pub fn phi(&self, r: f64) -> f64 {
        phi(self.n, r)
    }

    pub fn psi(&self, t: f64, r: f64) -> f64 {
        psi(self.n, t, r)
    }

    pub fn ball_integral(&self, t: f64, radius: f64) -> f64 {
        psi_ball_integral(self.n, t, radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    /// `(2π)^{n/2} 2^{-ν} Σ (r/2)^{2k} / (k! Γ(k + n/2))`, `ν = n/2 - 1`.
    fn phi_bessel_series(n: u32, r: f64) -> f64 {
        let nu = n as f64 / 2.0 - 1.0;
        let mut sum = 0.0;
        let mut term = 1.0 / tgamma(n as f64 / 2.0);
        for k in 0..200 {
            sum += term;
            let kf = k as f64;
            term *= (r / 2.0) * (r / 2.0) / ((kf + 1.0) * (kf + n as f64 / 2.0));
            if term < 1e-18 * sum {
                break;
            }
        }
        pow(2.0 * PI, n as f64 / 2.0) * pow(2.0, -nu) * sum
    }

    /// Monte Carlo estimate of `∫_{S^{n-1}} e^{ω_1 r} dS` with a small LCG
    /// and Box–Muller normals.
    fn phi_monte_carlo(n: u32, r: f64, samples: usize) -> f64 {
        let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
        let mut uniform = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 + 0.5) / (1u64 << 53) as f64
        };
        let mut acc = 0.0;
        let mut g: Vec<f64> = alloc::vec![0.0; n as usize];
        for _ in 0..samples {
            for i in 0..n as usize {
                let (u1, u2) = (uniform(), uniform());
                g[i] = libm::sqrt(-2.0 * libm::log(u1)) * cos(2.0 * PI * u2);
            }
            let norm = libm::sqrt(g.iter().map(|x| x * x).sum::<f64>());
            acc += exp(r * g[0] / norm);
        }
        sphere_area(n - 1) * acc / samples as f64
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(1, 0.0), 2.0);
        assert!((phi(2, 0.0) - 2.0 * PI).abs() < 1e-13);
        assert!((phi(3, 1.0) - 14.768_013_745_765_29).abs() < 1e-9);
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(0) - 2.0).abs() < 1e-14);
        assert!((sphere_area(1) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn quadrature_matches_closed_form_and_series() {
        for &r in &[0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 12.0] {
            let closed = 4.0 * PI * if r == 0.0 { 1.0 } else { sinh(r) / r };
            let q = phi_quadrature(3, r);
            assert!((q / closed - 1.0).abs() < 1e-12, "r={r}");
            for n in 2..7 {
                let s = phi_bessel_series(n, r);
                let q = phi_quadrature(n, r);
                assert!((q / s - 1.0).abs() < 1e-11, "n={n} r={r}: {q} vs {s}");
            }
        }
    }

    #[test]
    fn monte_carlo_oracle_agrees() {
        for &n in &[2u32, 3, 4] {
            let mc = phi_monte_carlo(n, 1.0, 200_000);
            let ph = phi(n, 1.0);
            assert!((mc / ph - 1.0).abs() < 1e-2, "n={n}: {mc} vs {ph}");
        }
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi(1, 0.0, 0.0), 2.0);
        assert!((psi(2, core::f64::consts::LN_2, 0.0) - PI).abs() < 1e-13);
        assert!((psi(3, 1.0, 1.0) - exp(-1.0) * 4.0 * PI * sinh(1.0)).abs() < 1e-12);
        assert!((psi(3, 1.0, 1.0) - 5.432_848_644).abs() < 1e-8);
    }

    #[test]
    fn ball_integral_examples() {
        let v = psi_ball_integral(1, 0.0, 1.0);
        assert!((v - 2.0 * (core::f64::consts::E - exp(-1.0))).abs() < 1e-13);
        let r = 1e-3;
        let v = psi_ball_integral(2, 0.0, r);
        assert!((v / (PI * r * r * 2.0 * PI) - 1.0).abs() < 1e-6);
        // n = 3 closed form: 16π² ∫_0^ρ r sinh r dr = 16π² (ρ cosh ρ - sinh ρ)
        for &t in &[0.0, 1.0, 5.0, 20.0] {
            let rho = 1.0 + t;
            let exact = exp(-t) * 16.0 * PI * PI * (rho * cosh(rho) - sinh(rho));
            let v = psi_ball_integral(3, t, 1.0);
            assert!((v / exact - 1.0).abs() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn eigenfunction_identity() {
        for n in 1..5 {
            for &r in &[0.0, 0.1, 1.0, 5.0] {
                let e1 = eigen_residual(n, r, 1e-2);
                let e2 = eigen_residual(n, r, 5e-3);
                assert!(e1 < 1e-4, "n={n} r={r}: {e1}");
                if e1 > 1e-9 {
                    let ratio = e1 / e2;
                    assert!((ratio - 4.0).abs() < 0.5, "n={n} r={r}: ratio {ratio}");
                }
            }
        }
    }

    #[test]
    fn psi_time_derivative() {
        let h = 1e-4;
        for n in 1..5 {
            for &(t, r) in &[(0.5, 0.3), (2.0, 3.0)] {
                let dt = (psi(n, t + h, r) - psi(n, t - h, r)) / (2.0 * h);
                assert!((dt + psi(n, t, r)).abs() < 1e-6 * psi(n, t, r));
            }
        }
    }

    #[test]
    fn ball_ratio_is_bracketed() {
        for n in 2..5u32 {
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for i in 0..=50 {
                let t = i as f64;
                let ratio = psi_ball_integral(n, t, 1.0) / pow(1.0 + t, (n as f64 - 1.0) / 2.0);
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
            assert!(lo > 0.0 && hi / lo < 50.0, "n={n}: [{lo}, {hi}]");
        }
    }

    proptest! {
        #[test]
        fn phi_positive_and_increasing(n in 1u32..7, r in 0.0f64..30.0, dr in 1e-3f64..1.0) {
            let a = phi(n, r);
            prop_assert!(a > 0.0);
            prop_assert!(phi(n, r + dr) > a);
        }
    }
}
