//! Spatial meshes, the discrete Laplacian and the matching quadrature.
//!
//! `n = 1` uses the full segment `[-X, X]`. For `n >= 2` radial functions live
//! on `r_i = i h` and the Laplacian is written in conservative flux form:
//!
//! ```text
//! (L u)_i = [r_{i+1/2}^{n-1}(u_{i+1}-u_i) - r_{i-1/2}^{n-1}(u_i-u_{i-1})] / (h V_i)
//! V_i = (r_{i+1/2}^n - r_{i-1/2}^n) / n
//! ```
//!
//! which reduces to `2n (u_1 - u_0)/h²` at the origin and is exact on `r²`.
//! The weights are the shell volumes `|S^{n-1}| V_i`, in which the operator is
//! symmetric.

use alloc::vec;
use alloc::vec::Vec;

use libm::{ceil, pow, sqrt};

use crate::eigenfn::{phi, sphere_area};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Line,
    Radial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub n: u32,
    pub geometry: Geometry,
    pub h: f64,
    /// Signed coordinate for the line, radius for radial meshes.
    pub nodes: Vec<f64>,
    /// `|x|` at every node.
    pub radius: Vec<f64>,
    /// Cell weights of `∫ f dx` (shell volumes), in which `L` is symmetric.
    pub weights: Vec<f64>,
    /// Trapezoid weights `|S^{n-1}| r^{n-1} h` (halved at the ends) used for
    /// the functionals.
    pub trap_weights: Vec<f64>,
    /// `Φ(|x_i|)`.
    pub phi: Vec<f64>,
    coef_plus: Vec<f64>,
    coef_minus: Vec<f64>,
}

impl Mesh {
    /// Mesh covering `|x| <= extent` (rounded up to a whole number of cells).
    pub fn new(n: u32, h: f64, extent: f64) -> Self {
        let cells = ceil(extent / h - 1e-9).max(2.0) as usize;
        if n <= 1 {
            Self::line(h, cells)
        } else {
            Self::radial(n, h, cells)
        }
    }

    fn line(h: f64, cells: usize) -> Self {
        let len = 2 * cells + 1;
        let nodes: Vec<f64> = (0..len).map(|i| (i as f64 - cells as f64) * h).collect();
        let radius: Vec<f64> = nodes.iter().map(|x| x.abs()).collect();
        let mut weights = vec![h; len];
        weights[0] = h / 2.0;
        weights[len - 1] = h / 2.0;
        let phi = radius.iter().map(|r| phi(1, *r)).collect();
        let c = 1.0 / (h * h);
        let mut coef_plus = vec![c; len];
        let mut coef_minus = vec![c; len];
        for v in [&mut coef_plus, &mut coef_minus] {
            v[0] = 0.0;
            v[len - 1] = 0.0;
        }
        let trap_weights = weights.clone();
        Self { n: 1, geometry: Geometry::Line, h, nodes, radius, weights, trap_weights, phi, coef_plus, coef_minus }
    }

    fn radial(n: u32, h: f64, cells: usize) -> Self {
        let len = cells + 1;
        let nodes: Vec<f64> = (0..len).map(|i| i as f64 * h).collect();
        let k = (n - 1) as f64;
        let nf = n as f64;
        let area = sphere_area(n - 1);
        // cell i is the shell [r_i - h/2, r_i + h/2], clipped to [0, r_max]
        let edge = |j: usize| (j as f64 - 0.5).max(0.0) * h;
        let volume = |i: usize| {
            let outer = if i + 1 == len { nodes[i] } else { edge(i + 1) };
            (pow(outer, nf) - pow(edge(i), nf)) / nf
        };
        let weights: Vec<f64> = (0..len).map(|i| area * volume(i)).collect();
        let mut coef_plus = vec![0.0; len];
        let mut coef_minus = vec![0.0; len];
        for i in 0..len - 1 {
            let v = volume(i) * h;
            coef_plus[i] = pow(edge(i + 1), k) / v;
            coef_minus[i] = if i == 0 { 0.0 } else { pow(edge(i), k) / v };
        }
        let mut trap_weights: Vec<f64> = nodes.iter().map(|r| area * pow(*r, k) * h).collect();
        trap_weights[len - 1] *= 0.5;
        let phi = nodes.iter().map(|r| phi(n, *r)).collect();
        Self {
            n,
            geometry: Geometry::Radial,
            h,
            radius: nodes.clone(),
            nodes,
            weights,
            trap_weights,
            phi,
            coef_plus,
            coef_minus,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest `|x|` on the mesh.
    pub fn extent(&self) -> f64 {
        self.radius.iter().cloned().fold(0.0, f64::max)
    }

    /// `out = L u`; boundary rows are zero.
    pub fn laplacian(&self, u: &[f64], out: &mut [f64]) {
        let len = self.len();
        match self.geometry {
            Geometry::Line => {
                out[0] = 0.0;
                out[len - 1] = 0.0;
            }
            Geometry::Radial => {
                out[0] = self.coef_plus[0] * (u[1] - u[0]);
                out[len - 1] = 0.0;
            }
        }
        for i in 1..len - 1 {
            out[i] = self.coef_plus[i] * (u[i + 1] - u[i]) - self.coef_minus[i] * (u[i] - u[i - 1]);
        }
    }

    /// `Σ w_i f_i`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        let mut s = crate::quad::CompensatedSum::new();
        for (w, v) in self.weights.iter().zip(f) {
            s.add(w * v);
        }
        s.value()
    }

    /// `Σ w_i f(i)` without materialising `f`.
    pub fn integrate_with<F: FnMut(usize) -> f64>(&self, mut f: F) -> f64 {
        let mut s = crate::quad::CompensatedSum::new();
        for (i, w) in self.weights.iter().enumerate() {
            s.add(w * f(i));
        }
        s.value()
    }

    /// `Σ w_i f(i)` with the trapezoid weights.
    pub fn trapezoid_with<F: FnMut(usize) -> f64>(&self, mut f: F) -> f64 {
        let mut s = crate::quad::CompensatedSum::new();
        for (i, w) in self.trap_weights.iter().enumerate() {
            s.add(w * f(i));
        }
        s.value()
    }

    /// Inner product `Σ w_i a_i b_i`.
    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        self.integrate_with(|i| a[i] * b[i])
    }
}

/// `ρ(-L) h²` of the interior operator, estimated by power iteration on a
/// small mesh; the value does not depend on `h`.
pub fn spectral_radius_h2(n: u32) -> f64 {
    if n <= 1 {
        return 4.0;
    }
    let mesh = Mesh::new(n, 1.0, 160.0);
    let len = mesh.len();
    let mut x: Vec<f64> = (0..len).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    x[len - 1] = 0.0;
    let mut y = vec![0.0; len];
    let mut rho = 0.0;
    for _ in 0..4000 {
        mesh.laplacian(&x, &mut y);
        let num = -mesh.dot(&x, &y);
        let den = mesh.dot(&x, &x);
        rho = num / den;
        let norm = sqrt(mesh.dot(&y, &y));
        for i in 0..len {
            x[i] = -y[i] / norm;
        }
    }
    rho
}

/// Largest admissible `dt/h`: `1` on the line (the numerical and physical
/// light cones coincide there), `0.9 · 2/sqrt(ρ h²)` for radial meshes.
pub fn cfl_limit(n: u32) -> f64 {
    if n <= 1 {
        1.0
    } else {
        0.9 * 2.0 / sqrt(spectral_radius_h2(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use libm::exp;

    #[test]
    fn laplacian_of_quadratic_is_exact() {
        for n in 1..6 {
            let mesh = Mesh::new(n, 0.05, 3.0);
            let u: Vec<f64> = mesh.radius.iter().map(|r| r * r).collect();
            let mut lu = vec![0.0; mesh.len()];
            mesh.laplacian(&u, &mut lu);
            for i in 1..mesh.len() - 1 {
                let expect = 2.0 * n as f64;
                assert!((lu[i] - expect).abs() <= 1e-9 * expect, "n={n} i={i}: {}", lu[i]);
            }
            if mesh.geometry == Geometry::Radial {
                assert!((lu[0] - 2.0 * n as f64).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn laplacian_second_order_on_gaussian() {
        for n in 1..5 {
            let err = |h: f64| {
                let mesh = Mesh::new(n, h, 6.0);
                let u: Vec<f64> = mesh.radius.iter().map(|r| exp(-r * r)).collect();
                let mut lu = vec![0.0; mesh.len()];
                mesh.laplacian(&u, &mut lu);
                let mut e: f64 = 0.0;
                for i in 0..mesh.len() - 1 {
                    if mesh.geometry == Geometry::Line && i == 0 {
                        continue;
                    }
                    let r = mesh.radius[i];
                    let exact = (4.0 * r * r - 2.0 * n as f64) * exp(-r * r);
                    e = e.max((lu[i] - exact).abs());
                }
                e
            };
            let ratio = err(0.04) / err(0.02);
            assert!((ratio - 4.0).abs() < 0.5, "n={n}: {ratio}");
        }
    }

    #[test]
    fn operator_symmetric_in_weighted_product() {
        for n in 2..5 {
            let mesh = Mesh::new(n, 0.1, 2.0);
            let len = mesh.len();
            let a: Vec<f64> = (0..len).map(|i| libm::sin(i as f64 * 0.7)).collect();
            let mut b: Vec<f64> = (0..len).map(|i| libm::cos(i as f64 * 0.3)).collect();
            let mut a2 = a.clone();
            a2[len - 1] = 0.0;
            b[len - 1] = 0.0;
            let (mut la, mut lb) = (vec![0.0; len], vec![0.0; len]);
            mesh.laplacian(&a2, &mut la);
            mesh.laplacian(&b, &mut lb);
            // exclude the boundary row, whose test values vanish
            let lhs: f64 = (0..len - 1).map(|i| mesh.weights[i] * la[i] * b[i]).sum();
            let rhs: f64 = (0..len - 1).map(|i| mesh.weights[i] * a2[i] * lb[i]).sum();
            assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0), "n={n}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn quadrature_of_phi_weighted_bump() {
        use crate::quad::gauss_kronrod;
        for n in 1..5 {
            let bump = |r: f64| if r < 1.0 { (1.0 - r * r).powi(4) } else { 0.0 };
            let mesh = Mesh::new(n, 0.005, 1.5);
            let q = mesh.integrate_with(|i| bump(mesh.radius[i]) * mesh.phi[i]);
            let exact = if n == 1 {
                2.0 * gauss_kronrod(|r| bump(r) * crate::eigenfn::phi(1, r), 0.0, 1.0, 1e-13, 0.0).value
            } else {
                sphere_area(n - 1)
                    * gauss_kronrod(|r| bump(r) * crate::eigenfn::phi(n, r) * pow(r, (n - 1) as f64), 0.0, 1.0, 1e-13, 0.0).value
            };
            assert!((q / exact - 1.0).abs() < 1e-4, "n={n}: {q} vs {exact}");
        }
    }

    #[test]
    fn spectral_radius_values() {
        assert_eq!(spectral_radius_h2(1), 4.0);
        let r2 = spectral_radius_h2(2);
        let r3 = spectral_radius_h2(3);
        assert!(r2 > 4.0 && r3 > r2, "{r2} {r3}");
        assert!(cfl_limit(3) < 0.9);
    }
}
