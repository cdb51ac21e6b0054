use std::f64::consts::PI;

use super::density::DensityField;
use super::LayerPotentials;
use crate::geometry::CrossSection;
use crate::kernel::{fundamental_solution, kernel_prefactor, MAX_DIM};
use crate::quadrature::GaussLegendre;

/// Distance from an interior point `x` to the boundary along the unit ray
/// `e`, for quadric sections.
fn quadric_exit(cs: &CrossSection, x: &[f64], e: &[f64]) -> Option<f64> {
    let semi: [f64; 3] = match *cs {
        CrossSection::Disk { r } | CrossSection::Ball { r } => [r, r, r],
        CrossSection::Ellipse { a, b } => [a, b, 1.0],
        CrossSection::Ellipsoid { a, b, c } => [a, b, c],
        CrossSection::Star { .. } => return None,
    };
    let (mut qa, mut qb, mut qc) = (0.0, 0.0, -1.0);
    for i in 0..x.len() {
        let (xs, es) = (x[i] / semi[i], e[i] / semi[i]);
        qa += es * es;
        qb += xs * es;
        qc += xs * xs;
    }
    let disc = (qb * qb - qa * qc).max(0.0);
    Some((-qb + disc.sqrt()) / qa)
}

impl LayerPotentials<'_> {
    /// `int_Omega phi(y) G(x - y, tau) dy`, zero for `tau <= 0`.
    ///
    /// Interior targets with a closed-form density use a polar rule centred
    /// at `x`, truncated where the Gaussian is negligible; the rays end at
    /// the boundary (quadrics) or the truncation ball must fit inside the
    /// section (stars). Every other case uses the mesh's cap rule.
    pub(crate) fn cap_integral(&self, phi: &DensityField, x: &[f64], tau: f64) -> f64 {
        if tau <= 0.0 {
            return 0.0;
        }
        let mesh = self.mesh;
        let cs = mesh.cross_section();
        let a = mesh.coefficients();
        let rho = cs.radial_coordinate(x);
        if rho >= 1.0 || !phi.has_closed_form() {
            return self.cap_mesh_rule(phi, x, tau);
        }
        let (_, lam_hi) = a.eigen_bounds();
        let r_cut = (4.0 * self.options.cap_exponent * lam_hi * tau).sqrt();
        let dist = if mesh.dim() == 2 { mesh.closest_boundary_param(x).1 } else { (1.0 - rho) * cs.inner_radius() };
        let is_quadric = !matches!(cs, CrossSection::Star { .. });
        if !is_quadric && r_cut > dist {
            return self.cap_mesh_rule(phi, x, tau);
        }
        // rays leave the section only when the truncation ball does not fit
        let beta = if r_cut > dist { (dist / cs.diameter()).sqrt().min(0.5) } else { 0.5 };
        let exit = |e: &[f64]| if r_cut > dist { quadric_exit(cs, x, e).unwrap_or(r_cut).min(r_cut) } else { r_cut };
        match mesh.dim() {
            2 => self.cap_polar_2d(phi, x, tau, beta, exit),
            _ => self.cap_polar_3d(phi, x, tau, beta, exit),
        }
    }

    fn cap_mesh_rule(&self, phi: &DensityField, x: &[f64], tau: f64) -> f64 {
        let a = self.mesh.coefficients();
        let n = x.len();
        let mut zb = [0.0; MAX_DIM];
        self.mesh
            .cap_nodes()
            .iter()
            .zip(phi.values())
            .map(|(c, v)| {
                let z = &mut zb[..n];
                for i in 0..n {
                    z[i] = x[i] - c.y[i];
                }
                v * c.weight * fundamental_solution(a, z, tau)
            })
            .sum()
    }

    /// Radial integral `int_0^R r^{n-1} G(r e, tau) phi(x + r e) dr` on
    /// equal Gauss panels.
    fn cap_ray(&self, phi: &DensityField, x: &[f64], e: &[f64], tau: f64, r_end: f64) -> f64 {
        let mesh = self.mesh;
        let n = x.len();
        let a = mesh.coefficients();
        let qe = a.inverse_quadratic_form(e);
        let panels = self.options.cap_radial_panels;
        let step = r_end / panels as f64;
        let mut y = [0.0; MAX_DIM];
        let mut acc = 0.0;
        for k in 0..panels {
            for (r, w) in self.panel.mapped(k as f64 * step, (k + 1) as f64 * step) {
                let g = (-r * r * qe / (4.0 * tau)).exp();
                if g == 0.0 {
                    continue;
                }
                for i in 0..n {
                    y[i] = x[i] + r * e[i];
                }
                acc += w * r.powi(n as i32 - 1) * g * phi.cap_value(mesh, &y[..n]);
            }
        }
        acc
    }

    fn cap_polar_2d<E: Fn(&[f64]) -> f64>(&self, phi: &DensityField, x: &[f64], tau: f64, beta: f64, exit: E) -> f64 {
        let m = (((40.0 / beta).ceil() as usize).clamp(64, 4096) + 1) & !1;
        let h = 2.0 * PI / m as f64;
        let mut acc = 0.0;
        for j in 0..m {
            let (s, c) = (j as f64 * h).sin_cos();
            let e = [c, s];
            acc += self.cap_ray(phi, x, &e, tau, exit(&e));
        }
        let a = self.mesh.coefficients();
        h * acc * kernel_prefactor(a) / tau
    }

    fn cap_polar_3d<E: Fn(&[f64]) -> f64>(&self, phi: &DensityField, x: &[f64], tau: f64, beta: f64, exit: E) -> f64 {
        let m = (((24.0 / beta).ceil() as usize).clamp(32, 256) + 1) & !1;
        let polar = GaussLegendre::new(m / 2);
        let h = 2.0 * PI / m as f64;
        let mut acc = 0.0;
        for (theta, wt) in polar.mapped(0.0, PI) {
            let (st, ct) = theta.sin_cos();
            for j in 0..m {
                let (s, c) = (j as f64 * h).sin_cos();
                let e = [st * c, st * s, ct];
                acc += wt * st * self.cap_ray(phi, x, &e, tau, exit(&e));
            }
        }
        let a = self.mesh.coefficients();
        h * acc * kernel_prefactor(a) / tau.powf(1.5)
    }
}
