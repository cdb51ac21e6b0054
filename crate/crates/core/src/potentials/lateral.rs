use std::f64::consts::PI;

use super::density::{DensityField, LateralSample};
use super::{LateralKernel, LayerPotentials};
use crate::error::{CalorixError, Result};
use crate::geometry::Region;
use crate::kernel::{kernel_prefactor, Operator, MAX_DIM};
use crate::operator::SpaceTimePoint;
use crate::quadrature::{graded_breakpoints, GaussLegendre};

/// Targets within this distance of `Sigma_3` are rejected.
pub const BOUNDARY_EXCLUSION: f64 = 1e-10;

/// Range `[tau_lo, tau_hi]` of the kernel's time argument over the lateral
/// surface, or `None` when the target has no causal support.
pub(crate) fn causal_window(which: Operator, t: f64, t_final: f64) -> Option<(f64, f64)> {
    match which {
        Operator::Heat if t > 0.0 => Some(((t - t_final).max(0.0), t)),
        Operator::Adjoint if t < t_final => Some(((-t).max(0.0), t_final - t)),
        _ => None,
    }
}

#[inline]
fn source_time(which: Operator, t: f64, tau: f64) -> f64 {
    match which {
        Operator::Heat => t - tau,
        Operator::Adjoint => t + tau,
    }
}

/// `int_{tau_lo}^{tau_hi} tau^{-a} exp(-rho / tau) f(tau) dtau`, computed as
/// `rho^{1-a} int u^{a-2} e^{-u} f(rho / u) du` on panels of ratio 2 in `u`.
pub(crate) fn time_integral<F: Fn(f64) -> f64>(
    gl: &GaussLegendre,
    a: f64,
    rho: f64,
    tau_lo: f64,
    tau_hi: f64,
    u_max: f64,
    f: F,
) -> f64 {
    if rho <= 0.0 || tau_hi <= tau_lo {
        return 0.0;
    }
    let u_lo = rho / tau_hi;
    let u_hi = if tau_lo > 0.0 { (rho / tau_lo).min(u_max) } else { u_max };
    if u_lo >= u_hi {
        return 0.0;
    }
    let mut acc = 0.0;
    let mut left = u_lo;
    while left < u_hi {
        let right = (2.0 * left).min(u_hi);
        for (u, w) in gl.mapped(left, right) {
            acc += w * u.powf(a - 2.0) * (-u).exp() * f(rho / u);
        }
        left = right;
    }
    rho.powf(1.0 - a) * acc
}

impl LayerPotentials<'_> {
    /// Any lateral potential: the kernel `kernel` applied to `phi` on
    /// `Sigma_3`, with the causal direction of `which`.
    pub fn lateral(
        &self,
        phi: &DensityField,
        target: &SpaceTimePoint,
        kernel: LateralKernel<'_>,
        which: Operator,
    ) -> Result<f64> {
        self.check_target(target)?;
        phi.check(self.mesh, Region::Lateral)?;
        let mesh = self.mesh;
        let n = mesh.dim();
        let t = target.t;
        let Some((tau_lo, tau_hi)) = causal_window(which, t, mesh.final_time()) else {
            return Ok(0.0);
        };
        let cs = mesh.cross_section();
        let closest = if n == 2 { Some(mesh.closest_boundary_param(&target.x)) } else { None };
        let dist = match closest {
            Some((_, d)) => d,
            None => (cs.radial_coordinate(&target.x) - 1.0).abs() * cs.inner_radius(),
        };
        if dist < BOUNDARY_EXCLUSION && tau_lo == 0.0 {
            return Err(CalorixError::TargetOnBoundary { distance: dist });
        }

        let a = mesh.coefficients();
        let x = &target.x;
        let (lam_lo, lam_hi) = a.eigen_bounds();
        let exponent = match kernel {
            LateralKernel::Single => n as f64 / 2.0,
            LateralKernel::Double | LateralKernel::FixedConormal(_) => n as f64 / 2.0 + 1.0,
        };
        let contribution = |sample: LateralSample<'_>| -> f64 {
            let mut zb = [0.0; MAX_DIM];
            let z = &mut zb[..n];
            for i in 0..n {
                z[i] = x[i] - sample.y[i];
            }
            let factor = match kernel {
                LateralKernel::Single => 1.0,
                LateralKernel::Double => 0.5 * dot(z, sample.nu),
                LateralKernel::FixedConormal(nu0) => -0.5 * dot(z, nu0),
            };
            if factor == 0.0 {
                return 0.0;
            }
            let profile = phi.lateral_profile(mesh, sample);
            if profile.is_zero() {
                return 0.0;
            }
            let rho = 0.25 * a.inverse_quadratic_form(z);
            factor
                * time_integral(&self.panel, exponent, rho, tau_lo, tau_hi, self.options.u_max, |tau| {
                    profile.at(source_time(which, t, tau))
                })
        };

        let spacing = mesh.max_boundary_spacing();
        let near = closest.filter(|(_, d)| *d < self.options.near_field_spacings * spacing * (lam_hi / lam_lo).sqrt());
        let mut acc = 0.0;
        match near {
            None => {
                for (bi, bp) in mesh.boundary_points().iter().enumerate() {
                    acc += bp.weight
                        * contribution(LateralSample {
                            param: bp.param,
                            boundary_index: Some(bi),
                            y: &bp.y,
                            nu: &bp.nu,
                            conormal: &bp.conormal,
                        });
                }
            }
            Some((param0, d)) => {
                let theta0 = param0[0];
                let speed = cs.inward_normal(param0).1;
                let width = (d.min(2.0 * (lam_hi * tau_hi).sqrt()).max(1e-14) / speed).min(PI);
                for (lo, hi) in self.angular_panels(theta0, width) {
                    for (theta, w) in self.panel.mapped(lo, hi) {
                        let param = [theta, 0.0];
                        let sp = cs.surface(param);
                        let (nu3, jac) = cs.inward_normal(param);
                        let mut conormal = [0.0; 2];
                        a.apply(&nu3[..2], &mut conormal);
                        acc += w
                            * jac
                            * contribution(LateralSample {
                                param,
                                boundary_index: None,
                                y: &sp.y[..2],
                                nu: &nu3[..2],
                                conormal: &conormal,
                            });
                    }
                }
            }
        }
        Ok(kernel_prefactor(a) * acc)
    }

    /// Panels covering one period around `theta0`, graded geometrically
    /// from half-width `width` and capped at the maximal panel width.
    fn angular_panels(&self, theta0: f64, width: f64) -> Vec<(f64, f64)> {
        let breaks = graded_breakpoints(theta0 - PI, theta0 + PI, theta0, width);
        let max_w = self.options.max_panel_width;
        let mut panels = Vec::with_capacity(breaks.len() + 16);
        for pair in breaks.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            let pieces = ((hi - lo) / max_w).ceil().max(1.0) as usize;
            let step = (hi - lo) / pieces as f64;
            for k in 0..pieces {
                panels.push((lo + k as f64 * step, if k + 1 == pieces { hi } else { lo + (k + 1) as f64 * step }));
            }
        }
        panels
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
