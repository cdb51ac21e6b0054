//! Parabolic layer potentials on the lateral surface `Sigma_3`, cap
//! potentials on `Sigma_1`/`Sigma_2`, and the identities they satisfy.
//!
//! Time integrals are always computed with the substitution
//! `u = <A^{-1}(x-y), x-y> / (4 tau)` on geometric panels, which turns the
//! `tau^{-a} exp(-rho / tau)` profile into a smooth incomplete-gamma
//! integrand. In 2D, targets close to the boundary switch from the mesh's
//! trapezoid rule to Gauss panels graded around the closest boundary point.

mod cap;
mod density;
mod identities;
mod jump;
mod lateral;

pub use density::{DensityField, DensityGenerator, DensityPoint};
pub use identities::{
    elliptic_gauss_identity, CaloricField, ConstantField, ExponentialField, PolynomialField, StokesReport,
    StokesRepresentation, TranslatedKernel,
};
pub use jump::{write_jump_csv, JumpKind, JumpProbeReport, JUMP_LEVELS};

use rayon::prelude::*;

use crate::error::{CalorixError, Result};
use crate::geometry::{CylinderMesh, Region};
use crate::kernel::Operator;
use crate::operator::SpaceTimePoint;
use crate::quadrature::GaussLegendre;

/// Kernel applied to a lateral density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LateralKernel<'a> {
    /// `G(x - y, tau)`.
    Single,
    /// Conormal derivative in the source point, `<x - y, nu(y)> / (2 tau) G`.
    Double,
    /// Conormal derivative in the target along a fixed `A nu0`,
    /// `-<x - y, nu0> / (2 tau) G`.
    FixedConormal(&'a [f64]),
}

/// Quadrature parameters of [`LayerPotentials`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Gauss–Legendre order of every panel.
    pub panel_order: usize,
    /// Targets closer to `dOmega` than this many boundary spacings (times
    /// `sqrt(cond A)`) use graded angular panels (2D).
    pub near_field_spacings: f64,
    /// Widest angular panel in the graded rule.
    pub max_panel_width: f64,
    /// Upper limit of the substituted time variable `u`.
    pub u_max: f64,
    /// Cap integrals are truncated where the Gaussian exponent drops below
    /// `-cap_exponent`.
    pub cap_exponent: f64,
    /// Radial panels of the target-centred cap rule.
    pub cap_radial_panels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            panel_order: 12,
            near_field_spacings: 6.0,
            max_panel_width: 0.5,
            u_max: 60.0,
            cap_exponent: 45.0,
            cap_radial_panels: 4,
        }
    }
}

/// Potential evaluator bound to a mesh. The coefficient matrix is the
/// mesh's.
#[derive(Debug, Clone)]
pub struct LayerPotentials<'m> {
    mesh: &'m CylinderMesh,
    options: QuadratureOptions,
    panel: GaussLegendre,
}

impl<'m> LayerPotentials<'m> {
    pub fn new(mesh: &'m CylinderMesh) -> Self {
        Self::with_options(mesh, QuadratureOptions::default())
    }

    pub fn with_options(mesh: &'m CylinderMesh, options: QuadratureOptions) -> Self {
        Self { mesh, options, panel: GaussLegendre::new(options.panel_order) }
    }

    pub fn mesh(&self) -> &'m CylinderMesh {
        self.mesh
    }

    pub fn options(&self) -> &QuadratureOptions {
        &self.options
    }

    fn check_target(&self, target: &SpaceTimePoint) -> Result<()> {
        if target.dim() != self.mesh.dim() {
            return Err(CalorixError::DimensionMismatch { expected: self.mesh.dim(), found: target.dim() });
        }
        if !target.is_finite() {
            return Err(CalorixError::InvalidArgument("target must be finite".into()));
        }
        Ok(())
    }

    /// `int_{Sigma_3} phi(y,s) dG(x-y, t-s)/dnubar_y`.
    pub fn double_layer(&self, phi: &DensityField, target: &SpaceTimePoint) -> Result<f64> {
        self.lateral(phi, target, LateralKernel::Double, Operator::Heat)
    }

    /// `int_{Sigma_3} phi(y,s) G(x-y, t-s)`.
    pub fn single_layer(&self, phi: &DensityField, target: &SpaceTimePoint) -> Result<f64> {
        self.lateral(phi, target, LateralKernel::Single, Operator::Heat)
    }

    /// Conormal derivative of the single layer potential at the offset point
    /// `y0 + h nu(y0)` of lateral node `node`, taken along the fixed
    /// conormal of that node.
    pub fn conormal_derivative_single_layer(&self, phi: &DensityField, node: usize, h: f64) -> Result<f64> {
        let target = self.mesh.offset_point(node, h)?;
        let nu0 = &self.mesh.lateral_nodes()[node].nu;
        self.lateral(phi, &target, LateralKernel::FixedConormal(nu0), Operator::Heat)
    }

    /// Adjoint double layer: densities in `(x, t)`, target `(y, s)`,
    /// support `t > s`.
    pub fn double_layer_star(&self, phi: &DensityField, target: &SpaceTimePoint) -> Result<f64> {
        self.lateral(phi, target, LateralKernel::Double, Operator::Adjoint)
    }

    pub fn single_layer_star(&self, phi: &DensityField, target: &SpaceTimePoint) -> Result<f64> {
        self.lateral(phi, target, LateralKernel::Single, Operator::Adjoint)
    }

    pub fn conormal_derivative_single_layer_star(&self, phi: &DensityField, node: usize, h: f64) -> Result<f64> {
        let target = self.mesh.offset_point(node, h)?;
        let nu0 = &self.mesh.lateral_nodes()[node].nu;
        self.lateral(phi, &target, LateralKernel::FixedConormal(nu0), Operator::Adjoint)
    }

    /// `int_Omega phi(y) G(x - y, t)` for `phi` on `Sigma_2`; zero for `t <= 0`.
    pub fn cap_potential(&self, phi: &DensityField, target: &SpaceTimePoint) -> Result<f64> {
        phi.check(self.mesh, Region::Bottom)?;
        self.cap_term(phi, target, Operator::Heat)
    }

    /// `int_Omega phi(x) G(x - y, T - s)` for `phi` on `Sigma_1`; zero for `s >= T`.
    pub fn cap_potential_star(&self, phi: &DensityField, target: &SpaceTimePoint) -> Result<f64> {
        phi.check(self.mesh, Region::Top)?;
        self.cap_term(phi, target, Operator::Adjoint)
    }

    /// Cap integral of either cap for either operator. The time argument of
    /// the kernel is the causal distance between the target and the cap:
    /// `t` (H, `Sigma_2`), `t - T` (H, `Sigma_1`), `T - s` (H*, `Sigma_1`),
    /// `-s` (H*, `Sigma_2`).
    pub fn cap_term(&self, phi: &DensityField, target: &SpaceTimePoint, which: Operator) -> Result<f64> {
        self.check_target(target)?;
        let region = phi.region();
        if region == Region::Lateral {
            return Err(CalorixError::InvalidArgument("cap potentials need a density on sigma1 or sigma2".into()));
        }
        phi.check(self.mesh, region)?;
        let cap_time = if region == Region::Top { self.mesh.final_time() } else { 0.0 };
        let tau = match which {
            Operator::Heat => target.t - cap_time,
            Operator::Adjoint => cap_time - target.t,
        };
        Ok(self.cap_integral(phi, &target.x, tau))
    }

    /// `u = 1` in the representation formula for `H`:
    /// `DL[1] + cap_2[1] - cap_1[1]`; `1` inside `Omega_T`, `0` outside.
    pub fn partition_identity(&self, target: &SpaceTimePoint) -> Result<f64> {
        let one_lat = DensityField::constant(self.mesh, Region::Lateral, 1.0);
        let one_bottom = DensityField::constant(self.mesh, Region::Bottom, 1.0);
        let one_top = DensityField::constant(self.mesh, Region::Top, 1.0);
        let dl = self.double_layer(&one_lat, target)?;
        let bottom = self.cap_term(&one_bottom, target, Operator::Heat)?;
        let top = self.cap_term(&one_top, target, Operator::Heat)?;
        Ok(dl + bottom - top)
    }

    /// Evaluates `f` at every target in parallel, preserving order.
    pub fn evaluate_many<F>(&self, targets: &[SpaceTimePoint], f: F) -> Vec<Result<f64>>
    where
        F: Fn(&Self, &SpaceTimePoint) -> Result<f64> + Sync,
    {
        targets.par_iter().map(|p| f(self, p)).collect()
    }
}

#[cfg(test)]
mod tests;
