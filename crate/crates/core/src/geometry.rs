//! Cylinders `Omega_T = Omega x (0, T)` over star-shaped cross-sections and
//! their boundary quadrature rules.
//!
//! The boundary splits into the top cap `Sigma_1` (`t = T`), the bottom cap
//! `Sigma_2` (`t = 0`) and the lateral surface `Sigma_3 = dOmega x (0, T)`.
//! Normals stored on the mesh point INTO `Omega`; the conormal is
//! `(A nu, 0)`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CalorixError, Result};
use crate::operator::{CoefficientMatrix, SpaceTimePoint};
use crate::quadrature::GaussLegendre;

/// Tolerance of [`CylinderMesh::locate`] in the radial coordinate and in time.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// Star-shaped (about the origin) cross-section with a smooth boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CrossSection {
    Disk { r: f64 },
    Ellipse { a: f64, b: f64 },
    /// `r(theta) = r0 + sum_k cos[k-1] cos(k theta) + sin[k-1] sin(k theta)`.
    Star {
        r0: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    Ball { r: f64 },
    Ellipsoid { a: f64, b: f64, c: f64 },
}

impl fmt::Display for CrossSection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CrossSection::Disk { r } => write!(f, "disk({r})"),
            CrossSection::Ellipse { a, b } => write!(f, "ellipse({a},{b})"),
            CrossSection::Star { r0, cos, sin } => write!(f, "star({r0};{cos:?};{sin:?})"),
            CrossSection::Ball { r } => write!(f, "ball3d({r})"),
            CrossSection::Ellipsoid { a, b, c } => write!(f, "ellipsoid3d({a},{b},{c})"),
        }
    }
}

/// A point of `dOmega` with its first derivatives in the parametrization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub y: [f64; 3],
    pub d1: [f64; 3],
    pub d2: [f64; 3],
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl CrossSection {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CalorixError::InvalidGeometry(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match self {
            CrossSection::Disk { r } | CrossSection::Ball { r } => positive("r", *r),
            CrossSection::Ellipse { a, b } => positive("a", *a).and(positive("b", *b)),
            CrossSection::Ellipsoid { a, b, c } => positive("a", *a).and(positive("b", *b)).and(positive("c", *c)),
            CrossSection::Star { r0, cos, sin } => {
                let spread: f64 = cos.iter().chain(sin).map(|c| c.abs()).sum();
                if (r0 - spread).is_nan() || r0 - spread <= 0.0 || cos.iter().chain(sin).any(|c| !c.is_finite()) {
                    return Err(CalorixError::InvalidGeometry(format!(
                        "star radius r0 - sum|coeffs| = {} must be positive",
                        r0 - spread
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            CrossSection::Disk { .. } | CrossSection::Ellipse { .. } | CrossSection::Star { .. } => 2,
            CrossSection::Ball { .. } | CrossSection::Ellipsoid { .. } => 3,
        }
    }

    fn star_radius(r0: f64, cos: &[f64], sin: &[f64], theta: f64) -> (f64, f64) {
        let mut r = r0;
        let mut dr = 0.0;
        for (k, c) in cos.iter().enumerate() {
            let kf = (k + 1) as f64;
            r += c * (kf * theta).cos();
            dr -= c * kf * (kf * theta).sin();
        }
        for (k, s) in sin.iter().enumerate() {
            let kf = (k + 1) as f64;
            r += s * (kf * theta).sin();
            dr += s * kf * (kf * theta).cos();
        }
        (r, dr)
    }

    /// Boundary point for parameters `(theta, _)` in 2D or `(phi, lambda)`
    /// (polar, azimuth) in 3D, with the parameter derivatives. In 2D only
    /// `d1` is meaningful.
    pub fn surface(&self, p: [f64; 2]) -> SurfacePoint {
        match self {
            CrossSection::Disk { r } => {
                let (s, c) = p[0].sin_cos();
                SurfacePoint { y: [r * c, r * s, 0.0], d1: [-r * s, r * c, 0.0], d2: [0.0; 3] }
            }
            CrossSection::Ellipse { a, b } => {
                let (s, c) = p[0].sin_cos();
                SurfacePoint { y: [a * c, b * s, 0.0], d1: [-a * s, b * c, 0.0], d2: [0.0; 3] }
            }
            CrossSection::Star { r0, cos, sin } => {
                let (r, dr) = Self::star_radius(*r0, cos, sin, p[0]);
                let (s, c) = p[0].sin_cos();
                SurfacePoint { y: [r * c, r * s, 0.0], d1: [dr * c - r * s, dr * s + r * c, 0.0], d2: [0.0; 3] }
            }
            CrossSection::Ball { r } => Self::ellipsoid_surface(*r, *r, *r, p),
            CrossSection::Ellipsoid { a, b, c } => Self::ellipsoid_surface(*a, *b, *c, p),
        }
    }

    fn ellipsoid_surface(a: f64, b: f64, c: f64, p: [f64; 2]) -> SurfacePoint {
        let (sp, cp) = p[0].sin_cos();
        let (sl, cl) = p[1].sin_cos();
        SurfacePoint {
            y: [a * sp * cl, b * sp * sl, c * cp],
            d1: [a * cp * cl, b * cp * sl, -c * sp],
            d2: [-a * sp * sl, b * sp * cl, 0.0],
        }
    }

    /// Inward unit normal and surface (arc-length or area) element at a
    /// boundary parameter.
    pub fn inward_normal(&self, p: [f64; 2]) -> ([f64; 3], f64) {
        let sp = self.surface(p);
        match self.dim() {
            2 => {
                let len = (sp.d1[0] * sp.d1[0] + sp.d1[1] * sp.d1[1]).sqrt();
                ([-sp.d1[1] / len, sp.d1[0] / len, 0.0], len)
            }
            _ => {
                let c = cross(&sp.d1, &sp.d2);
                let len = norm(&c);
                // d1 x d2 points outward for the (polar, azimuth) chart
                ([-c[0] / len, -c[1] / len, -c[2] / len], len)
            }
        }
    }

    /// Cap parametrization `y = rho * b(params)`, `rho` in `(0, 1)`,
    /// returning the point and the Jacobian of `(rho, params) -> y`.
    pub fn cap_point(&self, rho: f64, p: [f64; 2]) -> ([f64; 3], f64) {
        let sp = self.surface(p);
        let y = [rho * sp.y[0], rho * sp.y[1], rho * sp.y[2]];
        let jac = match self.dim() {
            2 => rho * (sp.y[0] * sp.d1[1] - sp.y[1] * sp.d1[0]).abs(),
            _ => {
                let c = cross(&sp.d1, &sp.d2);
                rho * rho * (sp.y[0] * c[0] + sp.y[1] * c[1] + sp.y[2] * c[2]).abs()
            }
        };
        (y, jac)
    }

    /// Inverse of [`CrossSection::cap_point`]: `(rho, params)` with
    /// `rho < 1` inside, `rho = 1` on the boundary.
    pub fn cap_coordinates(&self, x: &[f64]) -> (f64, [f64; 2]) {
        let wrap = |v: f64| v.rem_euclid(2.0 * PI);
        match self {
            CrossSection::Disk { r } => {
                let theta = wrap(x[1].atan2(x[0]));
                ((x[0] * x[0] + x[1] * x[1]).sqrt() / r, [theta, 0.0])
            }
            CrossSection::Ellipse { a, b } => {
                let (u, v) = (x[0] / a, x[1] / b);
                ((u * u + v * v).sqrt(), [wrap(v.atan2(u)), 0.0])
            }
            CrossSection::Star { r0, cos, sin } => {
                let theta = wrap(x[1].atan2(x[0]));
                let (r, _) = Self::star_radius(*r0, cos, sin, theta);
                ((x[0] * x[0] + x[1] * x[1]).sqrt() / r, [theta, 0.0])
            }
            CrossSection::Ball { r } => Self::ellipsoid_coordinates([x[0] / r, x[1] / r, x[2] / r]),
            CrossSection::Ellipsoid { a, b, c } => Self::ellipsoid_coordinates([x[0] / a, x[1] / b, x[2] / c]),
        }
    }

    fn ellipsoid_coordinates(u: [f64; 3]) -> (f64, [f64; 2]) {
        let rho = norm(&u);
        if rho == 0.0 {
            return (0.0, [0.0, 0.0]);
        }
        let phi = (u[2] / rho).clamp(-1.0, 1.0).acos();
        let lambda = u[1].atan2(u[0]).rem_euclid(2.0 * PI);
        (rho, [phi, lambda])
    }

    /// `rho(x)`: `< 1` inside, `1` on the boundary, `> 1` outside.
    pub fn radial_coordinate(&self, x: &[f64]) -> f64 {
        self.cap_coordinates(x).0
    }

    /// Diameter of the cross-section (upper bound for stars).
    pub fn diameter(&self) -> f64 {
        match self {
            CrossSection::Disk { r } | CrossSection::Ball { r } => 2.0 * r,
            CrossSection::Ellipse { a, b } => 2.0 * a.max(*b),
            CrossSection::Ellipsoid { a, b, c } => 2.0 * a.max(*b).max(*c),
            CrossSection::Star { r0, cos, sin } => 2.0 * (r0 + cos.iter().chain(sin).map(|c| c.abs()).sum::<f64>()),
        }
    }

    /// Radius of a ball about the origin contained in the section.
    pub fn inner_radius(&self) -> f64 {
        match self {
            CrossSection::Disk { r } | CrossSection::Ball { r } => *r,
            CrossSection::Ellipse { a, b } => a.min(*b),
            CrossSection::Ellipsoid { a, b, c } => a.min(*b).min(*c),
            CrossSection::Star { r0, cos, sin } => r0 - cos.iter().chain(sin).map(|c| c.abs()).sum::<f64>(),
        }
    }

    /// Closed-form area (2D) or volume (3D) where available.
    pub fn measure(&self) -> Option<f64> {
        match self {
            CrossSection::Disk { r } => Some(PI * r * r),
            CrossSection::Ellipse { a, b } => Some(PI * a * b),
            CrossSection::Ball { r } => Some(4.0 / 3.0 * PI * r * r * r),
            CrossSection::Ellipsoid { a, b, c } => Some(4.0 / 3.0 * PI * a * b * c),
            CrossSection::Star { r0, cos, sin } => {
                // (1/2) int r^2 dtheta
                let sq: f64 = cos.iter().chain(sin).map(|c| c * c).sum();
                Some(PI * r0 * r0 + 0.5 * PI * sq)
            }
        }
    }

    /// Closed-form perimeter (2D) or surface area (3D) where available.
    pub fn boundary_measure(&self) -> Option<f64> {
        match self {
            CrossSection::Disk { r } => Some(2.0 * PI * r),
            CrossSection::Ball { r } => Some(4.0 * PI * r * r),
            _ => None,
        }
    }
}

/// The three parts of the parabolic boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    /// `Sigma_1`, `t = T`.
    #[serde(rename = "sigma1")]
    Top,
    /// `Sigma_2`, `t = 0`.
    #[serde(rename = "sigma2")]
    Bottom,
    /// `Sigma_3`, the lateral surface.
    #[serde(rename = "sigma3")]
    Lateral,
}

impl Region {
    pub fn label(self) -> &'static str {
        match self {
            Region::Top => "sigma1",
            Region::Bottom => "sigma2",
            Region::Lateral => "sigma3",
        }
    }
}

/// Result of [`CylinderMesh::locate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Interior,
    Exterior,
    Boundary(Region),
}

/// Resolution parameters of a [`CylinderMesh`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshResolution {
    pub m_angular: usize,
    pub m_time: usize,
    pub m_radial: usize,
}

impl MeshResolution {
    pub fn new(m_angular: usize, m_time: usize, m_radial: usize) -> Self {
        Self { m_angular, m_time, m_radial }
    }

    /// Every count doubled.
    pub fn refined(&self) -> Self {
        Self::new(2 * self.m_angular, 2 * self.m_time, 2 * self.m_radial)
    }
}

/// A spatial quadrature point of `dOmega`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    pub param: [f64; 2],
    pub y: Vec<f64>,
    /// Inward unit normal.
    pub nu: Vec<f64>,
    /// `A nu`.
    pub conormal: Vec<f64>,
    /// Surface element `|dy/dparam|`.
    pub jacobian: f64,
    /// Spatial quadrature weight (parameter weight times jacobian).
    pub weight: f64,
}

/// Quadrature node on `Sigma_3`.
#[derive(Debug, Clone, PartialEq)]
pub struct LateralNode {
    pub point: SpaceTimePoint,
    /// Inward unit normal (spatial).
    pub nu: Vec<f64>,
    /// Conormal `(A nu, 0)`; length `n + 1`.
    pub conormal: Vec<f64>,
    pub weight: f64,
    pub boundary_index: usize,
    pub time_index: usize,
}

/// Quadrature node of a cap (shared by `Sigma_1` and `Sigma_2`).
#[derive(Debug, Clone, PartialEq)]
pub struct CapNode {
    pub y: Vec<f64>,
    pub weight: f64,
    pub radial_index: usize,
    pub angular_index: usize,
}

/// Tensor-product grid of the boundary parametrization.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularGrid {
    /// Polar Gauss nodes on `(0, pi)` (3D only; empty in 2D).
    pub polar_nodes: Vec<f64>,
    pub polar_weights: Vec<f64>,
    /// Periodic trapezoid count (theta in 2D, azimuth in 3D).
    pub periodic: usize,
}

impl AngularGrid {
    pub fn len(&self) -> usize {
        self.polar_nodes.len().max(1) * self.periodic
    }

    pub fn is_empty(&self) -> bool {
        self.periodic == 0
    }

    pub fn param(&self, idx: usize) -> [f64; 2] {
        let h = 2.0 * PI / self.periodic as f64;
        if self.polar_nodes.is_empty() {
            [idx as f64 * h, 0.0]
        } else {
            let ip = idx / self.periodic;
            let ia = idx % self.periodic;
            [self.polar_nodes[ip], ia as f64 * h]
        }
    }

    pub fn weight(&self, idx: usize) -> f64 {
        let h = 2.0 * PI / self.periodic as f64;
        if self.polar_weights.is_empty() {
            h
        } else {
            self.polar_weights[idx / self.periodic] * h
        }
    }
}

/// Boundary quadrature of `Omega_T`.
#[derive(Debug, Clone)]
pub struct CylinderMesh {
    cross_section: CrossSection,
    coefficients: CoefficientMatrix,
    final_time: f64,
    resolution: MeshResolution,
    angular: AngularGrid,
    boundary: Vec<BoundaryPoint>,
    time_nodes: Vec<f64>,
    time_weights: Vec<f64>,
    time_rule: GaussLegendre,
    time_bary: Vec<f64>,
    radial_nodes: Vec<f64>,
    radial_weights: Vec<f64>,
    radial_rule: GaussLegendre,
    radial_bary: Vec<f64>,
    polar_bary: Vec<f64>,
    lateral: Vec<LateralNode>,
    cap: Vec<CapNode>,
}

/// Builds the boundary quadrature: periodic trapezoid in the angle (2D) or
/// Gauss polar x trapezoid azimuth (3D), Gauss–Legendre in time on
/// `(0, T)`, and Gauss radial x the angular rule on the caps.
pub fn build_mesh(
    cross_section: &CrossSection,
    a: &CoefficientMatrix,
    final_time: f64,
    resolution: MeshResolution,
) -> Result<CylinderMesh> {
    cross_section.validate()?;
    let n = cross_section.dim();
    if a.dim() != n {
        return Err(CalorixError::DimensionMismatch { expected: n, found: a.dim() });
    }
    if !(final_time > 0.0 && final_time.is_finite()) {
        return Err(CalorixError::InvalidArgument(format!("final time must be positive, got {final_time}")));
    }
    let MeshResolution { m_angular, m_time, m_radial } = resolution;
    if m_angular < 2 || m_time < 2 || m_radial < 2 {
        return Err(CalorixError::InvalidResolution(format!(
            "all resolutions must be >= 2 (got angular {m_angular}, time {m_time}, radial {m_radial})"
        )));
    }

    let angular = if n == 2 {
        AngularGrid { polar_nodes: vec![], polar_weights: vec![], periodic: m_angular }
    } else {
        let gl = GaussLegendre::new((m_angular / 2).max(2));
        let (nodes, weights) = gl.mapped(0.0, PI).unzip();
        AngularGrid { polar_nodes: nodes, polar_weights: weights, periodic: m_angular }
    };

    let boundary: Vec<BoundaryPoint> = (0..angular.len())
        .map(|idx| {
            let param = angular.param(idx);
            let sp = cross_section.surface(param);
            let (nu3, jac) = cross_section.inward_normal(param);
            let nu = nu3[..n].to_vec();
            let mut conormal = vec![0.0; n];
            a.apply(&nu, &mut conormal);
            BoundaryPoint {
                param,
                y: sp.y[..n].to_vec(),
                nu,
                conormal,
                jacobian: jac,
                weight: jac * angular.weight(idx),
            }
        })
        .collect();

    let time_rule = GaussLegendre::new(m_time);
    let (time_nodes, time_weights): (Vec<f64>, Vec<f64>) = time_rule.mapped(0.0, final_time).unzip();

    let mut lateral = Vec::with_capacity(boundary.len() * m_time);
    for (bi, bp) in boundary.iter().enumerate() {
        for (ti, (&s, &wt)) in time_nodes.iter().zip(&time_weights).enumerate() {
            let mut conormal = bp.conormal.clone();
            conormal.push(0.0);
            lateral.push(LateralNode {
                point: SpaceTimePoint::new(bp.y.clone(), s),
                nu: bp.nu.clone(),
                conormal,
                weight: bp.weight * wt,
                boundary_index: bi,
                time_index: ti,
            });
        }
    }

    let radial_rule = GaussLegendre::new(m_radial);
    let (radial_nodes, radial_weights): (Vec<f64>, Vec<f64>) = radial_rule.mapped(0.0, 1.0).unzip();
    let mut cap = Vec::with_capacity(m_radial * angular.len());
    for (ri, (&rho, &wr)) in radial_nodes.iter().zip(&radial_weights).enumerate() {
        for ai in 0..angular.len() {
            let (y, jac) = cross_section.cap_point(rho, angular.param(ai));
            cap.push(CapNode { y: y[..n].to_vec(), weight: wr * angular.weight(ai) * jac, radial_index: ri, angular_index: ai });
        }
    }

    let polar_bary = if angular.polar_nodes.is_empty() {
        vec![]
    } else {
        GaussLegendre::new(angular.polar_nodes.len()).barycentric_weights()
    };
    Ok(CylinderMesh {
        cross_section: cross_section.clone(),
        coefficients: a.clone(),
        final_time,
        resolution,
        angular,
        boundary,
        time_nodes,
        time_weights,
        time_bary: time_rule.barycentric_weights(),
        time_rule,
        radial_nodes,
        radial_weights,
        radial_bary: radial_rule.barycentric_weights(),
        radial_rule,
        polar_bary,
        lateral,
        cap,
    })
}

impl CylinderMesh {
    pub fn cross_section(&self) -> &CrossSection {
        &self.cross_section
    }

    pub fn coefficients(&self) -> &CoefficientMatrix {
        &self.coefficients
    }

    pub fn dim(&self) -> usize {
        self.cross_section.dim()
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn resolution(&self) -> MeshResolution {
        self.resolution
    }

    pub fn angular_grid(&self) -> &AngularGrid {
        &self.angular
    }

    pub fn boundary_points(&self) -> &[BoundaryPoint] {
        &self.boundary
    }

    pub fn time_nodes(&self) -> &[f64] {
        &self.time_nodes
    }

    pub fn time_weights(&self) -> &[f64] {
        &self.time_weights
    }

    /// Gauss rule on `[-1, 1]` underlying the time nodes.
    pub fn time_rule(&self) -> &GaussLegendre {
        &self.time_rule
    }

    pub(crate) fn time_barycentric(&self) -> &[f64] {
        &self.time_bary
    }

    pub(crate) fn radial_barycentric(&self) -> &[f64] {
        &self.radial_bary
    }

    pub(crate) fn polar_barycentric(&self) -> &[f64] {
        &self.polar_bary
    }

    pub fn radial_nodes(&self) -> &[f64] {
        &self.radial_nodes
    }

    pub fn radial_weights(&self) -> &[f64] {
        &self.radial_weights
    }

    pub fn radial_rule(&self) -> &GaussLegendre {
        &self.radial_rule
    }

    pub fn lateral_nodes(&self) -> &[LateralNode] {
        &self.lateral
    }

    pub fn cap_nodes(&self) -> &[CapNode] {
        &self.cap
    }

    /// Nodes `(y, 0)` of `Sigma_2` with weights.
    pub fn bottom_nodes(&self) -> impl Iterator<Item = (SpaceTimePoint, f64)> + '_ {
        self.cap.iter().map(|c| (SpaceTimePoint::new(c.y.clone(), 0.0), c.weight))
    }

    /// Nodes `(y, T)` of `Sigma_1` with weights.
    pub fn top_nodes(&self) -> impl Iterator<Item = (SpaceTimePoint, f64)> + '_ {
        self.cap.iter().map(|c| (SpaceTimePoint::new(c.y.clone(), self.final_time), c.weight))
    }

    pub fn region_len(&self, region: Region) -> usize {
        match region {
            Region::Lateral => self.lateral.len(),
            Region::Top | Region::Bottom => self.cap.len(),
        }
    }

    /// Sum of the quadrature weights of a region.
    pub fn region_measure(&self, region: Region) -> f64 {
        match region {
            Region::Lateral => self.lateral.iter().map(|n| n.weight).sum(),
            Region::Top | Region::Bottom => self.cap.iter().map(|n| n.weight).sum(),
        }
    }

    /// Largest spacing between neighbouring boundary points along the
    /// periodic direction.
    pub fn max_boundary_spacing(&self) -> f64 {
        let h = 2.0 * PI / self.angular.periodic as f64;
        self.boundary.iter().map(|b| b.jacobian_periodic(self.dim()) * h).fold(0.0, f64::max)
    }

    /// `(y + h nu(y), s)` for lateral node `index`; `h > 0` is the interior
    /// side, `h < 0` the exterior side.
    pub fn offset_point(&self, index: usize, h: f64) -> Result<SpaceTimePoint> {
        let node = self
            .lateral
            .get(index)
            .ok_or_else(|| CalorixError::InvalidArgument(format!("lateral node {index} out of range")))?;
        if h == 0.0 {
            return Ok(node.point.clone());
        }
        let at = |frac: f64| -> Vec<f64> { node.point.x.iter().zip(&node.nu).map(|(y, v)| y + frac * h * v).collect() };
        // the whole open segment must stay strictly on the requested side
        const SAMPLES: usize = 32;
        for k in 1..=SAMPLES {
            let rho = self.cross_section.radial_coordinate(&at(k as f64 / SAMPLES as f64));
            let ok = if h > 0.0 { rho < 1.0 - BOUNDARY_TOLERANCE } else { rho > 1.0 + BOUNDARY_TOLERANCE };
            if !ok {
                return Err(CalorixError::OffsetTooLarge { h });
            }
        }
        Ok(SpaceTimePoint::new(at(1.0), node.point.t))
    }

    pub fn locate(&self, p: &SpaceTimePoint) -> Location {
        let tol = BOUNDARY_TOLERANCE;
        let t_final = self.final_time;
        if p.t < -tol || p.t > t_final + tol {
            return Location::Exterior;
        }
        let rho = self.cross_section.radial_coordinate(&p.x);
        if rho > 1.0 + tol {
            return Location::Exterior;
        }
        if (rho - 1.0).abs() <= tol {
            return Location::Boundary(Region::Lateral);
        }
        if p.t.abs() <= tol {
            return Location::Boundary(Region::Bottom);
        }
        if (p.t - t_final).abs() <= tol {
            return Location::Boundary(Region::Top);
        }
        Location::Interior
    }

    /// Closest boundary parameter and distance from a spatial point (2D).
    pub fn closest_boundary_param(&self, x: &[f64]) -> ([f64; 2], f64) {
        closest_boundary_param(&self.cross_section, x, self.angular.periodic.max(64))
    }

    /// Writes the nodes as CSV: `region,x1,..,t,nu1,..,weight`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.dim();
        let mut header = vec!["region".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.push("t".into());
        header.extend((1..=n).map(|i| format!("nu{i}")));
        header.push("weight".into());
        writeln!(out, "{}", header.join(","))?;
        let zeros = vec![0.0; n];
        let mut row = |region: Region, x: &[f64], t: f64, nu: &[f64], w: f64| -> std::io::Result<()> {
            let mut cells = vec![region.label().to_string()];
            cells.extend(x.iter().map(|v| v.to_string()));
            cells.push(t.to_string());
            cells.extend(nu.iter().map(|v| v.to_string()));
            cells.push(w.to_string());
            writeln!(out, "{}", cells.join(","))
        };
        for c in &self.cap {
            row(Region::Bottom, &c.y, 0.0, &zeros, c.weight)?;
        }
        for l in &self.lateral {
            row(Region::Lateral, &l.point.x, l.point.t, &l.nu, l.weight)?;
        }
        for c in &self.cap {
            row(Region::Top, &c.y, self.final_time, &zeros, c.weight)?;
        }
        Ok(())
    }

    /// `t -> T - t`: the same nodes with the caps exchanged. Gauss–Legendre
    /// time nodes are symmetric, so the reflected mesh is this mesh.
    pub fn reflect_time(&self, p: &SpaceTimePoint) -> SpaceTimePoint {
        SpaceTimePoint::new(p.x.clone(), self.final_time - p.t)
    }
}

impl BoundaryPoint {
    fn jacobian_periodic(&self, n: usize) -> f64 {
        if n == 2 {
            self.jacobian
        } else {
            // |d y / d lambda| bounded by the area element over sin(phi)
            self.jacobian / self.param[0].sin().max(1e-12)
        }
    }
}

/// Minimizes `|x - b(theta)|` over a 2D boundary: coarse scan followed by
/// golden-section refinement.
pub fn closest_boundary_param(cs: &CrossSection, x: &[f64], samples: usize) -> ([f64; 2], f64) {
    assert_eq!(cs.dim(), 2, "closest point search is implemented for planar sections");
    let dist2 = |theta: f64| {
        let y = cs.surface([theta, 0.0]).y;
        (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)
    };
    let h = 2.0 * PI / samples as f64;
    let (best, _) = (0..samples)
        .map(|j| (j, dist2(j as f64 * h)))
        .fold((0, f64::INFINITY), |acc, (j, d)| if d < acc.1 { (j, d) } else { acc });
    let (mut lo, mut hi) = ((best as f64 - 1.0) * h, (best as f64 + 1.0) * h);
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (dist2(c), dist2(d));
    for _ in 0..200 {
        if (hi - lo).abs() < 1e-15 {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = dist2(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = dist2(d);
        }
    }
    let theta = (0.5 * (lo + hi)).rem_euclid(2.0 * PI);
    ([theta, 0.0], dist2(theta).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk_mesh(a: &CoefficientMatrix) -> CylinderMesh {
        build_mesh(&CrossSection::Disk { r: 1.0 }, a, 1.0, MeshResolution::new(64, 8, 16)).unwrap()
    }

    #[test]
    fn disk_measures() {
        for a in [
            CoefficientMatrix::identity(2),
            CoefficientMatrix::new(2, &[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap(),
        ] {
            let m = disk_mesh(&a);
            assert!((m.region_measure(Region::Lateral) - 2.0 * PI).abs() < 1e-10 * 2.0 * PI);
            assert!((m.region_measure(Region::Bottom) - PI).abs() < 1e-10 * PI);
            assert!((m.region_measure(Region::Top) - PI).abs() < 1e-10 * PI);
        }
    }

    #[test]
    fn ellipse_perimeter_matches_series() {
        // Gauss–Kummer series pi (a + b) sum binom(1/2, k)^2 h^k
        let (a, b) = (2.0_f64, 1.0_f64);
        let h = ((a - b) / (a + b)).powi(2);
        let mut coeff = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            let kf = k as f64;
            coeff *= (0.5 - (kf - 1.0)) / kf;
            sum += coeff * coeff * h.powi(k);
        }
        let perimeter = PI * (a + b) * sum;
        assert!((perimeter - 9.688448).abs() < 1e-6);
        let t_final = 0.7;
        let mesh = build_mesh(
            &CrossSection::Ellipse { a, b },
            &CoefficientMatrix::identity(2),
            t_final,
            MeshResolution::new(64, 4, 4),
        )
        .unwrap();
        assert!((mesh.region_measure(Region::Lateral) / t_final - perimeter).abs() < 1e-8);
        assert!((mesh.region_measure(Region::Bottom) - 2.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn ball_measures() {
        let mesh = build_mesh(
            &CrossSection::Ball { r: 1.0 },
            &CoefficientMatrix::identity(3),
            2.0,
            MeshResolution::new(32, 4, 8),
        )
        .unwrap();
        assert!((mesh.region_measure(Region::Lateral) - 8.0 * PI).abs() < 1e-10 * 8.0 * PI);
        assert!((mesh.region_measure(Region::Bottom) - 4.0 / 3.0 * PI).abs() < 1e-10 * 4.0);
    }

    #[test]
    fn degenerate_star_is_disk() {
        let a = CoefficientMatrix::identity(2);
        let res = MeshResolution::new(32, 4, 4);
        let d = build_mesh(&CrossSection::Disk { r: 1.3 }, &a, 1.0, res).unwrap();
        let s = build_mesh(&CrossSection::Star { r0: 1.3, cos: vec![0.0, 0.0], sin: vec![0.0] }, &a, 1.0, res).unwrap();
        for (p, q) in d.lateral_nodes().iter().zip(s.lateral_nodes()) {
            for i in 0..2 {
                assert!((p.point.x[i] - q.point.x[i]).abs() < 1e-14);
                assert!((p.nu[i] - q.nu[i]).abs() < 1e-14);
            }
            assert!((p.weight - q.weight).abs() < 1e-14);
        }
        for (p, q) in d.cap_nodes().iter().zip(s.cap_nodes()) {
            assert!((p.y[0] - q.y[0]).abs() < 1e-14 && (p.weight - q.weight).abs() < 1e-14);
        }
    }

    #[test]
    fn star_validation() {
        let bad = CrossSection::Star { r0: 1.0, cos: vec![0.6], sin: vec![0.5] };
        assert!(matches!(bad.validate(), Err(CalorixError::InvalidGeometry(_))));
    }

    #[test]
    fn build_errors() {
        let a = CoefficientMatrix::identity(3);
        let err = build_mesh(&CrossSection::Disk { r: 1.0 }, &a, 1.0, MeshResolution::new(8, 4, 4)).unwrap_err();
        assert!(matches!(err, CalorixError::DimensionMismatch { .. }));
        let a = CoefficientMatrix::identity(2);
        let err = build_mesh(&CrossSection::Disk { r: 1.0 }, &a, 1.0, MeshResolution::new(1, 4, 4)).unwrap_err();
        assert!(matches!(err, CalorixError::InvalidResolution(_)));
    }

    #[test]
    fn normals_are_inward_unit_and_conormal_is_a_nu() {
        let a = CoefficientMatrix::new(2, &[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        for cs in [
            CrossSection::Disk { r: 1.0 },
            CrossSection::Ellipse { a: 2.0, b: 1.0 },
            CrossSection::Star { r0: 1.0, cos: vec![0.1, 0.05], sin: vec![0.0, 0.1] },
        ] {
            let mesh = build_mesh(&cs, &a, 1.0, MeshResolution::new(48, 4, 4)).unwrap();
            for node in mesh.lateral_nodes() {
                assert!((norm(&node.nu) - 1.0).abs() < 1e-14);
                if !matches!(cs, CrossSection::Star { .. }) {
                    let inward: f64 = node.nu.iter().zip(&node.point.x).map(|(v, y)| v * (0.0 - y)).sum();
                    assert!(inward > 0.0);
                }
                let mut an = [0.0; 2];
                a.apply(&node.nu, &mut an);
                assert_eq!(&node.conormal[..2], &an);
                assert_eq!(node.conormal[2], 0.0);
            }
        }
        let a3 = CoefficientMatrix::identity(3);
        let mesh = build_mesh(&CrossSection::Ellipsoid { a: 1.5, b: 1.0, c: 0.7 }, &a3, 1.0, MeshResolution::new(16, 2, 2)).unwrap();
        for node in mesh.lateral_nodes() {
            assert!((norm(&node.nu) - 1.0).abs() < 1e-14);
            let inward: f64 = node.nu.iter().zip(&node.point.x).map(|(v, y)| -v * y).sum();
            assert!(inward > 0.0);
        }
    }

    #[test]
    fn offset_point_examples() {
        let mesh = disk_mesh(&CoefficientMatrix::identity(2));
        let idx = 3; // boundary point 0 (angle 0), time index 3
        assert_eq!(mesh.lateral_nodes()[idx].boundary_index, 0);
        let same = mesh.offset_point(idx, 0.0).unwrap();
        assert_eq!(same, mesh.lateral_nodes()[idx].point);
        let p = mesh.offset_point(idx, 0.1).unwrap();
        assert!((p.x[0] - 0.9).abs() < 1e-15 && p.x[1].abs() < 1e-15);
        assert_eq!(p.t, mesh.lateral_nodes()[idx].point.t);
        let q = mesh.offset_point(idx, -0.1).unwrap();
        assert!((q.x[0] - 1.1).abs() < 1e-15);
        assert!(matches!(mesh.offset_point(idx, 2.0), Err(CalorixError::OffsetTooLarge { .. })));
    }

    #[test]
    fn locate_examples() {
        let mesh = disk_mesh(&CoefficientMatrix::identity(2));
        assert_eq!(mesh.locate(&SpaceTimePoint::new(vec![0.0, 0.0], 0.5)), Location::Interior);
        assert_eq!(mesh.locate(&SpaceTimePoint::new(vec![2.0, 0.0], 0.5)), Location::Exterior);
        assert_eq!(mesh.locate(&SpaceTimePoint::new(vec![0.0, 0.0], -0.1)), Location::Exterior);
        assert_eq!(mesh.locate(&SpaceTimePoint::new(vec![1.0, 0.0], 0.5)), Location::Boundary(Region::Lateral));
        assert_eq!(mesh.locate(&SpaceTimePoint::new(vec![0.2, 0.0], 0.0)), Location::Boundary(Region::Bottom));
        assert_eq!(mesh.locate(&SpaceTimePoint::new(vec![0.2, 0.0], 1.0)), Location::Boundary(Region::Top));
    }

    #[test]
    fn spectral_accuracy_on_smooth_periodic_integrand() {
        let a = CoefficientMatrix::identity(2);
        let integrate = |m: usize| -> f64 {
            let mesh = build_mesh(&CrossSection::Disk { r: 1.0 }, &a, 1.0, MeshResolution::new(m, 2, 2)).unwrap();
            mesh.boundary_points().iter().map(|b| b.weight * b.param[0].sin().exp()).sum()
        };
        let (coarse, fine) = (integrate(32), integrate(64));
        // 2 pi I_0(1)
        let exact = 2.0 * PI * 1.266_065_877_752_008_4;
        assert!((fine - exact).abs() < 1e-13);
        assert!((coarse - fine).abs() / fine.abs() < 1e-6);
    }

    #[test]
    fn closest_point_on_ellipse() {
        let cs = CrossSection::Ellipse { a: 2.0, b: 1.0 };
        let (p, d) = closest_boundary_param(&cs, &[0.0, 0.8], 64);
        assert!((p[0] - PI / 2.0).abs() < 1e-7);
        assert!((d - 0.2).abs() < 1e-12);
    }
}
